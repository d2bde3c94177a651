#include "scene_informer/training.hpp"

#include <cmath>
#include <numeric>

#include "scene_informer/error.hpp"
#include "scene_informer/evaluation.hpp"
#include "scene_informer/version.hpp"

namespace scene_informer {

namespace {

template <typename Fn>
void read_section(const nlohmann::json& j, const std::string& section, Fn&& assign) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, section + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = true;
    try {
      known = assign(key, value);
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::kConfig, section + "." + key + ": wrong type");
    }
    if (!known) throw Error(ErrorCode::kConfig, section + "." + key + ": unknown key");
  }
}

}  // namespace

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  read_section(j, "config", [&](const std::string& key, const nlohmann::json& value) {
    if (key == "model") {
      c.model = model_config_from_json(value);
    } else if (key == "optimizer") {
      read_section(value, "optimizer", [&](const std::string& k, const nlohmann::json& v) {
        if (k == "base_lr") c.optimizer.base_lr = v.get<double>();
        else if (k == "warmup_steps") c.optimizer.warmup_steps = v.get<std::int64_t>();
        else if (k == "weight_decay") c.optimizer.weight_decay = v.get<double>();
        else if (k == "beta1") c.optimizer.beta1 = v.get<double>();
        else if (k == "beta2") c.optimizer.beta2 = v.get<double>();
        else if (k == "epsilon") c.optimizer.epsilon = v.get<double>();
        else if (k == "max_grad_norm") c.optimizer.max_grad_norm = v.get<double>();
        else return false;
        return true;
      });
    } else if (key == "training") {
      read_section(value, "training", [&](const std::string& k, const nlohmann::json& v) {
        if (k == "batch_size") c.batch_size = v.get<std::size_t>();
        else if (k == "accumulation_steps") c.accumulation_steps = v.get<std::size_t>();
        else if (k == "epochs") c.epochs = v.get<std::size_t>();
        else if (k == "max_steps") c.max_steps = v.get<std::int64_t>();
        else if (k == "seed") c.seed = v.get<std::uint64_t>();
        else if (k == "resample_each_epoch") c.resample_each_epoch = v.get<bool>();
        else if (k == "balance_classes") c.loss.balance_classes = v.get<bool>();
        else if (k == "n_occ_anchors") c.sample.n_occ_anchors = v.get<int>();
        else if (k == "min_spacing") c.sample.min_spacing = v.get<double>();
        else if (k == "max_points_per_polyline") c.sample.features.max_points_per_polyline = v.get<int>();
        else if (k == "occupancy_threshold") c.occupancy_threshold = v.get<double>();
        else if (k == "log_every") c.log_every = v.get<std::int64_t>();
        else return false;
        return true;
      });
    } else {
      return false;
    }
    return true;
  });
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, what); };
  if (c.batch_size == 0) fail("training.batch_size: must be positive");
  if (c.accumulation_steps == 0) fail("training.accumulation_steps: must be positive");
  if (c.optimizer.base_lr < 0.0) fail("optimizer.base_lr: must be non-negative");
  if (c.optimizer.warmup_steps < 0) fail("optimizer.warmup_steps: must be non-negative");
  if (c.sample.n_occ_anchors < 0) fail("training.n_occ_anchors: must be non-negative");
  if (!(c.sample.min_spacing > 0.0)) fail("training.min_spacing: must be positive");
  if (c.sample.features.max_points_per_polyline < 2) fail("training.max_points_per_polyline: must be >= 2");
  if (!(c.occupancy_threshold > 0.0 && c.occupancy_threshold < 1.0)) fail("training.occupancy_threshold: must lie in (0, 1)");
  return c;
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"model", model_config_to_json(c.model)},
          {"optimizer",
           {{"base_lr", c.optimizer.base_lr},
            {"warmup_steps", c.optimizer.warmup_steps},
            {"weight_decay", c.optimizer.weight_decay},
            {"beta1", c.optimizer.beta1},
            {"beta2", c.optimizer.beta2},
            {"epsilon", c.optimizer.epsilon},
            {"max_grad_norm", c.optimizer.max_grad_norm}}},
          {"training",
           {{"batch_size", c.batch_size},
            {"accumulation_steps", c.accumulation_steps},
            {"epochs", c.epochs},
            {"max_steps", c.max_steps},
            {"seed", c.seed},
            {"resample_each_epoch", c.resample_each_epoch},
            {"balance_classes", c.loss.balance_classes},
            {"n_occ_anchors", c.sample.n_occ_anchors},
            {"min_spacing", c.sample.min_spacing},
            {"max_points_per_polyline", c.sample.features.max_points_per_polyline},
            {"occupancy_threshold", c.occupancy_threshold},
            {"log_every", c.log_every}}}};
}

nlohmann::json step_record_to_json(const StepRecord& r) {
  return {{"step", r.step},
          {"epoch", r.epoch},
          {"lr", r.lr},
          {"loss", r.loss.total},
          {"nll_traj", r.loss.nll_traj},
          {"ce_mode", r.loss.ce_mode},
          {"bce_occ", r.loss.bce_occ}};
}

Trainer::Trainer(TrainConfig config, std::vector<Scene> scenes)
    : config_(std::move(config)),
      scenes_(std::move(scenes)),
      model_(std::make_unique<SceneInformer<float>>(config_.model)),
      optimizer_(config_.optimizer, model_->parameter_list()),
      rng_(mix_seed(config_.seed, 0x747261696eULL)) {
  if (scenes_.empty()) throw Error(ErrorCode::kInvalidArgument, "training needs at least one scene");
  order_.resize(scenes_.size());
  shuffle();
}

void Trainer::shuffle() {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_.uniform_int(i)]);
}

std::size_t Trainer::next_scene() {
  const std::size_t index = order_[cursor_++];
  if (cursor_ == order_.size()) {
    ++epoch_;
    cursor_ = 0;
    shuffle();
  }
  return index;
}

bool Trainer::finished() const {
  if (config_.max_steps > 0 && step_count() >= config_.max_steps) return true;
  return config_.max_steps <= 0 && epoch_ >= config_.epochs;
}

StepRecord Trainer::step() {
  const std::size_t samples = config_.batch_size * config_.accumulation_steps;
  const float weight = 1.0f / static_cast<float>(samples);
  const auto K = config_.model.K;
  const auto P = static_cast<std::size_t>(config_.model.P);
  StepRecord record;
  optimizer_.zero_grad();
  for (std::size_t i = 0; i < samples; ++i) {
    const std::uint64_t sample_epoch = config_.resample_each_epoch ? epoch_ : 0;
    const Scene& scene = scenes_[next_scene()];
    const Sample sample = make_training_sample(scene, sample_seed(config_.seed, scene.scene_id, sample_epoch),
                                               config_.sample);
    const std::vector<Vec2> anchors = anchor_positions(sample.anchors);
    const ModelOutput<float> out = model_->forward(sample.features, anchors);
    const LossResult<float> loss = scene_loss(out, sample.anchors, K, P, config_.loss);
    if (!std::isfinite(loss.breakdown.total)) {
      throw Error(ErrorCode::kNonFiniteLoss, "non-finite loss at step " + std::to_string(step_count() + 1) +
                                                 " on scene '" + scene.scene_id + "' (nll " +
                                                 std::to_string(loss.breakdown.nll_traj) + ", ce " +
                                                 std::to_string(loss.breakdown.ce_mode) + ", bce " +
                                                 std::to_string(loss.breakdown.bce_occ) + ")");
    }
    scale(loss.total, weight).backward();
    record.loss.nll_traj += loss.breakdown.nll_traj / static_cast<double>(samples);
    record.loss.ce_mode += loss.breakdown.ce_mode / static_cast<double>(samples);
    record.loss.bce_occ += loss.breakdown.bce_occ / static_cast<double>(samples);
    record.loss.occupied += loss.breakdown.occupied;
    record.loss.free += loss.breakdown.free;
  }
  record.loss.total = record.loss.nll_traj + record.loss.ce_mode + record.loss.bce_occ;
  optimizer_.step();
  record.step = step_count();
  record.epoch = epoch_;
  record.lr = optimizer_.current_learning_rate();
  return record;
}

std::vector<NamedTensor> export_parameters(const SceneInformer<float>& model) {
  std::vector<NamedTensor> out;
  for (const auto& [name, t] : model.parameters().named()) {
    out.push_back({name, t.shape(), std::vector<float>(t.data().begin(), t.data().end())});
  }
  return out;
}

void import_parameters(SceneInformer<float>& model, const std::vector<NamedTensor>& tensors) {
  auto& named = model.parameters().named();
  if (tensors.size() != named.size()) {
    throw Error(ErrorCode::kConfig, "checkpoint has " + std::to_string(tensors.size()) + " tensors, model has " +
                                        std::to_string(named.size()));
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    auto& [name, t] = named[i];
    if (tensors[i].name != name || tensors[i].shape != t.shape()) {
      throw Error(ErrorCode::kConfig, "checkpoint tensor '" + tensors[i].name + "' does not match parameter '" +
                                          name + "' " + nn::shape_string(t.shape()));
    }
    std::copy(tensors[i].data.begin(), tensors[i].data.end(), t.mutable_data().begin());
  }
}

std::unique_ptr<SceneInformer<float>> model_from_checkpoint(const Checkpoint& checkpoint) {
  if (!checkpoint.config.contains("model")) throw Error(ErrorCode::kConfig, "checkpoint config lacks a model section");
  auto model = std::make_unique<SceneInformer<float>>(model_config_from_json(checkpoint.config.at("model")));
  import_parameters(*model, checkpoint.parameters);
  return model;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.config = {{"tool_version", kToolVersion}, {"model", model_config_to_json(config_.model)}};
  c.parameters = export_parameters(*model_);
  c.optimizer_step = optimizer_.step_count();
  const auto& named = model_->parameters().named();
  for (std::size_t i = 0; i < named.size(); ++i) {
    c.first_moments.push_back({named[i].first, named[i].second.shape(), optimizer_.first_moments()[i]});
    c.second_moments.push_back({named[i].first, named[i].second.shape(), optimizer_.second_moments()[i]});
  }
  c.rng_state = rng_.state();
  c.step = step_count();
  c.trainer_state = {{"epoch", epoch_}, {"cursor", cursor_}, {"order", order_},
                     {"config", train_config_to_json(config_)}};
  return c;
}

void Trainer::restore(const Checkpoint& c) {
  import_parameters(*model_, c.parameters);
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  for (const auto& t : c.first_moments) m.push_back(t.data);
  for (const auto& t : c.second_moments) v.push_back(t.data);
  try {
    optimizer_.restore(c.optimizer_step, std::move(m), std::move(v));
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, std::string("checkpoint optimizer state: ") + e.what());
  }
  rng_.set_state(c.rng_state);
  try {
    epoch_ = c.trainer_state.at("epoch").get<std::size_t>();
    cursor_ = c.trainer_state.at("cursor").get<std::size_t>();
    order_ = c.trainer_state.at("order").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("checkpoint trainer state: ") + e.what());
  }
  if (order_.size() != scenes_.size() || cursor_ >= order_.size()) {
    throw Error(ErrorCode::kConfig, "checkpoint data order covers " + std::to_string(order_.size()) +
                                        " scenes, training set has " + std::to_string(scenes_.size()));
  }
}

std::unique_ptr<Trainer> run_training(const TrainConfig& config, std::vector<Scene> train,
                                      const std::vector<Scene>& val, const TrainingRun& run) {
  auto trainer = std::make_unique<Trainer>(config, std::move(train));
  auto log = [&](const nlohmann::json& record) {
    if (run.log) *run.log << record.dump() << '\n' << std::flush;
  };
  auto end_epoch = [&](std::size_t epoch) {
    nlohmann::json record = {{"epoch", epoch}, {"step", trainer->step_count()}};
    if (!val.empty()) {
      EvalConfig eval;
      eval.sweep = {0};
      eval.seed = config.seed;
      eval.sample = config.sample;
      eval.occupancy_threshold = config.occupancy_threshold;
      eval.threads = 1;
      record["validation"] = report_to_json(evaluate(ModelPredictor(trainer->model()), val, eval).front());
    }
    log(record);
    if (!run.out_dir.empty()) {
      save_checkpoint(run.out_dir / ("epoch_" + std::to_string(epoch) + ".ckpt"), trainer->checkpoint());
    }
    if (run.progress) run.progress("epoch " + std::to_string(epoch) + " done at step " + std::to_string(trainer->step_count()));
  };

  std::size_t epoch = trainer->epoch();
  while (!trainer->finished()) {
    const StepRecord r = trainer->step();
    if (config.log_every > 0 && (r.step % config.log_every == 0 || r.step == 1)) log(step_record_to_json(r));
    while (epoch < trainer->epoch()) end_epoch(++epoch);
  }
  if (!run.out_dir.empty()) save_checkpoint(run.out_dir / "final.ckpt", trainer->checkpoint());
  return trainer;
}

}  // namespace scene_informer
