// Command-line entry point: generate, train, eval, infer, params.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scene_informer/baselines.hpp"
#include "scene_informer/error.hpp"
#include "scene_informer/evaluation.hpp"
#include "scene_informer/parallel.hpp"
#include "scene_informer/scene_io.hpp"
#include "scene_informer/scene_ops.hpp"
#include "scene_informer/synth.hpp"
#include "scene_informer/training.hpp"
#include "scene_informer/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scene_informer;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
    case ErrorCode::kNonFiniteLoss:
    case ErrorCode::kSpawnExhausted:
    case ErrorCode::kDegenerateShadow:
      return 1;
    default:
      return 2;
  }
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

std::vector<Scene> load_prepared(const fs::path& path, double min_spacing) {
  std::vector<Scene> scenes = read_scenes(path);
  for (auto& s : scenes) s = prepare_scene(s, min_spacing);
  return scenes;
}

json meta(const std::string& command, json config) {
  return {{"tool_version", kToolVersion}, {"command", command}, {"config", std::move(config)}};
}

struct GenerateArgs {
  std::string template_path;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  ScenarioTemplate tmpl;
  if (!a.template_path.empty()) tmpl = template_from_json(read_json_file(a.template_path));
  validate_template(tmpl);
  std::vector<Scene> scenes(a.count);
  parallel_for(a.count, worker_count(), [&](std::size_t i) { scenes[i] = generate_scene(tmpl, a.seed + i); });
  const json config = {{"template", template_to_json(tmpl)}, {"seed", a.seed}, {"count", a.count}};
  write_scenes(a.out, scenes, meta("generate", config));

  std::size_t agents = 0, polylines = 0, pedestrians = 0;
  for (const auto& s : scenes) {
    agents += s.agents.size();
    polylines += s.map.size();
    for (const auto& agent : s.agents) pedestrians += agent.kind == AgentKind::kPedestrian;
  }
  const double n = std::max<double>(1.0, static_cast<double>(a.count));
  std::printf("wrote %zu scenes to %s\n", a.count, a.out.c_str());
  std::printf("agents/scene %.2f  pedestrians/scene %.2f  polylines/scene %.2f\n", agents / n, pedestrians / n,
              polylines / n);
  return 0;
}

struct TrainArgs {
  std::string config_path;
  std::string data;
  std::string val;
  std::string out;
  std::optional<std::int64_t> max_steps;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig config;
  if (!a.config_path.empty()) config = train_config_from_json(read_json_file(a.config_path));
  if (a.max_steps) config.max_steps = *a.max_steps;
  if (a.epochs) config.epochs = *a.epochs;
  if (a.seed) config.seed = *a.seed;

  std::vector<Scene> train = load_prepared(a.data, config.sample.min_spacing);
  std::vector<Scene> val = a.val.empty() ? std::vector<Scene>{} : load_prepared(a.val, config.sample.min_spacing);
  if (train.empty()) throw Error(ErrorCode::kConfig, "--data: no scenes in '" + a.data + "'");
  fs::create_directories(a.out);
  std::ofstream log(fs::path(a.out) / "train_log.jsonl", std::ios::trunc);
  if (!log) throw Error(ErrorCode::kIo, "cannot write training log in '" + a.out + "'");
  log << json{{"_meta", meta("train", train_config_to_json(config))}}.dump() << '\n';

  TrainingRun run{a.out, &log, [](const std::string& msg) { std::printf("%s\n", msg.c_str()); }};
  const auto trainer = run_training(config, std::move(train), val, run);
  std::printf("trained %lld steps, final checkpoint %s\n", static_cast<long long>(trainer->step_count()),
              (fs::path(a.out) / "final.ckpt").c_str());
  return 0;
}

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string sweep = "0,25,50,75,100";
  std::string out;
  std::string baseline = "model";
  double prior = -1.0;
  std::string prior_data;
  std::uint64_t seed = 0;
  double threshold = kDefaultOccupancyThreshold;
  int n_anchors = kDefaultOcclusionAnchors;
};

int cmd_eval(const EvalArgs& a) {
  EvalConfig config;
  config.sweep = parse_sweep(a.sweep);
  config.seed = a.seed;
  config.occupancy_threshold = a.threshold;
  config.sample.n_occ_anchors = a.n_anchors;
  config.threads = worker_count();

  std::unique_ptr<SceneInformer<float>> model;
  std::unique_ptr<Predictor> predictor;
  json echo = {{"sweep", config.sweep}, {"seed", a.seed}, {"threshold", a.threshold}, {"n_anchors", a.n_anchors},
               {"predictor", a.baseline}, {"data", a.data}};
  if (a.baseline == "model") {
    if (a.ckpt.empty()) throw Error(ErrorCode::kConfig, "--ckpt is required for the model predictor");
    const Checkpoint ckpt = load_checkpoint(a.ckpt);
    model = model_from_checkpoint(ckpt);
    predictor = std::make_unique<ModelPredictor>(*model);
    echo["ckpt"] = a.ckpt;
    echo["model"] = ckpt.config.at("model");
  } else if (a.baseline == "constant_velocity") {
    predictor = std::make_unique<ConstantVelocityPredictor>();
  } else if (a.baseline == "occupancy_prior") {
    double prior = a.prior;
    if (prior < 0.0) {
      if (a.prior_data.empty()) throw Error(ErrorCode::kConfig, "occupancy_prior needs --prior or --prior-data");
      prior = occupancy_prior_rate(load_prepared(a.prior_data, config.sample.min_spacing), a.seed, config.sample);
    }
    echo["prior"] = prior;
    predictor = std::make_unique<OccupancyPriorPredictor>(prior);
  } else {
    throw Error(ErrorCode::kConfig, "--baseline: expected model, constant_velocity or occupancy_prior");
  }

  std::vector<Scene> scenes = load_prepared(a.data, config.sample.min_spacing);
  std::sort(scenes.begin(), scenes.end(), [](const Scene& x, const Scene& y) { return x.scene_id < y.scene_id; });
  const std::vector<MetricReport> reports = evaluate(*predictor, scenes, config);

  json out = {{"_meta", meta("eval", echo)}, {"reports", json::array()}};
  for (const auto& r : reports) out["reports"].push_back(report_to_json(r));
  fs::path json_path = a.out;
  json_path.replace_extension(".json");
  fs::path csv_path = a.out;
  csv_path.replace_extension(".csv");
  write_text(json_path, out.dump(2) + "\n");
  write_text(csv_path, "# " + json{{"tool_version", kToolVersion}, {"config", echo}}.dump() + "\n" +
                           reports_to_csv(reports));
  for (const auto& r : reports) {
    auto show = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("NA"); };
    std::printf("%-5s acc_occ %s acc_free %s | observed minADE %s minFDE %s | occluded minADE %s minFDE %s\n",
                r.regime.c_str(), show(r.acc_occ()).c_str(), show(r.acc_free()).c_str(),
                show(r.observed.min_ade()).c_str(), show(r.observed.min_fde()).c_str(),
                show(r.occluded.min_ade()).c_str(), show(r.occluded.min_fde()).c_str());
  }
  std::printf("wrote %s and %s\n", json_path.c_str(), csv_path.c_str());
  return 0;
}

struct InferArgs {
  std::string ckpt;
  std::string scene_file;
  std::string scene_id;
  std::string occluder_id;
  int n_anchors = kDefaultOcclusionAnchors;
  std::string out;
  std::uint64_t seed = 0;
};

int cmd_infer(const InferArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  const auto model = model_from_checkpoint(ckpt);
  const std::vector<Scene> scenes = read_scenes(a.scene_file);
  const auto it = std::find_if(scenes.begin(), scenes.end(), [&](const Scene& s) { return s.scene_id == a.scene_id; });
  if (it == scenes.end()) throw Error(ErrorCode::kConfig, "--scene-id: '" + a.scene_id + "' not in " + a.scene_file);
  if (a.n_anchors < 1) throw Error(ErrorCode::kConfig, "--n-anchors: must be positive");

  const Rigid2 to_global = ego_frame_transform(*it).inverse();
  const Scene scene = prepare_scene(*it);
  SampleConfig sample_config;
  sample_config.n_occ_anchors = a.n_anchors;
  const Sample sample =
      make_query_sample(scene, ObservabilityRegime::single_occluder(a.occluder_id), a.occluder_id, a.seed, sample_config);
  const auto preds = ModelPredictor(*model).predict(sample, {sample.anchors}).front();

  const std::size_t P = static_cast<std::size_t>(model->config().P);
  const std::size_t K = model->config().K;
  json anchors = json::array();
  for (std::size_t i = 0; i < sample.anchors.size(); ++i) {
    const Anchor& anchor = sample.anchors.anchors[i];
    const Vec2 at = to_global.apply(anchor.position);
    json means = json::array();
    for (std::size_t k = 0; k < K; ++k) {
      json mode = json::array();
      for (std::size_t t = 0; t < P; ++t) {
        const Vec2 m = to_global.apply({preds[i].mean_x(k, t, P), preds[i].mean_y(k, t, P)});
        mode.push_back({m.x, m.y});
      }
      means.push_back(std::move(mode));
    }
    anchors.push_back({{"source", anchor.source == AnchorSource::kObservedAgent ? "observed_agent" : "occlusion"},
                       {"source_id", anchor.source_id},
                       {"x", at.x},
                       {"y", at.y},
                       {"p_occ", preds[i].p_occ},
                       {"mode_probs", preds[i].mode_probs},
                       {"means", std::move(means)},
                       {"gt_occupied", anchor.gt_occupied}});
  }
  const json echo = {{"ckpt", a.ckpt}, {"scene_file", a.scene_file}, {"scene_id", a.scene_id},
                     {"occluder_id", a.occluder_id}, {"n_anchors", a.n_anchors}, {"seed", a.seed}};
  json out = {{"_meta", meta("infer", echo)}, {"scene_id", a.scene_id}, {"occluder_id", a.occluder_id},
              {"frame", "scene"}, {"anchors", std::move(anchors)}};
  write_text(a.out, out.dump(2) + "\n");
  std::printf("wrote %zu anchor predictions (%zu occlusion, %zu observed) to %s\n", sample.anchors.size(),
              sample.anchors.count(AnchorSource::kOcclusion), sample.anchors.count(AnchorSource::kObservedAgent),
              a.out.c_str());
  return 0;
}

int cmd_params() {
  for (const auto& [name, config] : {std::pair{"desk_scale", ModelConfig::desk_scale()},
                                     std::pair{"full_scale", ModelConfig::full_scale()}}) {
    const SceneInformer<float> model(config);
    std::printf("%-10s d_model %zu ff %zu enc %zux%zu dec %zu K %zu: %zu parameters\n", name, config.d_model,
                config.ff_dim, config.enc_layers, config.enc_heads, config.dec_layers, config.K,
                model.parameters().scalar_count());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occlusion-aware anchor prediction on synthetic BEV scenes"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate synthetic scenes");
  generate->add_option("--template", gen.template_path, "Scenario template JSON");
  generate->add_option("--count", gen.count, "Number of scenes")->required();
  generate->add_option("--seed", gen.seed, "First scene seed");
  generate->add_option("--out", gen.out, "Output scene file (JSON lines)")->required();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", tr.config_path, "Training config JSON");
  train->add_option("--data", tr.data, "Training scenes")->required();
  train->add_option("--val", tr.val, "Validation scenes");
  train->add_option("--out", tr.out, "Output directory")->required();
  train->add_option("--max-steps", tr.max_steps, "Override training.max_steps");
  train->add_option("--epochs", tr.epochs, "Override training.epochs");
  train->add_option("--seed", tr.seed, "Override training.seed");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate over the observability sweep");
  eval->add_option("--ckpt", ev.ckpt, "Model checkpoint");
  eval->add_option("--data", ev.data, "Test scenes")->required();
  eval->add_option("--sweep", ev.sweep, "Comma-separated occluder percentages");
  eval->add_option("--out", ev.out, "Report path; .json and .csv are written")->required();
  eval->add_option("--baseline", ev.baseline, "model, constant_velocity or occupancy_prior");
  eval->add_option("--prior", ev.prior, "Occupancy prior for occupancy_prior");
  eval->add_option("--prior-data", ev.prior_data, "Training scenes to estimate the occupancy prior");
  eval->add_option("--seed", ev.seed, "Regime and anchor seed");
  eval->add_option("--threshold", ev.threshold, "Occupancy threshold");
  eval->add_option("--n-anchors", ev.n_anchors, "Occlusion anchors per sample");

  InferArgs in;
  auto* infer = app.add_subcommand("infer", "Query one occlusion of one scene");
  infer->add_option("--ckpt", in.ckpt, "Model checkpoint")->required();
  infer->add_option("--scene-file", in.scene_file, "Scene file")->required();
  infer->add_option("--scene-id", in.scene_id, "Scene id")->required();
  infer->add_option("--occluder-id", in.occluder_id, "Agent casting the occlusion")->required();
  infer->add_option("--n-anchors", in.n_anchors, "Occlusion anchors");
  infer->add_option("--out", in.out, "Output JSON")->required();
  infer->add_option("--seed", in.seed, "Anchor sampling seed");

  auto* params = app.add_subcommand("params", "Report parameter counts of the presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen);
    if (train->parsed()) return cmd_train(tr);
    if (eval->parsed()) return cmd_eval(ev);
    if (infer->parsed()) return cmd_infer(in);
    if (params->parsed()) return cmd_params();
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: io: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
