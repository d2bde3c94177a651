#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <vector>

#include "json.hpp"
#include "scene_informer/checkpoint.hpp"
#include "scene_informer/loss.hpp"
#include "scene_informer/metrics.hpp"
#include "scene_informer/model.hpp"
#include "scene_informer/optim.hpp"
#include "scene_informer/rng.hpp"
#include "scene_informer/samples.hpp"

namespace scene_informer {

struct TrainConfig {
  ModelConfig model = ModelConfig::desk_scale();
  nn::AdamWConfig optimizer{.base_lr = 1e-3, .warmup_steps = 200, .max_grad_norm = 1.0};
  std::size_t batch_size = 4;
  std::size_t accumulation_steps = 2;
  std::size_t epochs = 10;
  std::int64_t max_steps = 0;  // 0: run every epoch
  std::uint64_t seed = 0;
  // Draw a fresh occluder and anchors for every scene each epoch.
  bool resample_each_epoch = true;
  LossConfig loss;
  SampleConfig sample;
  double occupancy_threshold = kDefaultOccupancyThreshold;
  std::int64_t log_every = 10;
};

// Sections "model", "optimizer", "training"; unknown keys throw Error(kConfig)
// with their path.
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& config);

struct StepRecord {
  std::int64_t step = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  LossBreakdown loss;  // mean over the step's samples
};

nlohmann::json step_record_to_json(const StepRecord& record);

// Sequential trainer over prepared scenes. Each optimizer step consumes
// batch_size * accumulation_steps samples in a seeded per-epoch order; every
// sample's loss is scaled by 1 / (batch_size * accumulation_steps) and its
// gradients accumulate before one AdamW update.
class Trainer {
 public:
  Trainer(TrainConfig config, std::vector<Scene> scenes);

  // Throws Error(kNonFiniteLoss) naming the scene when a loss is not finite.
  StepRecord step();
  bool finished() const;

  std::int64_t step_count() const { return optimizer_.step_count(); }
  std::size_t epoch() const { return epoch_; }
  const TrainConfig& config() const { return config_; }
  SceneInformer<float>& model() { return *model_; }
  const SceneInformer<float>& model() const { return *model_; }

  Checkpoint checkpoint() const;
  // Restores parameters, optimizer moments, data order and cursor.
  // Throws Error(kConfig) when the checkpoint does not fit this model.
  void restore(const Checkpoint& checkpoint);

 private:
  std::size_t next_scene();
  void shuffle();

  TrainConfig config_;
  std::vector<Scene> scenes_;
  std::unique_ptr<SceneInformer<float>> model_;
  nn::AdamW<float> optimizer_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

std::vector<NamedTensor> export_parameters(const SceneInformer<float>& model);
// Throws Error(kConfig) on a missing name or shape mismatch.
void import_parameters(SceneInformer<float>& model, const std::vector<NamedTensor>& tensors);
// Rebuilds the model stored in a checkpoint.
std::unique_ptr<SceneInformer<float>> model_from_checkpoint(const Checkpoint& checkpoint);

struct TrainingRun {
  std::filesystem::path out_dir;
  std::ostream* log = nullptr;  // JSON lines: step records and validation reports
  std::function<void(const std::string&)> progress;
};

// Full loop: steps until finished, validation (0% sweep point) and a checkpoint
// at every epoch end (epoch_<n>.ckpt), then final.ckpt. Returns the trainer.
std::unique_ptr<Trainer> run_training(const TrainConfig& config, std::vector<Scene> train, const std::vector<Scene>& val,
                                      const TrainingRun& run);

}  // namespace scene_informer
