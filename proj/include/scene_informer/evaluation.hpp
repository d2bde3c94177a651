#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "scene_informer/metrics.hpp"
#include "scene_informer/model.hpp"
#include "scene_informer/samples.hpp"

namespace scene_informer {

// Anything that answers anchor queries for a sample. predict() returns one
// prediction list per query set, each aligned with that set's anchors, with
// absolute ego-frame means.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string name() const = 0;
  virtual std::size_t horizon() const = 0;
  virtual std::vector<std::vector<AnchorPrediction>> predict(const Sample& sample,
                                                             const std::vector<AnchorSet>& queries) const = 0;
};

// Read-only wrapper; safe to share across evaluation threads.
class ModelPredictor final : public Predictor {
 public:
  explicit ModelPredictor(const SceneInformer<float>& model) : model_(model) {}
  std::string name() const override { return "scene_informer"; }
  std::size_t horizon() const override { return static_cast<std::size_t>(model_.config().P); }
  std::vector<std::vector<AnchorPrediction>> predict(const Sample& sample,
                                                     const std::vector<AnchorSet>& queries) const override;

 private:
  const SceneInformer<float>& model_;
};

std::vector<int> standard_sweep();
// "0%" ... "100%".
std::string sweep_label(int percent);
// Parses "0,25,50"; throws Error(kConfig) on values outside [0, 100].
std::vector<int> parse_sweep(const std::string& text);

struct EvalConfig {
  std::vector<int> sweep = standard_sweep();
  double occupancy_threshold = kDefaultOccupancyThreshold;
  std::uint64_t seed = 0;
  SampleConfig sample;
  std::size_t threads = 1;
};

// Scores one prepared scene at one sweep point.
//  0%: observed-agent errors under full observability; occupancy and occluded
//      agent errors under a single occluder.
//  p%: partial(p) with occluder draws shared across p; the occlusion of
//      interest is drawn among the active shadows.
// Occluded-agent errors always come from anchors at their true positions.
MetricReport evaluate_scene(const Predictor& predictor, const Scene& scene, int percent, const EvalConfig& config);

// One report per sweep point, merged over scenes in input order.
std::vector<MetricReport> evaluate(const Predictor& predictor, const std::vector<Scene>& scenes,
                                   const EvalConfig& config);

}  // namespace scene_informer
