#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scene_informer/evaluation.hpp"

namespace scene_informer {

// K = 1: each observed agent keeps its prediction-time velocity for P steps.
// Other anchors stay put. p_occ is fixed at 0.5.
class ConstantVelocityPredictor final : public Predictor {
 public:
  explicit ConstantVelocityPredictor(std::size_t P = 40, double dt = 0.1) : P_(P), dt_(dt) {}
  std::string name() const override { return "constant_velocity"; }
  std::size_t horizon() const override { return P_; }
  std::vector<std::vector<AnchorPrediction>> predict(const Sample& sample,
                                                     const std::vector<AnchorSet>& queries) const override;

 private:
  std::size_t P_;
  double dt_;
};

// Every anchor gets the same occupancy probability; trajectories stay put.
class OccupancyPriorPredictor final : public Predictor {
 public:
  explicit OccupancyPriorPredictor(double prior, std::size_t P = 40) : prior_(prior), P_(P) {}
  std::string name() const override { return "occupancy_prior"; }
  std::size_t horizon() const override { return P_; }
  double prior() const { return prior_; }
  std::vector<std::vector<AnchorPrediction>> predict(const Sample& sample,
                                                     const std::vector<AnchorSet>& queries) const override;

 private:
  double prior_;
  std::size_t P_;
};

// Occupied fraction of occlusion anchors over training samples (prepared
// scenes, the same sample seeds the trainer uses in its first epoch).
double occupancy_prior_rate(const std::vector<Scene>& scenes, std::uint64_t seed, const SampleConfig& config = {});

}  // namespace scene_informer
