#include "scene_informer/baselines.hpp"

namespace scene_informer {

namespace {

AnchorPrediction stationary(Vec2 at, std::size_t P, double p_occ) {
  AnchorPrediction p;
  p.p_occ = p_occ;
  p.mode_probs = {1.0};
  p.trajectories.resize(P * 5);
  for (std::size_t t = 0; t < P; ++t) {
    p.trajectories[t * 5] = at.x;
    p.trajectories[t * 5 + 1] = at.y;
    p.trajectories[t * 5 + 2] = 1.0;
    p.trajectories[t * 5 + 3] = 1.0;
    p.trajectories[t * 5 + 4] = 0.0;
  }
  return p;
}

}  // namespace

std::vector<std::vector<AnchorPrediction>> ConstantVelocityPredictor::predict(
    const Sample& sample, const std::vector<AnchorSet>& queries) const {
  const Scene& scene = sample.visibility.scene;
  const auto pred = static_cast<std::size_t>(scene.prediction_step());
  std::vector<std::vector<AnchorPrediction>> out;
  for (const auto& query : queries) {
    std::vector<AnchorPrediction> preds;
    for (const auto& anchor : query.anchors) {
      AnchorPrediction p = stationary(anchor.position, P_, 0.5);
      const AgentTrack* agent =
          anchor.source == AnchorSource::kObservedAgent ? scene.find_agent(anchor.source_id) : nullptr;
      if (agent != nullptr) {
        const Vec2 v = agent->states[pred].velocity();
        for (std::size_t t = 0; t < P_; ++t) {
          const double elapsed = dt_ * static_cast<double>(t + 1);
          p.trajectories[t * 5] = anchor.position.x + v.x * elapsed;
          p.trajectories[t * 5 + 1] = anchor.position.y + v.y * elapsed;
        }
      }
      preds.push_back(std::move(p));
    }
    out.push_back(std::move(preds));
  }
  return out;
}

std::vector<std::vector<AnchorPrediction>> OccupancyPriorPredictor::predict(
    const Sample&, const std::vector<AnchorSet>& queries) const {
  std::vector<std::vector<AnchorPrediction>> out;
  for (const auto& query : queries) {
    std::vector<AnchorPrediction> preds;
    for (const auto& anchor : query.anchors) preds.push_back(stationary(anchor.position, P_, prior_));
    out.push_back(std::move(preds));
  }
  return out;
}

double occupancy_prior_rate(const std::vector<Scene>& scenes, std::uint64_t seed, const SampleConfig& config) {
  std::size_t occupied = 0;
  std::size_t total = 0;
  for (const auto& scene : scenes) {
    const Sample s = make_training_sample(scene, sample_seed(seed, scene.scene_id), config);
    for (const auto& a : s.anchors.anchors) {
      if (a.source != AnchorSource::kOcclusion) continue;
      ++total;
      if (a.gt_occupied) ++occupied;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(occupied) / static_cast<double>(total);
}

}  // namespace scene_informer
