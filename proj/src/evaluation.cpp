#include "scene_informer/evaluation.hpp"

#include <sstream>

#include "scene_informer/error.hpp"
#include "scene_informer/parallel.hpp"
#include "scene_informer/rng.hpp"

namespace scene_informer {

std::vector<std::vector<AnchorPrediction>> ModelPredictor::predict(const Sample& sample,
                                                                   const std::vector<AnchorSet>& queries) const {
  nn::NoGradGuard no_grad;
  const ModelConfig& c = model_.config();
  const nn::Tensor<float> embeddings = model_.encode_scene(sample.features);
  std::vector<std::vector<AnchorPrediction>> out;
  for (const auto& query : queries) {
    if (query.size() == 0) {
      out.emplace_back();
      continue;
    }
    const std::vector<Vec2> positions = anchor_positions(query);
    out.push_back(to_predictions(model_.decode_anchors(positions, embeddings), positions, c.K,
                                 static_cast<std::size_t>(c.P)));
  }
  return out;
}

std::vector<int> standard_sweep() { return {0, 25, 50, 75, 100}; }

std::string sweep_label(int percent) { return std::to_string(percent) + "%"; }

std::vector<int> parse_sweep(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    int v = -1;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v < 0 || v > 100) {
      throw Error(ErrorCode::kConfig, "sweep: '" + item + "' is not a percentage in [0, 100]");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::kConfig, "sweep: empty list");
  return out;
}

MetricReport evaluate_scene(const Predictor& predictor, const Scene& scene, int percent, const EvalConfig& config) {
  MetricReport report;
  report.regime = sweep_label(percent);
  const std::size_t P = predictor.horizon();
  const std::uint64_t seed = mix_seed(config.seed, hash_string(scene.scene_id));

  auto score_occlusion = [&](const Sample& sample) {
    const AnchorSet queries = occluded_agent_queries(sample);
    const auto preds = predictor.predict(sample, {sample.anchors, queries});
    score_occupancy(report, preds[0], sample.anchors, config.occupancy_threshold);
    score_trajectories(report.occluded, preds[1], queries, AnchorSource::kOccludedAgent, P);
    return preds[0];
  };

  if (percent == 0) {
    const Sample full = make_regime_sample(scene, ObservabilityRegime::full(), seed, config.sample);
    const auto preds = predictor.predict(full, {full.anchors});
    score_trajectories(report.observed, preds[0], full.anchors, AnchorSource::kObservedAgent, P);
    score_occlusion(make_training_sample(scene, seed, config.sample));
  } else {
    const Sample sample =
        make_regime_sample(scene, ObservabilityRegime::partial(percent / 100.0, seed), seed, config.sample);
    const auto preds = score_occlusion(sample);
    score_trajectories(report.observed, preds, sample.anchors, AnchorSource::kObservedAgent, P);
  }
  return report;
}

std::vector<MetricReport> evaluate(const Predictor& predictor, const std::vector<Scene>& scenes,
                                   const EvalConfig& config) {
  std::vector<MetricReport> reports;
  for (const int percent : config.sweep) {
    std::vector<MetricReport> per_scene(scenes.size());
    parallel_for(scenes.size(), config.threads,
                 [&](std::size_t i) { per_scene[i] = evaluate_scene(predictor, scenes[i], percent, config); });
    MetricReport merged;
    merged.regime = sweep_label(percent);
    for (const auto& r : per_scene) merged.merge(r);
    reports.push_back(merged);
  }
  return reports;
}

}  // namespace scene_informer
