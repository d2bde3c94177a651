#include "scene_informer/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

#include "scene_informer/error.hpp"

namespace scene_informer {

std::optional<double> ClassTally::accuracy() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::optional<double> DisplacementTally::min_ade() const {
  if (count == 0) return std::nullopt;
  return ade_sum / static_cast<double>(count);
}

std::optional<double> DisplacementTally::min_fde() const {
  if (count == 0) return std::nullopt;
  return fde_sum / static_cast<double>(count);
}

void MetricReport::merge(const MetricReport& o) {
  occupied.correct += o.occupied.correct;
  occupied.total += o.occupied.total;
  free.correct += o.free.correct;
  free.total += o.free.total;
  for (auto [dst, src] : {std::pair{&observed, &o.observed}, std::pair{&occluded, &o.occluded}}) {
    dst->ade_sum += src->ade_sum;
    dst->fde_sum += src->fde_sum;
    dst->count += src->count;
  }
}

std::pair<double, double> min_ade_fde(const AnchorPrediction& prediction, const std::vector<Vec2>& gt, std::size_t P) {
  if (gt.size() != P || P == 0) throw Error(ErrorCode::kShapeMismatch, "min_ade_fde: gt must hold P positions");
  const std::size_t K = prediction.mode_probs.size();
  double best_ade = std::numeric_limits<double>::infinity();
  double best_fde = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    double total = 0.0;
    double last = 0.0;
    for (std::size_t t = 0; t < P; ++t) {
      last = distance({prediction.mean_x(k, t, P), prediction.mean_y(k, t, P)}, gt[t]);
      total += last;
    }
    best_ade = std::min(best_ade, total / static_cast<double>(P));
    best_fde = std::min(best_fde, last);
  }
  return {best_ade, best_fde};
}

void score_occupancy(MetricReport& report, const std::vector<AnchorPrediction>& predictions, const AnchorSet& anchors,
                     double threshold) {
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Anchor& a = anchors.anchors[i];
    if (a.source != AnchorSource::kOcclusion) continue;
    const bool says_occupied = predictions[i].p_occ >= threshold;
    ClassTally& tally = a.gt_occupied ? report.occupied : report.free;
    ++tally.total;
    if (says_occupied == a.gt_occupied) ++tally.correct;
  }
}

void score_trajectories(DisplacementTally& tally, const std::vector<AnchorPrediction>& predictions,
                        const AnchorSet& anchors, AnchorSource source, std::size_t P) {
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Anchor& a = anchors.anchors[i];
    if (a.source != source || a.gt_future.empty()) continue;
    const auto [ade, fde] = min_ade_fde(predictions[i], a.gt_future, P);
    tally.ade_sum += ade;
    tally.fde_sum += fde;
    ++tally.count;
  }
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::string format_value(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", *v);
  return buf;
}

}  // namespace

nlohmann::json report_to_json(const MetricReport& r) {
  return {{"regime", r.regime},
          {"occlusion",
           {{"acc_occ", optional_json(r.acc_occ())},
            {"acc_free", optional_json(r.acc_free())},
            {"occupied_anchors", r.occupied.total},
            {"free_anchors", r.free.total}}},
          {"observed",
           {{"min_ade", optional_json(r.observed.min_ade())},
            {"min_fde", optional_json(r.observed.min_fde())},
            {"anchors", r.observed.count}}},
          {"occluded",
           {{"min_ade", optional_json(r.occluded.min_ade())},
            {"min_fde", optional_json(r.occluded.min_fde())},
            {"anchors", r.occluded.count}}}};
}

std::string reports_to_csv(const std::vector<MetricReport>& reports) {
  std::ostringstream out;
  out << "regime,anchor_class,metric,value\n";
  for (const auto& r : reports) {
    auto row = [&](const char* cls, const char* metric, const std::string& value) {
      out << r.regime << ',' << cls << ',' << metric << ',' << value << '\n';
    };
    row("occlusion", "acc_occ", format_value(r.acc_occ()));
    row("occlusion", "acc_free", format_value(r.acc_free()));
    row("occlusion", "occupied_count", std::to_string(r.occupied.total));
    row("occlusion", "free_count", std::to_string(r.free.total));
    row("observed", "min_ade", format_value(r.observed.min_ade()));
    row("observed", "min_fde", format_value(r.observed.min_fde()));
    row("observed", "count", std::to_string(r.observed.count));
    row("occluded", "min_ade", format_value(r.occluded.min_ade()));
    row("occluded", "min_fde", format_value(r.occluded.min_fde()));
    row("occluded", "count", std::to_string(r.occluded.count));
  }
  return out.str();
}

}  // namespace scene_informer
