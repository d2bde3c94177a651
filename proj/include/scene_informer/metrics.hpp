#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "scene_informer/model.hpp"
#include "scene_informer/occlusion.hpp"

namespace scene_informer {

inline constexpr double kDefaultOccupancyThreshold = 0.5;

struct ClassTally {
  std::size_t correct = 0;
  std::size_t total = 0;
  // Absent for an empty class.
  std::optional<double> accuracy() const;
};

struct DisplacementTally {
  double ade_sum = 0.0;
  double fde_sum = 0.0;
  std::size_t count = 0;
  std::optional<double> min_ade() const;
  std::optional<double> min_fde() const;
};

// Accuracies are over occlusion anchors; displacement errors are split into
// observed-agent anchors and anchors placed on occluded agents.
struct MetricReport {
  std::string regime;
  ClassTally occupied;
  ClassTally free;
  DisplacementTally observed;
  DisplacementTally occluded;

  std::optional<double> acc_occ() const { return occupied.accuracy(); }
  std::optional<double> acc_free() const { return free.accuracy(); }
  void merge(const MetricReport& other);
};

// (minADE, minFDE) over modes, on means only.
std::pair<double, double> min_ade_fde(const AnchorPrediction& prediction, const std::vector<Vec2>& gt, std::size_t P);

// Adds occupancy outcomes of the occlusion anchors in `anchors`.
void score_occupancy(MetricReport& report, const std::vector<AnchorPrediction>& predictions, const AnchorSet& anchors,
                     double threshold = kDefaultOccupancyThreshold);
// Adds displacement errors of every anchor from `source` that has a future.
void score_trajectories(DisplacementTally& tally, const std::vector<AnchorPrediction>& predictions,
                        const AnchorSet& anchors, AnchorSource source, std::size_t P);

nlohmann::json report_to_json(const MetricReport& report);
// Rows: regime,anchor_class,metric,value. Absent values print as NA.
std::string reports_to_csv(const std::vector<MetricReport>& reports);

}  // namespace scene_informer
