#include "scene_informer/loss.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "scene_informer/error.hpp"

namespace scene_informer {

using nn::Tensor;

double gmm_step_nll(Vec2 gt, const GaussianParams& g) {
  if (!(g.sigma_x > 0.0) || !(g.sigma_y > 0.0) || !(std::abs(g.rho) < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gmm_step_nll: need sigma > 0 and |rho| < 1");
  }
  const double dx = (gt.x - g.mu_x) / g.sigma_x;
  const double dy = (gt.y - g.mu_y) / g.sigma_y;
  const double one_minus = 1.0 - g.rho * g.rho;
  return std::log(2.0 * std::numbers::pi) + std::log(g.sigma_x) + std::log(g.sigma_y) + 0.5 * std::log(one_minus) +
         (dx * dx + dy * dy - 2.0 * g.rho * dx * dy) / (2.0 * one_minus);
}

std::size_t hard_assign(const std::vector<Vec2>& gt, const std::vector<std::vector<Vec2>>& modes) {
  if (modes.empty()) throw Error(ErrorCode::kInvalidArgument, "hard_assign: no modes");
  std::size_t best = 0;
  double best_ade = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (modes[k].size() != gt.size()) throw Error(ErrorCode::kShapeMismatch, "hard_assign: mode length differs from gt");
    double total = 0.0;
    for (std::size_t t = 0; t < gt.size(); ++t) total += distance(modes[k][t], gt[t]);
    const double ade = gt.empty() ? 0.0 : total / static_cast<double>(gt.size());
    if (ade < best_ade) {
      best_ade = ade;
      best = k;
    }
  }
  nn::BranchTrace::record(static_cast<std::uint32_t>(best));
  return best;
}

template <typename T>
LossResult<T> scene_loss(const ModelOutput<T>& output, const AnchorSet& anchors, std::size_t K, std::size_t P,
                         const LossConfig& config) {
  const std::size_t n = anchors.size();
  if (output.occupancy_logit.numel() != n || output.mode_logits.numel() != n * K ||
      output.trajectory.numel() != n * K * P * 5) {
    throw Error(ErrorCode::kShapeMismatch, "scene_loss: predictions do not match " + std::to_string(n) + " anchors");
  }
  LossResult<T> result;
  result.assigned_modes.assign(n, K);

  std::vector<std::size_t> occupied;
  std::vector<std::size_t> free;
  for (std::size_t a = 0; a < n; ++a) (anchors.anchors[a].gt_occupied ? occupied : free).push_back(a);

  const auto traj = output.trajectory.data();
  std::vector<std::size_t> nll_rows;
  std::vector<T> targets;
  std::vector<std::size_t> mode_index;
  for (const std::size_t a : occupied) {
    const Anchor& anchor = anchors.anchors[a];
    if (anchor.gt_future.size() != P) {
      throw Error(ErrorCode::kMissingFuture, "scene_loss: occupied anchor " + std::to_string(a) + " has " +
                                                 std::to_string(anchor.gt_future.size()) + " future steps, need " +
                                                 std::to_string(P));
    }
    std::vector<Vec2> gt(P);
    for (std::size_t t = 0; t < P; ++t) gt[t] = anchor.gt_future[t] - anchor.position;
    std::vector<std::vector<Vec2>> modes(K, std::vector<Vec2>(P));
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t t = 0; t < P; ++t) {
        const std::size_t row = (a * K + k) * P + t;
        modes[k][t] = {static_cast<double>(traj[row * 5]), static_cast<double>(traj[row * 5 + 1])};
      }
    }
    const std::size_t j = hard_assign(gt, modes);
    result.assigned_modes[a] = j;
    mode_index.push_back(a * K + j);
    for (std::size_t t = 0; t < P; ++t) {
      nll_rows.push_back((a * K + j) * P + t);
      targets.push_back(static_cast<T>(gt[t].x));
      targets.push_back(static_cast<T>(gt[t].y));
    }
  }

  const T n_occ = static_cast<T>(occupied.size());
  const T n_free = static_cast<T>(free.size());
  const T n_all = static_cast<T>(n);
  const T occ_weight = config.balance_classes ? T(1) / n_occ : T(1) / n_all;
  const T free_weight = config.balance_classes ? T(1) / n_free : T(1) / n_all;

  std::vector<Tensor<T>> terms;
  if (!occupied.empty()) {
    const Tensor<T> nll =
        scale(sum(bivariate_nll(gather_rows(output.trajectory, nll_rows), targets)), occ_weight);
    const Tensor<T> ce = scale(sum(take(log_softmax(output.mode_logits, 1), mode_index)), -occ_weight);
    const Tensor<T> bce = scale(sum(softplus(scale(take(output.occupancy_logit, occupied), T(-1)))), occ_weight);
    result.breakdown.nll_traj = static_cast<double>(nll.item());
    result.breakdown.ce_mode = static_cast<double>(ce.item());
    result.breakdown.bce_occ += static_cast<double>(bce.item());
    terms.insert(terms.end(), {nll, ce, bce});
  }
  if (!free.empty()) {
    const Tensor<T> bce = scale(sum(softplus(take(output.occupancy_logit, free))), free_weight);
    result.breakdown.bce_occ += static_cast<double>(bce.item());
    terms.push_back(bce);
  }
  Tensor<T> total = terms.empty() ? Tensor<T>::scalar(T(0)) : terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
  result.total = total;
  result.breakdown.total = result.breakdown.nll_traj + result.breakdown.ce_mode + result.breakdown.bce_occ;
  result.breakdown.occupied = occupied.size();
  result.breakdown.free = free.size();
  return result;
}

template LossResult<float> scene_loss(const ModelOutput<float>&, const AnchorSet&, std::size_t, std::size_t,
                                      const LossConfig&);
template LossResult<double> scene_loss(const ModelOutput<double>&, const AnchorSet&, std::size_t, std::size_t,
                                       const LossConfig&);

}  // namespace scene_informer
