#pragma once

#include <cstddef>
#include <vector>

#include "scene_informer/geometry.hpp"
#include "scene_informer/model.hpp"
#include "scene_informer/occlusion.hpp"

namespace scene_informer {

struct GaussianParams {
  double mu_x = 0.0;
  double mu_y = 0.0;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double rho = 0.0;
};

// Negative log density of a bivariate Gaussian at `gt`.
// Throws Error(kInvalidArgument) unless sigma > 0 and |rho| < 1.
double gmm_step_nll(Vec2 gt, const GaussianParams& g);

// Mode whose means have the lowest average distance to `gt`; ties go to the
// lowest index. `modes[k]` holds that mode's P means.
std::size_t hard_assign(const std::vector<Vec2>& gt, const std::vector<std::vector<Vec2>>& modes);

struct LossConfig {
  // Average each term per anchor class (occupied / free) and add the class
  // means; otherwise every term is averaged over all anchors.
  bool balance_classes = true;
};

struct LossBreakdown {
  double nll_traj = 0.0;
  double ce_mode = 0.0;
  double bce_occ = 0.0;
  double total = 0.0;
  std::size_t occupied = 0;
  std::size_t free = 0;
};

template <typename T>
struct LossResult {
  nn::Tensor<T> total;  // scalar, differentiable
  LossBreakdown breakdown;
  std::vector<std::size_t> assigned_modes;  // per anchor, K for free anchors
};

// Occupied anchors pay the trajectory NLL (summed over P, mode j*, targets
// relative to the anchor), mode cross-entropy on j*, and BCE toward occupied;
// free anchors pay only BCE toward free. Occupancy BCE is computed from logits.
// Throws Error(kMissingFuture) for an occupied anchor without a P-step future
// and Error(kShapeMismatch) when predictions and anchors disagree.
template <typename T>
LossResult<T> scene_loss(const ModelOutput<T>& output, const AnchorSet& anchors, std::size_t K, std::size_t P,
                         const LossConfig& config = {});

}  // namespace scene_informer
