#pragma once

#include <cmath>
#include <numbers>

#include "scene_informer/geometry.hpp"
#include "scene_informer/loss.hpp"

namespace scene_informer::testing {

// Density from the explicit covariance matrix and its inverse, then -log.
inline double density_oracle_nll(Vec2 gt, const GaussianParams& g) {
  const double sxx = g.sigma_x * g.sigma_x;
  const double syy = g.sigma_y * g.sigma_y;
  const double sxy = g.rho * g.sigma_x * g.sigma_y;
  const double det = sxx * syy - sxy * sxy;
  const double ixx = syy / det, iyy = sxx / det, ixy = -sxy / det;
  const double dx = gt.x - g.mu_x, dy = gt.y - g.mu_y;
  const double q = dx * (ixx * dx + ixy * dy) + dy * (ixy * dx + iyy * dy);
  const double density = std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
  return -std::log(density);
}

}  // namespace scene_informer::testing
