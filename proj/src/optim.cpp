#include "scene_informer/optim.hpp"

#include <algorithm>
#include <cmath>

#include "scene_informer/error.hpp"

namespace scene_informer::nn {

double warmup_learning_rate(const AdamWConfig& config, std::int64_t step) {
  if (config.warmup_steps <= 0) return config.base_lr;
  const double frac = static_cast<double>(step) / static_cast<double>(config.warmup_steps);
  return config.base_lr * std::min(1.0, std::max(0.0, frac));
}

template <typename T>
AdamW<T>::AdamW(AdamWConfig config, std::vector<Tensor<T>> params) : config_(config), params_(std::move(params)) {
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), T(0));
    v_.emplace_back(p.numel(), T(0));
  }
}

template <typename T>
void AdamW<T>::step() {
  ++step_;
  const double lr = warmup_learning_rate(config_, step_);
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  const T b1 = static_cast<T>(config_.beta1);
  const T b2 = static_cast<T>(config_.beta2);
  const T step_size = static_cast<T>(lr / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(config_.epsilon);
  const T decay = static_cast<T>(1.0 - lr * config_.weight_decay);
  T clip = T(1);
  if (config_.max_grad_norm > 0.0) {
    const double total = gradient_norm();
    if (total > config_.max_grad_norm) clip = static_cast<T>(config_.max_grad_norm / total);
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    if (!p.has_grad()) continue;
    auto value = p.mutable_data();
    const auto grad = p.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const T g = clip * grad[i];
      m[i] = b1 * m[i] + (T(1) - b1) * g;
      v[i] = b2 * v[i] + (T(1) - b2) * g * g;
      value[i] = decay * value[i] - step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_bc2 + eps);
    }
  }
}

template <typename T>
double AdamW<T>::gradient_norm() const {
  double sum = 0.0;
  for (const auto& p : params_) {
    if (!p.has_grad()) continue;
    for (const T g : p.grad()) sum += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(sum);
}

template <typename T>
void AdamW<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
void AdamW<T>::restore(std::int64_t step, std::vector<std::vector<T>> m, std::vector<std::vector<T>> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "optimizer state has " + std::to_string(m.size()) + " buffers for " +
                                               std::to_string(params_.size()) + " parameters");
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (m[k].size() != params_[k].numel() || v[k].size() != params_[k].numel()) {
      throw Error(ErrorCode::kShapeMismatch, "optimizer moment " + std::to_string(k) + " size mismatch");
    }
  }
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace scene_informer::nn
