#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scene_informer/tensor.hpp"

namespace scene_informer::nn {

struct AdamWConfig {
  double base_lr = 1e-4;
  std::int64_t warmup_steps = 10000;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global gradient-norm clip applied before the update; 0 disables it.
  double max_grad_norm = 0.0;
};

// Linear warmup: base_lr * min(1, step / warmup_steps).
double warmup_learning_rate(const AdamWConfig& config, std::int64_t step);

// AdamW with decoupled weight decay and bias-corrected moments. The n-th call
// to step() (1-based) uses warmup_learning_rate(n).
template <typename T>
class AdamW {
 public:
  AdamW(AdamWConfig config, std::vector<Tensor<T>> params);

  void step();
  void zero_grad();
  // L2 norm over all parameter gradients.
  double gradient_norm() const;

  std::int64_t step_count() const { return step_; }
  double current_learning_rate() const { return warmup_learning_rate(config_, step_); }
  const AdamWConfig& config() const { return config_; }

  const std::vector<std::vector<T>>& first_moments() const { return m_; }
  const std::vector<std::vector<T>>& second_moments() const { return v_; }
  // Restores moments and the step counter; shapes must match the parameters.
  void restore(std::int64_t step, std::vector<std::vector<T>> m, std::vector<std::vector<T>> v);

 private:
  AdamWConfig config_;
  std::vector<Tensor<T>> params_;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
  std::int64_t step_ = 0;
};

}  // namespace scene_informer::nn
