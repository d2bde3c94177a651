#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "scene_informer/nn.hpp"
#include "support/gradcheck.hpp"

namespace scene_informer::testing {

// One differentiable op or layer; `run` builds a random instance from `seed`
// and returns its finite-difference comparison.
struct GradCase {
  std::string name;
  std::function<GradCheckResult(std::uint64_t seed)> run;
};

namespace detail {

// Values bounded away from zero so ReLU kinks sit outside the FD stencil.
inline TensorD away_from_zero(Rng& rng, nn::Shape shape, double margin = 0.05) {
  const std::size_t n = nn::shape_numel(shape);
  std::vector<double> v(n);
  for (auto& x : v) x = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(margin, 1.0);
  return TensorD::parameter(std::move(shape), std::move(v));
}

// Distinct values spaced well beyond the FD step so argmax never flips.
inline TensorD well_separated(Rng& rng, nn::Shape shape) {
  const std::size_t n = nn::shape_numel(shape);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n) + rng.uniform(0.0, 0.5 / n);
  for (std::size_t i = n; i > 1; --i) std::swap(v[i - 1], v[rng.uniform_int(i)]);
  return TensorD::parameter(std::move(shape), std::move(v));
}

inline std::vector<TensorD> params_of(const nn::ParameterStore<double>& store) {
  std::vector<TensorD> out;
  for (const auto& [name, t] : store.named()) out.push_back(t);
  return out;
}

inline nn::Mask random_mask(Rng& rng, std::size_t n, double p_invalid) {
  nn::Mask m(n);
  for (auto& x : m) x = rng.bernoulli(p_invalid) ? 1 : 0;
  m[rng.uniform_int(n)] = 0;
  return m;
}

template <typename Op>
GradCase unary(const std::string& name, Op op, double lo = -1.0, double hi = 1.0) {
  return {name, [=](std::uint64_t seed) {
            Rng rng(seed);
            const std::size_t r = 1 + rng.uniform_int(std::size_t{4}), c = 1 + rng.uniform_int(std::size_t{5});
            TensorD x = random_leaf(rng, {r, c}, lo, hi);
            return gradcheck([=] { return project(op(x), seed + 1); }, {x});
          }};
}

}  // namespace detail

inline std::vector<GradCase> op_cases() {
  using namespace nn;
  using detail::unary;
  std::vector<GradCase> cases;
  cases.push_back({"matmul", [](std::uint64_t seed) {
                     Rng rng(seed);
                     const std::size_t m = 1 + rng.uniform_int(std::size_t{4}), k = 1 + rng.uniform_int(std::size_t{5}),
                                       n = 1 + rng.uniform_int(std::size_t{4});
                     TensorD a = random_leaf(rng, {m, k}), b = random_leaf(rng, {k, n});
                     return gradcheck([=] { return project(matmul(a, b), seed + 1); }, {a, b});
                   }});
  cases.push_back({"linear", [](std::uint64_t seed) {
                     Rng rng(seed);
                     TensorD x = random_leaf(rng, {3, 4}), w = random_leaf(rng, {4, 2}), b = random_leaf(rng, {2});
                     return gradcheck([=] { return project(linear(x, w, b), seed + 1); }, {x, w, b});
                   }});
  for (const bool broadcast : {false, true}) {
    cases.push_back({broadcast ? "add_row_broadcast" : "add", [broadcast](std::uint64_t seed) {
                       Rng rng(seed);
                       TensorD a = random_leaf(rng, {3, 4});
                       TensorD b = broadcast ? random_leaf(rng, {4}) : random_leaf(rng, {3, 4});
                       return gradcheck([=] { return project(add(a, b), seed + 1); }, {a, b});
                     }});
  }
  cases.push_back({"sub", [](std::uint64_t seed) {
                     Rng rng(seed);
                     TensorD a = random_leaf(rng, {2, 5}), b = random_leaf(rng, {2, 5});
                     return gradcheck([=] { return project(sub(a, b), seed + 1); }, {a, b});
                   }});
  cases.push_back({"mul", [](std::uint64_t seed) {
                     Rng rng(seed);
                     TensorD a = random_leaf(rng, {3, 3}), b = random_leaf(rng, {3, 3});
                     return gradcheck([=] { return project(mul(a, b), seed + 1); }, {a, b});
                   }});
  cases.push_back(unary("scale", [](const TensorD& x) { return scale(x, 2.5); }));
  for (const std::size_t axis : {0u, 1u}) {
    cases.push_back({"concat_axis" + std::to_string(axis), [axis](std::uint64_t seed) {
                       Rng rng(seed);
                       TensorD a = random_leaf(rng, {2, 3}), b = random_leaf(rng, axis == 0 ? Shape{4, 3} : Shape{2, 1});
                       return gradcheck([=] { return project(concat<double>({a, b}, axis), seed + 1); }, {a, b});
                     }});
  }
  cases.push_back(unary("slice", [](const TensorD& x) { return slice(x, 1, 0, 1); }));
  cases.push_back(unary("transpose", [](const TensorD& x) { return transpose(x); }));
  cases.push_back(unary("reshape", [](const TensorD& x) { return reshape(x, {x.numel()}); }));
  cases.push_back({"relu", [](std::uint64_t seed) {
                     Rng rng(seed);
                     TensorD x = detail::away_from_zero(rng, {3, 4});
                     return gradcheck([=] { return project(relu(x), seed + 1); }, {x});
                   }});
  cases.push_back(unary("tanh", [](const TensorD& x) { return nn::tanh(x); }, -2.0, 2.0));
  cases.push_back(unary("exp", [](const TensorD& x) { return nn::exp(x); }, -2.0, 2.0));
  cases.push_back(unary("log", [](const TensorD& x) { return nn::log(x); }, 0.2, 3.0));
  cases.push_back(unary("sigmoid", [](const TensorD& x) { return sigmoid(x); }, -3.0, 3.0));
  cases.push_back(unary("softplus", [](const TensorD& x) { return softplus(x); }, -3.0, 3.0));
  cases.push_back({"clamp", [](std::uint64_t seed) {
                     Rng rng(seed);
                     std::vector<double> v(12);
                     for (auto& x : v) {
                       const int region = rng.uniform_int(0, 2);
                       x = region == 0 ? rng.uniform(-2.0, -1.1) : region == 1 ? rng.uniform(-0.9, 0.9) : rng.uniform(1.1, 2.0);
                     }
                     TensorD x = TensorD::parameter({3, 4}, v);
                     return gradcheck([=] { return project(clamp(x, -1.0, 1.0), seed + 1); }, {x});
                   }});
  for (const std::size_t axis : {0u, 1u}) {
    cases.push_back(unary("softmax_axis" + std::to_string(axis), [axis](const TensorD& x) { return softmax(x, axis); }, -2.0, 2.0));
    cases.push_back(
        unary("log_softmax_axis" + std::to_string(axis), [axis](const TensorD& x) { return log_softmax(x, axis); }, -2.0, 2.0));
    cases.push_back({"max_pool_axis" + std::to_string(axis), [axis](std::uint64_t seed) {
                       Rng rng(seed);
                       TensorD x = detail::well_separated(rng, {3, 4});
                       return gradcheck([=] { return project(max_pool(x, axis), seed + 1); }, {x});
                     }});
  }
  cases.push_back({"layer_norm", [](std::uint64_t seed) {
                     Rng rng(seed);
                     TensorD x = random_leaf(rng, {3, 8}), g = random_leaf(rng, {8}, 0.5, 1.5), b = random_leaf(rng, {8});
                     return gradcheck([=] { return project(layer_norm(x, g, b), seed + 1); }, {x, g, b});
                   }});
  cases.push_back({"masked_fill", [](std::uint64_t seed) {
                     Rng rng(seed);
                     TensorD x = random_leaf(rng, {3, 4});
                     const Mask m = detail::random_mask(rng, 12, 0.4);
                     return gradcheck([=] { return project(masked_fill(x, m, -7.0), seed + 1); }, {x});
                   }});
  cases.push_back(unary("sum", [](const TensorD& x) { return nn::sum(nn::mul(x, x)); }));
  cases.push_back(unary("mean", [](const TensorD& x) { return nn::mean(nn::mul(x, x)); }));
  cases.push_back({"gather_rows", [](std::uint64_t seed) {
                     Rng rng(seed);
                     TensorD x = random_leaf(rng, {4, 3});
                     std::vector<std::size_t> rows{3, 0, 0, 2};
                     return gradcheck([=] { return project(gather_rows(x, rows), seed + 1); }, {x});
                   }});
  cases.push_back({"take", [](std::uint64_t seed) {
                     Rng rng(seed);
                     TensorD x = random_leaf(rng, {4, 3});
                     std::vector<std::size_t> idx{11, 0, 5, 5, 7};
                     return gradcheck([=] { return project(take(x, idx), seed + 1); }, {x});
                   }});
  cases.push_back({"bivariate_nll", [](std::uint64_t seed) {
                     Rng rng(seed);
                     const std::size_t m = 1 + rng.uniform_int(std::size_t{5});
                     std::vector<double> p;
                     std::vector<double> targets;
                     for (std::size_t i = 0; i < m; ++i) {
                       const double mx = rng.uniform(-1.0, 1.0), my = rng.uniform(-1.0, 1.0);
                       const double sx = rng.uniform(0.5, 1.5), sy = rng.uniform(0.5, 1.5);
                       p.insert(p.end(), {mx, my, sx, sy, rng.uniform(-0.5, 0.5)});
                       targets.push_back(mx + sx * rng.uniform(-1.5, 1.5));
                       targets.push_back(my + sy * rng.uniform(-1.5, 1.5));
                     }
                     TensorD params = TensorD::parameter({m, 5}, p);
                     return gradcheck([=] { return project(bivariate_nll(params, targets), seed + 1); }, {params});
                   }});
  return cases;
}

inline std::vector<GradCase> layer_cases() {
  using namespace nn;
  std::vector<GradCase> cases;
  cases.push_back({"Linear", [](std::uint64_t seed) {
                     Rng rng(seed);
                     ParameterStore<double> store;
                     Linear<double> layer(store, "l", 4, 3, rng);
                     TensorD x = random_leaf(rng, {2, 4});
                     auto inputs = detail::params_of(store);
                     inputs.push_back(x);
                     return gradcheck([=] { return project(layer(x), seed + 1); }, inputs);
                   }});
  cases.push_back({"Mlp", [](std::uint64_t seed) {
                     Rng rng(seed);
                     ParameterStore<double> store;
                     Mlp<double> layer(store, "m", 4, 6, 3, rng);
                     TensorD x = random_leaf(rng, {3, 4});
                     auto inputs = detail::params_of(store);
                     inputs.push_back(x);
                     return gradcheck([=] { return project(layer(x), seed + 1); }, inputs);
                   }});
  cases.push_back({"LayerNorm", [](std::uint64_t seed) {
                     Rng rng(seed);
                     ParameterStore<double> store;
                     LayerNorm<double> layer(store, "n", 8);
                     TensorD x = random_leaf(rng, {3, 8});
                     auto inputs = detail::params_of(store);
                     inputs.push_back(x);
                     return gradcheck([=] { return project(layer(x), seed + 1); }, inputs);
                   }});
  cases.push_back({"MultiHeadAttention", [](std::uint64_t seed) {
                     Rng rng(seed);
                     ParameterStore<double> store;
                     MultiHeadAttention<double> layer(store, "a", 8, 2, rng);
                     TensorD q = random_leaf(rng, {3, 8}), kv = random_leaf(rng, {5, 8});
                     const Mask m = detail::random_mask(rng, 5, 0.3);
                     auto inputs = detail::params_of(store);
                     inputs.push_back(q);
                     inputs.push_back(kv);
                     return gradcheck([=] { return project(layer(q, kv, m), seed + 1); }, inputs);
                   }});
  cases.push_back({"EncoderLayer", [](std::uint64_t seed) {
                     Rng rng(seed);
                     ParameterStore<double> store;
                     EncoderLayer<double> layer(store, "e", 8, 16, 2, rng);
                     TensorD x = random_leaf(rng, {4, 8});
                     const Mask m = detail::random_mask(rng, 4, 0.3);
                     auto inputs = detail::params_of(store);
                     inputs.push_back(x);
                     return gradcheck([=] { return project(layer(x, m), seed + 1); }, inputs);
                   }});
  cases.push_back({"DecoderLayer", [](std::uint64_t seed) {
                     Rng rng(seed);
                     ParameterStore<double> store;
                     DecoderLayer<double> layer(store, "d", 8, 16, 2, rng);
                     TensorD x = random_leaf(rng, {3, 8}), mem = random_leaf(rng, {5, 8});
                     const Mask m = detail::random_mask(rng, 5, 0.3);
                     auto inputs = detail::params_of(store);
                     inputs.push_back(x);
                     inputs.push_back(mem);
                     return gradcheck([=] { return project(layer(x, mem, m), seed + 1); }, inputs);
                   }});
  return cases;
}

}  // namespace scene_informer::testing
