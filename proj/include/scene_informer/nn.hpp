#pragma once

#include <string>
#include <utility>
#include <vector>

#include "scene_informer/rng.hpp"
#include "scene_informer/tensor.hpp"

namespace scene_informer::nn {

// Owns every trainable tensor under a dotted name, in creation order.
template <typename T>
class ParameterStore {
 public:
  Tensor<T> create(const std::string& name, Shape shape, std::vector<T> values);
  // Uniform(-bound, bound) with bound = 1/sqrt(fan_in).
  Tensor<T> create_uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng);

  const std::vector<std::pair<std::string, Tensor<T>>>& named() const { return params_; }
  std::vector<std::pair<std::string, Tensor<T>>>& named() { return params_; }
  const Tensor<T>* find(const std::string& name) const;
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor<T>>> params_;
};

template <typename T>
struct Linear {
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out]

  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  Tensor<T> operator()(const Tensor<T>& x) const { return linear(x, weight, bias); }
};

// Linear -> ReLU -> Linear.
template <typename T>
struct Mlp {
  Linear<T> first;
  Linear<T> second;

  Mlp() = default;
  Mlp(ParameterStore<T>& store, const std::string& name, std::size_t in, std::size_t hidden, std::size_t out, Rng& rng);
  Tensor<T> operator()(const Tensor<T>& x) const { return second(relu(first(x))); }
};

template <typename T>
struct LayerNorm {
  Tensor<T> gamma;
  Tensor<T> beta;

  LayerNorm() = default;
  LayerNorm(ParameterStore<T>& store, const std::string& name, std::size_t width);
  Tensor<T> operator()(const Tensor<T>& x) const { return layer_norm(x, gamma, beta); }
};

template <typename T>
struct AttentionOutput {
  Tensor<T> output;                 // [n_q, width]
  std::vector<Tensor<T>> weights;   // per head, [n_q, n_kv]
};

// Scaled dot-product attention per head, heads concatenated then projected.
// `kv_invalid` (size n_kv, nonzero = invalid) receives zero attention weight.
template <typename T>
struct MultiHeadAttention {
  Linear<T> query;
  Linear<T> key;
  Linear<T> value;
  Linear<T> out;
  std::size_t heads = 1;
  std::size_t width = 0;

  MultiHeadAttention() = default;
  // Throws Error(kInvalidArgument) when width is not divisible by heads.
  MultiHeadAttention(ParameterStore<T>& store, const std::string& name, std::size_t width, std::size_t heads, Rng& rng);

  AttentionOutput<T> attend(const Tensor<T>& q_tokens, const Tensor<T>& kv_tokens, const Mask& kv_invalid = {}) const;
  Tensor<T> operator()(const Tensor<T>& q_tokens, const Tensor<T>& kv_tokens, const Mask& kv_invalid = {}) const {
    return attend(q_tokens, kv_tokens, kv_invalid).output;
  }
};

// Pre-norm encoder block: x + SelfAttn(LN(x)), then x + FF(LN(x)).
template <typename T>
struct EncoderLayer {
  LayerNorm<T> norm_attn;
  MultiHeadAttention<T> attn;
  LayerNorm<T> norm_ff;
  Mlp<T> ff;

  EncoderLayer() = default;
  EncoderLayer(ParameterStore<T>& store, const std::string& name, std::size_t width, std::size_t ff_dim,
               std::size_t heads, Rng& rng);
  Tensor<T> operator()(const Tensor<T>& x, const Mask& invalid = {}) const;
};

// Pre-norm decoder block: self-attention over queries, cross-attention to
// memory, feedforward; each with a residual.
template <typename T>
struct DecoderLayer {
  LayerNorm<T> norm_self;
  MultiHeadAttention<T> self_attn;
  LayerNorm<T> norm_cross;
  MultiHeadAttention<T> cross_attn;
  LayerNorm<T> norm_ff;
  Mlp<T> ff;

  DecoderLayer() = default;
  DecoderLayer(ParameterStore<T>& store, const std::string& name, std::size_t width, std::size_t ff_dim,
               std::size_t heads, Rng& rng);
  Tensor<T> operator()(const Tensor<T>& x, const Tensor<T>& memory, const Mask& memory_invalid = {}) const;
};

}  // namespace scene_informer::nn
