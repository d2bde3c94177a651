#include "scene_informer/nn.hpp"

#include <cmath>

#include "scene_informer/error.hpp"

namespace scene_informer::nn {

template <typename T>
Tensor<T> ParameterStore<T>::create(const std::string& name, Shape shape, std::vector<T> values) {
  for (const auto& [existing, _] : params_) {
    if (existing == name) throw Error(ErrorCode::kInvalidArgument, "duplicate parameter '" + name + "'");
  }
  Tensor<T> t = Tensor<T>::parameter(std::move(shape), std::move(values));
  params_.emplace_back(name, t);
  return t;
}

template <typename T>
Tensor<T> ParameterStore<T>::create_uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<T> values(shape_numel(shape));
  for (auto& v : values) v = static_cast<T>(rng.uniform(-bound, bound));
  return create(name, std::move(shape), std::move(values));
}

template <typename T>
const Tensor<T>* ParameterStore<T>::find(const std::string& name) const {
  for (const auto& [n, t] : params_) {
    if (n == name) return &t;
  }
  return nullptr;
}

template <typename T>
std::size_t ParameterStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.numel();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

template <typename T>
Linear<T>::Linear(ParameterStore<T>& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : weight(store.create_uniform(name + ".weight", {in, out}, in, rng)),
      bias(store.create(name + ".bias", {out}, std::vector<T>(out, T(0)))) {}

template <typename T>
Mlp<T>::Mlp(ParameterStore<T>& store, const std::string& name, std::size_t in, std::size_t hidden, std::size_t out,
            Rng& rng)
    : first(store, name + ".0", in, hidden, rng), second(store, name + ".1", hidden, out, rng) {}

template <typename T>
LayerNorm<T>::LayerNorm(ParameterStore<T>& store, const std::string& name, std::size_t width)
    : gamma(store.create(name + ".gamma", {width}, std::vector<T>(width, T(1)))),
      beta(store.create(name + ".beta", {width}, std::vector<T>(width, T(0)))) {}

template <typename T>
MultiHeadAttention<T>::MultiHeadAttention(ParameterStore<T>& store, const std::string& name, std::size_t width_,
                                          std::size_t heads_, Rng& rng)
    : heads(heads_), width(width_) {
  if (heads == 0 || width % heads != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "attention width " + std::to_string(width) + " not divisible by " + std::to_string(heads) + " heads");
  }
  query = Linear<T>(store, name + ".query", width, width, rng);
  key = Linear<T>(store, name + ".key", width, width, rng);
  value = Linear<T>(store, name + ".value", width, width, rng);
  out = Linear<T>(store, name + ".out", width, width, rng);
}

template <typename T>
AttentionOutput<T> MultiHeadAttention<T>::attend(const Tensor<T>& q_tokens, const Tensor<T>& kv_tokens,
                                                 const Mask& kv_invalid) const {
  const std::size_t nq = q_tokens.dim(0);
  const std::size_t nk = kv_tokens.dim(0);
  if (!kv_invalid.empty() && kv_invalid.size() != nk) {
    throw Error(ErrorCode::kShapeMismatch, "attention: mask of " + std::to_string(kv_invalid.size()) + " for " +
                                               std::to_string(nk) + " key tokens");
  }
  const Tensor<T> q = query(q_tokens);
  const Tensor<T> k = key(kv_tokens);
  const Tensor<T> v = value(kv_tokens);
  const std::size_t dh = width / heads;
  const T inv_sqrt = T(1) / static_cast<T>(std::sqrt(static_cast<double>(dh)));

  Mask score_mask;
  if (!kv_invalid.empty()) {
    score_mask.resize(nq * nk);
    for (std::size_t i = 0; i < nq; ++i) {
      for (std::size_t j = 0; j < nk; ++j) score_mask[i * nk + j] = kv_invalid[j];
    }
  }

  AttentionOutput<T> result;
  std::vector<Tensor<T>> head_out;
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor<T> qh = slice(q, 1, h * dh, dh);
    const Tensor<T> kh = slice(k, 1, h * dh, dh);
    const Tensor<T> vh = slice(v, 1, h * dh, dh);
    Tensor<T> scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    if (!score_mask.empty()) scores = masked_fill(scores, score_mask, -std::numeric_limits<T>::infinity());
    const Tensor<T> weights = softmax(scores, 1);
    head_out.push_back(matmul(weights, vh));
    result.weights.push_back(weights);
  }
  result.output = out(heads == 1 ? head_out[0] : concat(head_out, 1));
  return result;
}

template <typename T>
EncoderLayer<T>::EncoderLayer(ParameterStore<T>& store, const std::string& name, std::size_t width,
                              std::size_t ff_dim, std::size_t heads, Rng& rng)
    : norm_attn(store, name + ".norm_attn", width),
      attn(store, name + ".attn", width, heads, rng),
      norm_ff(store, name + ".norm_ff", width),
      ff(store, name + ".ff", width, ff_dim, width, rng) {}

template <typename T>
Tensor<T> EncoderLayer<T>::operator()(const Tensor<T>& x, const Mask& invalid) const {
  const Tensor<T> h = norm_attn(x);
  const Tensor<T> y = add(x, attn(h, h, invalid));
  return add(y, ff(norm_ff(y)));
}

template <typename T>
DecoderLayer<T>::DecoderLayer(ParameterStore<T>& store, const std::string& name, std::size_t width,
                              std::size_t ff_dim, std::size_t heads, Rng& rng)
    : norm_self(store, name + ".norm_self", width),
      self_attn(store, name + ".self_attn", width, heads, rng),
      norm_cross(store, name + ".norm_cross", width),
      cross_attn(store, name + ".cross_attn", width, heads, rng),
      norm_ff(store, name + ".norm_ff", width),
      ff(store, name + ".ff", width, ff_dim, width, rng) {}

template <typename T>
Tensor<T> DecoderLayer<T>::operator()(const Tensor<T>& x, const Tensor<T>& memory, const Mask& memory_invalid) const {
  const Tensor<T> h = norm_self(x);
  const Tensor<T> a = add(x, self_attn(h, h));
  const Tensor<T> b = add(a, cross_attn(norm_cross(a), memory, memory_invalid));
  return add(b, ff(norm_ff(b)));
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template struct Linear<float>;
template struct Linear<double>;
template struct Mlp<float>;
template struct Mlp<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template struct MultiHeadAttention<float>;
template struct MultiHeadAttention<double>;
template struct EncoderLayer<float>;
template struct EncoderLayer<double>;
template struct DecoderLayer<float>;
template struct DecoderLayer<double>;

}  // namespace scene_informer::nn
