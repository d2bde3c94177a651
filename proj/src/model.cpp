#include "scene_informer/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "scene_informer/error.hpp"

namespace scene_informer {

using nn::Mask;
using nn::Tensor;

ModelConfig ModelConfig::desk_scale() { return {}; }

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.d_model = 256;
  c.ff_dim = 2048;
  c.enc_layers = 4;
  c.enc_heads = 4;
  c.dec_layers = 2;
  c.K = 7;
  return c;
}

void validate_model_config(const ModelConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, "model." + what); };
  if (c.d_model == 0) fail("d_model: must be positive");
  if (c.ff_dim == 0) fail("ff_dim: must be positive");
  if (c.enc_layers == 0) fail("enc_layers: must be positive");
  if (c.enc_heads == 0 || c.d_model % c.enc_heads != 0) fail("enc_heads: must divide d_model");
  if (c.dec_layers == 0) fail("dec_layers: must be positive");
  if (c.K < 1) fail("K: must be >= 1");
  if (c.H < 1) fail("H: must be >= 1");
  if (c.P < 1) fail("P: must be >= 1");
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "model: expected a JSON object");
  ModelConfig c;
  if (j.contains("preset")) {
    const auto& preset = j.at("preset");
    if (preset == "desk_scale") {
      c = ModelConfig::desk_scale();
    } else if (preset == "full_scale") {
      c = ModelConfig::full_scale();
    } else {
      throw Error(ErrorCode::kConfig, "model.preset: expected desk_scale or full_scale");
    }
  }
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "preset") continue;
      if (key == "d_model") c.d_model = value.get<std::size_t>();
      else if (key == "ff_dim") c.ff_dim = value.get<std::size_t>();
      else if (key == "enc_layers") c.enc_layers = value.get<std::size_t>();
      else if (key == "enc_heads") c.enc_heads = value.get<std::size_t>();
      else if (key == "dec_layers") c.dec_layers = value.get<std::size_t>();
      else if (key == "K") c.K = value.get<std::size_t>();
      else if (key == "H") c.H = value.get<int>();
      else if (key == "P") c.P = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw Error(ErrorCode::kConfig, "model." + key + ": unknown key");
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::kConfig, "model." + key + ": wrong type");
    }
  }
  validate_model_config(c);
  return c;
}

nlohmann::json model_config_to_json(const ModelConfig& c) {
  return {{"d_model", c.d_model}, {"ff_dim", c.ff_dim}, {"enc_layers", c.enc_layers},
          {"enc_heads", c.enc_heads}, {"dec_layers", c.dec_layers}, {"K", c.K},
          {"H", c.H}, {"P", c.P}, {"seed", c.seed}};
}

template <typename T>
SceneInformer<T>::SceneInformer(const ModelConfig& config) : config_(config) {
  validate_model_config(config_);
  Rng rng(config_.seed);
  const std::size_t d = config_.d_model;
  const std::size_t agent_in = static_cast<std::size_t>(config_.H) * kAgentStepFeatures + kFourierWidth;
  for (int k = 0; k < kNumAgentKinds; ++k) {
    agent_encoders_.emplace_back(store_, "agent_encoder." + std::string(to_string(static_cast<AgentKind>(k))),
                                 agent_in, d, d, rng);
  }
  point_encoder_ = nn::Mlp<T>(store_, "polyline_encoder", kPolylinePointFeatures, d, d, rng);
  for (std::size_t i = 0; i < config_.enc_layers; ++i) {
    encoder_.emplace_back(store_, "encoder." + std::to_string(i), d, config_.ff_dim, config_.enc_heads, rng);
  }
  encoder_norm_ = nn::LayerNorm<T>(store_, "encoder.norm", d);
  anchor_encoder_ = nn::Mlp<T>(store_, "anchor_encoder", 2 + kFourierWidth, d, d, rng);
  for (std::size_t i = 0; i < config_.dec_layers; ++i) {
    decoder_.emplace_back(store_, "decoder." + std::to_string(i), d, config_.ff_dim, config_.enc_heads, rng);
  }
  decoder_norm_ = nn::LayerNorm<T>(store_, "decoder.norm", d);
  occupancy_head_ = nn::Mlp<T>(store_, "head.occupancy", d, d, 1, rng);
  mode_head_ = nn::Mlp<T>(store_, "head.mode", d, d, config_.K, rng);
  trajectory_head_ = nn::Mlp<T>(store_, "head.trajectory", d, d, config_.trajectory_width(), rng);
}

template <typename T>
std::vector<Tensor<T>> SceneInformer<T>::parameter_list() const {
  std::vector<Tensor<T>> out;
  for (const auto& [_, t] : store_.named()) out.push_back(t);
  return out;
}

namespace {

// Feature columns: x, y, cos, sin, vx, vy, length, width, observed.
constexpr double kAgentScale[kAgentStepFeatures] = {1.0 / kPositionScale, 1.0 / kPositionScale, 1.0, 1.0,
                                                     1.0 / kVelocityScale, 1.0 / kVelocityScale,
                                                     1.0 / kSizeScale, 1.0 / kSizeScale, 1.0};

template <typename T>
void append_fourier(std::vector<T>& out, Vec2 p) {
  for (std::size_t k = 1; k <= kFourierOctaves; ++k) {
    const double w = 2.0 * std::numbers::pi / std::ldexp(1.0, static_cast<int>(k));
    out.push_back(static_cast<T>(std::sin(w * p.x)));
    out.push_back(static_cast<T>(std::cos(w * p.x)));
    out.push_back(static_cast<T>(std::sin(w * p.y)));
    out.push_back(static_cast<T>(std::cos(w * p.y)));
  }
}

double point_scale(std::size_t column) {
  if (column < 2) return 1.0 / kPositionScale;
  if (column < 4) return 1.0 / kPointStepScale;
  return 1.0;
}

}  // namespace

template <typename T>
Tensor<T> SceneInformer<T>::encode_scene(const SceneFeatures& f) const {
  if (f.num_tokens() == 0) throw Error(ErrorCode::kEmptyScene, "encode_scene: no tokens");
  const std::size_t d = config_.d_model;
  std::vector<Tensor<T>> parts;

  const std::size_t n_agents = f.num_agents();
  if (n_agents > 0) {
    if (f.history != config_.H) {
      throw Error(ErrorCode::kShapeMismatch, "encode_scene: features have H=" + std::to_string(f.history) +
                                                 ", model expects " + std::to_string(config_.H));
    }
    const std::size_t width = static_cast<std::size_t>(f.agent_width());
    // Each kind runs through its own encoder; rows are then put back in
    // feature order.
    std::vector<Tensor<T>> encoded;
    std::vector<std::size_t> position(n_agents);
    std::size_t offset = 0;
    for (int k = 0; k < kNumAgentKinds; ++k) {
      std::vector<T> rows;
      std::size_t count = 0;
      for (std::size_t a = 0; a < n_agents; ++a) {
        if (static_cast<int>(f.agent_kinds[a]) != k) continue;
        Vec2 last;
        for (std::size_t t = 0; t < static_cast<std::size_t>(f.history); ++t) {
          if (f.agent_step_mask[a * static_cast<std::size_t>(f.history) + t]) {
            last = {f.agent_features[a * width + t * kAgentStepFeatures],
                    f.agent_features[a * width + t * kAgentStepFeatures + 1]};
          }
        }
        for (std::size_t c = 0; c < width; ++c) {
          rows.push_back(static_cast<T>(f.agent_features[a * width + c] * kAgentScale[c % kAgentStepFeatures]));
        }
        append_fourier(rows, last);
        position[a] = offset + count++;
      }
      if (count == 0) continue;
      encoded.push_back(agent_encoders_[static_cast<std::size_t>(k)](
          Tensor<T>::from({count, width + kFourierWidth}, std::move(rows))));
      offset += count;
    }
    const Tensor<T> stacked = encoded.size() == 1 ? encoded[0] : concat(encoded, 0);
    parts.push_back(gather_rows(stacked, position));
  }

  const std::size_t n_lines = f.num_polylines();
  if (n_lines > 0) {
    const std::size_t np = static_cast<std::size_t>(f.points_per_token);
    std::vector<T> points(f.polyline_features.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      points[i] = static_cast<T>(f.polyline_features[i] * point_scale(i % kPolylinePointFeatures));
    }
    const Tensor<T> per_point =
        point_encoder_(Tensor<T>::from({n_lines * np, static_cast<std::size_t>(kPolylinePointFeatures)}, std::move(points)));
    Mask invalid(n_lines * np * d);
    for (std::size_t p = 0; p < n_lines * np; ++p) {
      if (!f.polyline_point_mask[p]) std::fill_n(invalid.begin() + static_cast<std::ptrdiff_t>(p * d), d, 1);
    }
    const Tensor<T> masked = masked_fill(reshape(per_point, {n_lines, np, d}), invalid,
                                         -std::numeric_limits<T>::infinity());
    parts.push_back(max_pool(masked, 1));
  }

  Tensor<T> x = parts.size() == 1 ? parts[0] : concat(parts, 0);
  for (const auto& layer : encoder_) x = layer(x);
  return encoder_norm_(x);
}

template <typename T>
ModelOutput<T> SceneInformer<T>::decode_anchors(const std::vector<Vec2>& anchors,
                                                const Tensor<T>& scene_embeddings) const {
  if (anchors.empty()) throw Error(ErrorCode::kInvalidArgument, "decode_anchors: no anchors");
  const std::size_t n = anchors.size();
  std::vector<T> pos;
  pos.reserve((2 + kFourierWidth) * n);
  for (const Vec2 a : anchors) {
    pos.push_back(static_cast<T>(a.x / kPositionScale));
    pos.push_back(static_cast<T>(a.y / kPositionScale));
    append_fourier(pos, a);
  }
  Tensor<T> x = anchor_encoder_(Tensor<T>::from({n, 2 + kFourierWidth}, std::move(pos)));
  for (const auto& layer : decoder_) x = layer(x, scene_embeddings);
  x = decoder_norm_(x);

  ModelOutput<T> out;
  out.occupancy_logit = occupancy_head_(x);
  out.mode_logits = mode_head_(x);
  const std::size_t rows = n * config_.K * static_cast<std::size_t>(config_.P);
  const Tensor<T> raw = reshape(trajectory_head_(x), {rows, 5});
  const Tensor<T> mu = scale(slice(raw, 1, 0, 2), static_cast<T>(kMeanOffsetScale));
  const Tensor<T> sigma = clamp(exp(slice(raw, 1, 2, 2)), static_cast<T>(kSigmaMin), static_cast<T>(kSigmaMax));
  const Tensor<T> rho = scale(tanh(slice(raw, 1, 4, 1)), static_cast<T>(kRhoLimit));
  out.trajectory = nn::concat<T>({mu, sigma, rho}, 1);
  return out;
}

template <typename T>
std::vector<AnchorPrediction> to_predictions(const ModelOutput<T>& output, const std::vector<Vec2>& anchors,
                                             std::size_t K, std::size_t P) {
  const std::size_t n = anchors.size();
  std::vector<AnchorPrediction> preds(n);
  const auto logit = output.occupancy_logit.data();
  const auto modes = output.mode_logits.data();
  const auto traj = output.trajectory.data();
  for (std::size_t a = 0; a < n; ++a) {
    AnchorPrediction& p = preds[a];
    p.p_occ = 1.0 / (1.0 + std::exp(-static_cast<double>(logit[a])));
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) max_logit = std::max(max_logit, static_cast<double>(modes[a * K + k]));
    double total = 0.0;
    p.mode_probs.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      p.mode_probs[k] = std::exp(static_cast<double>(modes[a * K + k]) - max_logit);
      total += p.mode_probs[k];
    }
    for (auto& v : p.mode_probs) v /= total;
    p.trajectories.resize(K * P * 5);
    for (std::size_t i = 0; i < K * P; ++i) {
      const std::size_t row = a * K * P + i;
      for (std::size_t c = 0; c < 5; ++c) p.trajectories[i * 5 + c] = static_cast<double>(traj[row * 5 + c]);
      p.trajectories[i * 5] += anchors[a].x;
      p.trajectories[i * 5 + 1] += anchors[a].y;
    }
  }
  return preds;
}

template class SceneInformer<float>;
template class SceneInformer<double>;
template std::vector<AnchorPrediction> to_predictions(const ModelOutput<float>&, const std::vector<Vec2>&,
                                                      std::size_t, std::size_t);
template std::vector<AnchorPrediction> to_predictions(const ModelOutput<double>&, const std::vector<Vec2>&,
                                                      std::size_t, std::size_t);

}  // namespace scene_informer
