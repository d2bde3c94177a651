#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "scene_informer/features.hpp"
#include "scene_informer/geometry.hpp"
#include "scene_informer/nn.hpp"

namespace scene_informer {

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t ff_dim = 256;
  std::size_t enc_layers = 2;
  std::size_t enc_heads = 2;
  std::size_t dec_layers = 1;
  std::size_t K = 3;
  int H = 10;
  int P = 40;
  std::uint64_t seed = 0;  // parameter initialization

  static ModelConfig desk_scale();
  static ModelConfig full_scale();
  // Trajectory parameters per anchor: K * P * 5.
  std::size_t trajectory_width() const { return K * static_cast<std::size_t>(P) * 5; }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Throws Error(kConfig) on non-positive sizes, K < 1, or d_model % heads != 0.
void validate_model_config(const ModelConfig& config);
// Unknown keys are rejected with Error(kConfig) naming "model.<key>".
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json model_config_to_json(const ModelConfig& config);

// Fixed input normalization applied before the first layer.
inline constexpr double kPositionScale = 20.0;
inline constexpr double kVelocityScale = 10.0;
inline constexpr double kSizeScale = 5.0;
inline constexpr double kPointStepScale = 2.0;
// Anchors and agent tokens also see sin/cos of their position at wavelengths
// 2, 4, ..., 2^kFourierOctaves meters.
inline constexpr std::size_t kFourierOctaves = 8;
inline constexpr std::size_t kFourierWidth = 4 * kFourierOctaves;
// Raw trajectory-head outputs are multiplied by this to give mean offsets (m).
inline constexpr double kMeanOffsetScale = 10.0;
inline constexpr double kSigmaMin = 1e-2;
inline constexpr double kSigmaMax = 1e2;
inline constexpr double kRhoLimit = 0.999;

template <typename T>
struct ModelOutput {
  nn::Tensor<T> occupancy_logit;  // [N_a, 1]
  nn::Tensor<T> mode_logits;      // [N_a, K]
  // [N_a * K * P, 5] rows of (mu_x, mu_y, sigma_x, sigma_y, rho); mu is the
  // ego-frame offset from the anchor position. Row (a * K + k) * P + t.
  nn::Tensor<T> trajectory;
};

struct AnchorPrediction {
  double p_occ = 0.0;
  std::vector<double> mode_probs;  // K
  // K * P * 5, same layout as ModelOutput::trajectory with mu made absolute
  // (anchor position added back).
  std::vector<double> trajectories;

  double mean_x(std::size_t k, std::size_t t, std::size_t P) const { return trajectories[(k * P + t) * 5]; }
  double mean_y(std::size_t k, std::size_t t, std::size_t P) const { return trajectories[(k * P + t) * 5 + 1]; }
};

template <typename T>
class SceneInformer {
 public:
  explicit SceneInformer(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  nn::ParameterStore<T>& parameters() { return store_; }
  const nn::ParameterStore<T>& parameters() const { return store_; }
  std::vector<nn::Tensor<T>> parameter_list() const;

  // One embedding per token: agents (feature order) then polylines.
  // Throws Error(kEmptyScene) with no tokens.
  nn::Tensor<T> encode_scene(const SceneFeatures& features) const;
  ModelOutput<T> decode_anchors(const std::vector<Vec2>& anchors, const nn::Tensor<T>& scene_embeddings) const;
  ModelOutput<T> forward(const SceneFeatures& features, const std::vector<Vec2>& anchors) const {
    return decode_anchors(anchors, encode_scene(features));
  }

 private:
  ModelConfig config_;
  nn::ParameterStore<T> store_;
  std::vector<nn::Mlp<T>> agent_encoders_;  // one per AgentKind
  nn::Mlp<T> point_encoder_;
  std::vector<nn::EncoderLayer<T>> encoder_;
  nn::LayerNorm<T> encoder_norm_;
  nn::Mlp<T> anchor_encoder_;
  std::vector<nn::DecoderLayer<T>> decoder_;
  nn::LayerNorm<T> decoder_norm_;
  nn::Mlp<T> occupancy_head_;
  nn::Mlp<T> mode_head_;
  nn::Mlp<T> trajectory_head_;
};

// Detached per-anchor predictions with the constraint maps applied.
template <typename T>
std::vector<AnchorPrediction> to_predictions(const ModelOutput<T>& output, const std::vector<Vec2>& anchors,
                                             std::size_t K, std::size_t P);

}  // namespace scene_informer
