#include "scene_informer/error.hpp"

namespace scene_informer {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kMissingEgo: return "missing_ego";
    case ErrorCode::kEmptyScene: return "empty_scene";
    case ErrorCode::kEgoInsideFootprint: return "ego_inside_footprint";
    case ErrorCode::kEmptyShadow: return "empty_shadow";
    case ErrorCode::kDegenerateShadow: return "degenerate_shadow";
    case ErrorCode::kTooFewAgents: return "too_few_agents";
    case ErrorCode::kNoOcclusion: return "no_occlusion";
    case ErrorCode::kSpawnExhausted: return "spawn_exhausted";
    case ErrorCode::kMissingFuture: return "missing_future";
    case ErrorCode::kNonFiniteLoss: return "non_finite_loss";
    case ErrorCode::kGraphConsumed: return "graph_consumed";
    case ErrorCode::kVersionMismatch: return "version_mismatch";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace scene_informer
