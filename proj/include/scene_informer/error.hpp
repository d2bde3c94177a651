#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scene_informer {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kSchema,
  kIo,
  kMissingEgo,
  kEmptyScene,
  kEgoInsideFootprint,
  kEmptyShadow,
  kDegenerateShadow,
  kTooFewAgents,
  kNoOcclusion,
  kSpawnExhausted,
  kMissingFuture,
  kNonFiniteLoss,
  kGraphConsumed,
  kVersionMismatch,
  kConfig,
};

std::string_view error_code_name(ErrorCode code);

// All library failures surface as this type; `code()` is stable for callers
// that branch on the failure kind (the CLI maps it to an exit status).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace scene_informer
