#pragma once

namespace scene_informer {

inline constexpr const char* kToolVersion = "scene_informer 0.1.0";

}  // namespace scene_informer
