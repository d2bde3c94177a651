#pragma once

#include <string>

#include "doctest.h"
#include "scene_informer/error.hpp"

namespace scene_informer::testing {

template <typename Fn>
void check_error(ErrorCode code, Fn&& fn, const std::string& fragment = {}) {
  try {
    fn();
    FAIL("expected error code " << static_cast<int>(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
    if (!fragment.empty()) CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
  }
}

}  // namespace scene_informer::testing
