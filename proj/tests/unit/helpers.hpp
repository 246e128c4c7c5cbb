#pragma once

#include <functional>
#include <sstream>
#include <string>

#include "doctest.h"
#include "hotspot/error.hpp"

namespace test_util {

inline hotspot::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const hotspot::Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return hotspot::ErrorCode::kInvalidConfig;
}

}  // namespace test_util
