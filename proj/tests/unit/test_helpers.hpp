#pragma once

#include <gtest/gtest.h>

#include <functional>

#include "potfield/error.hpp"

namespace potfield::testing {

inline void expect_error(const std::function<void()>& fn, ErrorCode code) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(code) << ", nothing thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace potfield::testing
