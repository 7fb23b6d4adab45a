#pragma once

// gtest-side helpers; the plain ones live in fixtures.hpp.

#include <gtest/gtest.h>

#include <functional>

#include "fixtures.hpp"
#include "ilgen/error.hpp"

namespace ilgen::test {

/// Error code thrown by `f`; records a test failure if nothing is thrown.
inline Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an ilgen::Error";
  return Errc::invalid_argument;
}

}  // namespace ilgen::test
