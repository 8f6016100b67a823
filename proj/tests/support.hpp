#pragma once

#include <functional>

#include "doctest.h"
#include "qlab/error.hpp"

/// Error code thrown by `f`; fails the current test when nothing is thrown.
inline qlab::Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const qlab::Error& e) {
    return e.code();
  }
  FAIL("expected qlab::Error");
  return qlab::Errc::ConfigError;
}
