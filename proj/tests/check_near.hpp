#pragma once

#include <cmath>

#include <doctest.h>

// Absolute-tolerance comparison with both values in the failure message.
#define CHECK_NEAR(actual, expected, tol)                                                  \
  CHECK_MESSAGE(std::abs(static_cast<double>(actual) - static_cast<double>(expected)) <= (tol), \
                "actual ", (actual), " expected ", (expected), " tol ", (tol))
