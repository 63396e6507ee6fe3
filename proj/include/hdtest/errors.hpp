#pragma once

#include <stdexcept>
#include <string>

namespace hdtest {

/// Bad input: malformed files, out-of-range parameters, violated preconditions.
class validation_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure: non-bracketing root search, degenerate scale, and similar.
class numeric_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace hdtest
