#pragma once

#include <stdexcept>

namespace urb {

// Exit-code mapping used by the CLI: UsageError -> 1, ValidationError -> 2,
// NumericalError -> 3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace urb
