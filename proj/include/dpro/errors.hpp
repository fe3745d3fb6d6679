#pragma once

#include <stdexcept>

namespace dpro {

// Error taxonomy mirrored by the CLI exit codes: configuration problems
// exit 2, data problems exit 3, numeric failures exit 4. Library ops also
// throw std::invalid_argument for plain parameter misuse (treated as
// configuration at the CLI boundary).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dpro
