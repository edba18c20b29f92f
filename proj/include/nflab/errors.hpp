#pragma once
#include <stdexcept>
#include <string>

namespace nflab {

// Maps to process exit code 1.
struct PropertyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Maps to process exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Maps to process exit code 3 (term-count / enumeration guards).
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nflab
