#pragma once

#include <stdexcept>
#include <string>

namespace dyad {

// Base class for everything thrown by this library.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated precondition or type invariant (caller bug).
struct contract_error : error {
  using error::error;
};

// Bad configuration input (unknown keys, invalid distribution, ...).
struct config_error : error {
  using error::error;
};

// Estimation failed numerically (singular Gram matrix, divergence, ...).
struct estimation_error : error {
  using error::error;
};

// Eigensolver or other numerical kernel failed to converge.
struct numerical_error : error {
  using error::error;
};

// File input/output failure.
struct io_error : error {
  using error::error;
};

}  // namespace dyad
