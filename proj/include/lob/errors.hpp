#pragma once

#include <stdexcept>
#include <string>

namespace lob {

// Domain and precondition failures use std::domain_error / std::invalid_argument.
// The two types below separate broken internal state from numerical failures.

/// A book or trace invariant was violated. Always a bug or a degenerate input
/// (for example two orders at exactly the same price).
class invariant_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A numerical procedure could not produce an answer (no bracket, singular
/// coefficient, non-convergence). The message carries the diagnostic.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lob
