#pragma once

#include <stdexcept>
#include <string>

namespace qc {

// Bad caller-supplied values (shapes, ranges, malformed files). CLI exit code 1.
struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite values or iteration limits hit inside numeric kernels.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API misuse (e.g. backward without a forward cache). CLI exit code 2.
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

// Divergence during optimization; carries the epoch where loss went non-finite.
struct TrainingError : std::runtime_error {
  int epoch;
  TrainingError(const std::string& msg, int epoch_index)
      : std::runtime_error(msg), epoch(epoch_index) {}
};

}  // namespace qc
