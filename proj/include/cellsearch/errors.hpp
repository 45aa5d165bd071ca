#pragma once

#include <stdexcept>
#include <string>

namespace cellsearch {

// Invalid or inconsistent configuration. The message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Threshold calibration could not produce a usable threshold (non-concave
// tail, root outside (0,1), missing cache entry).
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector/matrix dimensions disagree with the array or frontend they feed.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Detector input has no energy; T is undefined.
class DegenerateObservation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace cellsearch
