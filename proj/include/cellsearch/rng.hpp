#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include "cellsearch/types.hpp"

namespace cellsearch {

/// Random stream used throughout the simulator.
///
/// Streams are addressed by a key (experiment seed plus any number of
/// counters such as scenario hash, SNR index and trial index). Two streams
/// built from the same key produce the same draws on every run and in every
/// thread, which is what makes parallel trial execution order-independent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  Rng(std::initializer_list<std::uint64_t> key);

  double uniform();                         // [0, 1)
  double uniform(double lo, double hi);     // [lo, hi)
  double normal();                          // N(0, 1)
  cplx complex_normal(double variance = 1.0);  // CN(0, variance)
  double gamma(double shape);               // Gamma(shape, 1)
  int poisson(double mean);
  double laplace(double scale);             // density exp(-|x|/scale)/(2 scale)

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Stable 64-bit FNV-1a, used to turn scenario ids and calibration keys into
// stream-key components.
std::uint64_t stable_hash(std::string_view text);

}  // namespace cellsearch
