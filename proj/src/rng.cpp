#include "cellsearch/rng.hpp"

#include <cmath>
#include <vector>

namespace cellsearch {

namespace {

std::mt19937_64 seeded_engine(std::initializer_list<std::uint64_t> key) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * key.size() + 1);
  words.push_back(static_cast<std::uint32_t>(key.size()));
  for (std::uint64_t k : key) {
    words.push_back(static_cast<std::uint32_t>(k & 0xffffffffULL));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : engine_(seeded_engine({seed})) {}

Rng::Rng(std::initializer_list<std::uint64_t> key) : engine_(seeded_engine(key)) {}

double Rng::uniform() { return std::generate_canonical<double, 53>(engine_); }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() { return normal_(engine_); }

cplx Rng::complex_normal(double variance) {
  const double s = std::sqrt(0.5 * variance);
  const double re = normal();
  const double im = normal();
  return {s * re, s * im};
}

double Rng::gamma(double shape) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine_);
}

int Rng::poisson(double mean) {
  std::poisson_distribution<int> dist(mean);
  return dist(engine_);
}

double Rng::laplace(double scale) {
  // Inverse CDF on a symmetric uniform; u = -0.5 would map to infinity.
  double u = uniform() - 0.5;
  while (u == -0.5) u = uniform() - 0.5;
  const double sign = u < 0.0 ? -1.0 : 1.0;
  return -scale * sign * std::log1p(-2.0 * std::abs(u));
}

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace cellsearch
