#include <doctest.h>

#include "cellsearch/antenna_array.hpp"
#include "cellsearch/errors.hpp"
#include "test_support.hpp"

using namespace cellsearch;

TEST_SUITE("antenna_array") {

TEST_CASE("default geometries") {
  const ArrayGeometry bs{8, 8, 0.5}, ue{4, 4, 0.5};
  CHECK(bs.size() == 64);
  CHECK(ue.size() == 16);
  CHECK(max_bf_gain(bs) == 64.0);
  CHECK(max_bf_gain(ue) == 16.0);
  CHECK(10.0 * std::log10(max_bf_gain(bs) * max_bf_gain(ue)) == doctest::Approx(30.103).epsilon(1e-4));
  CHECK_THROWS_AS((ArrayGeometry{4, 4, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((ArrayGeometry{0, 4, 0.5}.validate()), ConfigError);
}

TEST_CASE("broadside steering vector is flat") {
  const CVector a = steering_vector({4, 4, 0.5}, {0.0, 0.0});
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(std::abs(a(i) - cplx(0.25, 0.0)) < 1e-15);
}

TEST_CASE("steering vectors are unit norm and self-match at full gain") {
  Rng rng(5);
  const ArrayGeometry ue{4, 4, 0.5};
  for (int i = 0; i < 100; ++i) {
    const CVector a = steering_vector(ue, random_direction(rng));
    CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::norm(a.dot(a)) * ue.size() == doctest::Approx(16.0).epsilon(1e-9));
  }
}

TEST_CASE("inner product against brute-force summation") {
  const ArrayGeometry ue{4, 4, 0.5};
  auto brute = [&](Direction d1, Direction d2) {
    cplx s{0.0, 0.0};
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) {
        auto ph = [&](Direction d) {
          return 2.0 * kPi * 0.5 * (m * std::sin(d.elevation) + n * std::cos(d.elevation) * std::sin(d.azimuth));
        };
        s += std::exp(cplx(0.0, ph(d2) - ph(d1))) / 16.0;
      }
    return s;
  };
  const Direction d1{0.0, 0.0}, d2{kPi / 2, 0.0};
  const cplx ip = steering_vector(ue, d1).dot(steering_vector(ue, d2));
  CHECK(std::abs(ip - brute(d1, d2)) < 1e-12);
  CHECK(std::abs(ip) < 1e-12);  // columns alternate in sign and cancel
  const Direction d3{0.3, -0.2}, d4{-1.1, 0.7};
  CHECK(std::abs(steering_vector(ue, d3).dot(steering_vector(ue, d4)) - brute(d3, d4)) < 1e-12);
}

TEST_CASE("random directions are uniform on the sphere") {
  Rng rng(77);
  const int n = 1000000;
  double sin_sum = 0.0;
  std::vector<int> bins(20, 0);
  for (int i = 0; i < n; ++i) {
    const Direction d = random_direction(rng);
    REQUIRE(d.azimuth >= -kPi);
    REQUIRE(d.azimuth < kPi);
    REQUIRE(std::abs(d.elevation) <= kPi / 2);
    sin_sum += std::sin(d.elevation);
    ++bins[std::min(19, int((d.azimuth + kPi) / (2 * kPi) * 20))];
  }
  CHECK(std::abs(sin_sum / n) < 0.003);
  double chi2 = 0.0;
  for (int b : bins) chi2 += (b - n / 20.0) * (b - n / 20.0) / (n / 20.0);
  CHECK(chi2 < 36.19);  // chi-square, 19 dof, 1%
}

TEST_CASE("seeded direction draws repeat") {
  Rng a(9), b(9);
  for (int i = 0; i < 10; ++i) {
    const Direction x = random_direction(a), y = random_direction(b);
    CHECK(x.azimuth == y.azimuth);
    CHECK(x.elevation == y.elevation);
  }
}

TEST_CASE("overlap matrix equals the sphere average of the power pattern") {
  // Midpoint quadrature in (azimuth, sin elevation), which is uniform on
  // the sphere.
  const ArrayGeometry g{3, 2, 0.5};
  Rng rng(1);
  CVector w(6);
  for (int i = 0; i < 6; ++i) w(i) = rng.complex_normal();
  const int na = 720, ns = 720;
  double acc = 0.0;
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < ns; ++j) {
      const Direction d{-kPi + (i + 0.5) * 2 * kPi / na, std::asin(-1.0 + (j + 0.5) * 2.0 / ns)};
      acc += g.size() * std::norm(steering_vector(g, d).dot(w));
    }
  CHECK(acc / (na * ns) == doctest::Approx(radiated_power(radiation_overlap(g), w)).epsilon(1e-4));
  CHECK_THROWS_AS(radiated_power(radiation_overlap(g), CVector::Ones(5)), DimensionError);
}

}
