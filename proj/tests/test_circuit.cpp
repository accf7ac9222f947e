#include <cmath>
#include <complex>

#include "doctest.h"
#include "ofp/circuit.hpp"
#include "ofp/rng.hpp"

using namespace ofp;
using cplx = std::complex<double>;

namespace {
constexpr double kPi = 3.14159265358979323846;

ChannelGeometry boresight(double d) {
  return {d, 0.0, 0.0, kPi / 3.0, 1e-4, 1.0};
}
}  // namespace

TEST_CASE("lambertian order at the exact semi-angles") {
  CHECK(lambertian_order(kPi / 3.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lambertian_order(kPi / 4.0) == doctest::Approx(2.0).epsilon(1e-14));
  // hand evaluation of -ln2/ln(cos 30 deg)
  CHECK(lambertian_order(kPi / 6.0) == doctest::Approx(4.8188).epsilon(2e-4));
}

TEST_CASE("lambertian order grows as the beam narrows") {
  double prev = lambertian_order(1.5);
  for (double a = 1.4; a > 0.05; a -= 0.1) {
    const double m = lambertian_order(a);
    CHECK(m > prev);
    prev = m;
  }
  CHECK_THROWS_AS(lambertian_order(0.0), std::domain_error);
  CHECK_THROWS_AS(lambertian_order(kPi / 2.0), std::domain_error);
  CHECK_THROWS_AS(lambertian_order(-0.3), std::domain_error);
}

TEST_CASE("channel gain hand value and inverse-square law") {
  // phi = psi = 0, m = 1, A_r = 1e-4 m^2, d = 0.5 m, g = 1
  const double expected = 2.0 * 1e-4 / (2.0 * kPi * 0.25);
  CHECK(channel_gain(boresight(0.5)) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(1.2732e-4).epsilon(1e-4));

  const double g1 = channel_gain(boresight(0.25));
  const double g2 = channel_gain(boresight(0.5));
  CHECK(g1 / g2 == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("channel gain vanishes at grazing incidence and rejects bad geometry") {
  ChannelGeometry g = boresight(0.3);
  g.psi = kPi / 2.0;
  CHECK(channel_gain(g) == doctest::Approx(0.0));
  g = boresight(0.3);
  g.d = -1.0;
  CHECK_THROWS_AS(channel_gain(g), std::domain_error);
  g = boresight(0.3);
  g.phi = kPi / 2.0;  // phi must stay below pi/2
  CHECK_THROWS_AS(channel_gain(g), std::domain_error);
}

TEST_CASE("channel gain is monotone nonincreasing in both angles") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    ChannelGeometry g = boresight(rng.uniform(0.1, 0.6));
    double prev = channel_gain(g);
    for (double a = 0.1; a < 1.5; a += 0.1) {
      g.phi = a;
      g.psi = a;
      const double now = channel_gain(g);
      CHECK(now <= prev + 1e-15);
      prev = now;
    }
  }
}

TEST_CASE("led impedance DC limit is R_c + R_q") {
  const CircuitParams p{5.0, 500e-12, 15.0, 5e-9};
  const cplx z = led_impedance(p, 0.0);
  CHECK(z.real() == doctest::Approx(20.0).epsilon(1e-15));
  CHECK(z.imag() == doctest::Approx(0.0));
}

TEST_CASE("led impedance matches the stepwise parallel/series composition") {
  // independent oracle: 1/(jwC_j) // (R_c + R_q // 1/(jwC_q))
  const CircuitParams p{5.0, 500e-12, 15.0, 5e-9};
  auto par = [](cplx a, cplx b) { return a * b / (a + b); };
  for (double f : {1e5, 1e6, 1e7, 5e7, 1e8}) {
    const double w = 2.0 * kPi * f;
    const cplx zcj = 1.0 / (cplx(0.0, w) * p.c_j);
    const cplx zcq = 1.0 / (cplx(0.0, w) * p.c_q);
    const cplx oracle = par(zcj, p.r_c + par(cplx(p.r_q), zcq));
    const cplx closed = led_impedance(p, w);
    CHECK(std::abs(closed - oracle) <= 1e-10 * std::abs(oracle));
  }
}

TEST_CASE("led impedance magnitude collapses at high frequency") {
  const CircuitParams p{5.0, 500e-12, 15.0, 5e-9};
  CHECK(std::abs(led_impedance(p, 2.0 * kPi * 1e12)) < 1e-2);
  CHECK(std::abs(led_impedance(p, 2.0 * kPi * 1e15)) < 1e-5);
}

TEST_CASE("transfer function DC value and exact linearity in zeta") {
  const CircuitParams p{5.0, 500e-12, 15.0, 5e-9};
  const cplx dc = vlc_transfer(p, {0.37}, 0.0);
  CHECK(dc.real() == doctest::Approx(0.37).epsilon(1e-15));
  CHECK(dc.imag() == 0.0);

  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const double w = 2.0 * kPi * std::pow(10.0, rng.uniform(5.0, 8.0));
    const double zeta = std::pow(10.0, rng.uniform(-2.0, 2.0));
    const cplx unit = vlc_transfer(p, {1.0}, w);
    const cplx scaled = vlc_transfer(p, {zeta}, w);
    CHECK(scaled == cplx(zeta * unit.real(), zeta * unit.imag()));
  }
}

TEST_CASE("transfer magnitude is monotone nonincreasing for random positive parameters") {
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    const CircuitParams p{std::pow(10.0, rng.uniform(-0.3, 1.7)),
                          std::pow(10.0, rng.uniform(-10.3, -8.3)),
                          std::pow(10.0, rng.uniform(0.2, 2.2)),
                          std::pow(10.0, rng.uniform(-9.3, -7.3))};
    double prev = std::abs(vlc_transfer(p, {1.0}, 0.0));
    for (int i = 1; i <= 200; ++i) {
      const double w = 2.0 * kPi * std::pow(10.0, 4.0 + 5.0 * i / 200.0);
      const double mag = std::abs(vlc_transfer(p, {1.0}, w));
      CHECK(mag <= prev * (1.0 + 1e-12));
      prev = mag;
    }
  }
}

TEST_CASE("-3 dB corner located by bisection sits where the magnitude halves in power") {
  const CircuitParams p{5.0, 500e-12, 15.0, 5e-9};
  const LinkScale s{2.5};
  const double target = 2.5 / std::sqrt(2.0);
  double lo = 2.0 * kPi * 1e5, hi = 2.0 * kPi * 1e9;
  REQUIRE(std::abs(vlc_transfer(p, s, lo)) > target);
  REQUIRE(std::abs(vlc_transfer(p, s, hi)) < target);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::abs(vlc_transfer(p, s, mid)) > target ? lo : hi) = mid;
  }
  const double f_corner = 0.5 * (lo + hi) / (2.0 * kPi);
  CHECK(std::abs(vlc_transfer(p, s, 2.0 * kPi * f_corner)) ==
        doctest::Approx(target).epsilon(1e-9));
  // frozen from the quartic |D(w)|^2 = 2 solved at 50-digit precision
  CHECK(f_corner == doctest::Approx(1.9222609e6).epsilon(1e-6));
}

TEST_CASE("sweep response matches pointwise evaluation and grid length") {
  const CircuitParams p{5.0, 500e-12, 15.0, 5e-9};
  const LinkScale s{1.3};
  FrequencyGrid g2;
  g2.hz = {2e5, 7e6};
  const S21Sweep sw = sweep_response(p, s, g2);
  REQUIRE(sw.size() == 2);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(sw.values[i] == vlc_transfer(p, s, 2.0 * kPi * g2.hz[i]));

  const FrequencyGrid g = FrequencyGrid::log_spaced(1e5, 1e8, 750);
  const S21Sweep full = sweep_response(p, s, g);
  CHECK(full.size() == 750);
  // corner sits in the MHz range, so the first point is still near zeta
  CHECK(std::abs(full.values.front()) == doctest::Approx(1.3).epsilon(5e-3));
}

TEST_CASE("frequency grid validation") {
  CHECK_THROWS_AS(FrequencyGrid::log_spaced(1e8, 1e5, 10), std::domain_error);
  CHECK_THROWS_AS(FrequencyGrid::log_spaced(1e5, 1e8, 1), std::domain_error);
  FrequencyGrid g;
  g.hz = {1e5, 1e5};
  CHECK_FALSE(g.valid());
  g.hz = {1e5, 2e5, 3e5};
  CHECK(g.valid());
}

TEST_CASE("circuit parameter validation") {
  CHECK_THROWS_AS((CircuitParams{0.0, 1e-12, 1.0, 1e-9}.require_valid()), std::domain_error);
  CHECK_THROWS_AS((CircuitParams{1.0, -1e-12, 1.0, 1e-9}.require_valid()), std::domain_error);
  CHECK_NOTHROW(CircuitParams::nominal().require_valid());
}
