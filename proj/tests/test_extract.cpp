#include <cmath>
#include <map>

#include "doctest.h"
#include "ofp/extract.hpp"
#include "ofp/rng.hpp"
#include "ofp/synth.hpp"

using namespace ofp;

namespace {

constexpr double kPi = 3.14159265358979323846;
const FrequencyGrid kGrid = FrequencyGrid::log_spaced(1e5, 1e8, 750);

// Devices on the canonical recovery section: R_c and C_j carry one common
// factor, C_q sits at the anchor, R_q is free. The magnitude response pins
// exactly two denominator coefficients, so this is the family a round trip
// can genuinely invert.
CircuitParams section_device(Rng& rng) {
  const CircuitParams n = CircuitParams::nominal();
  const double rho = 1.0 + rng.uniform(-0.1, 0.1);
  return {n.r_c * rho, n.c_j * rho, n.r_q * (1.0 + rng.uniform(-0.1, 0.1)), n.c_q};
}

S21Sweep sweep_at(const CircuitParams& p, double zeta) {
  return sweep_response(p, {zeta}, kGrid);
}

}  // namespace

TEST_CASE("residual is zero for a model evaluated on its own sweep") {
  const CircuitParams p{5.3, 480e-12, 14.2, 5.1e-9};
  const auto sw = sweep_at(p, 3.7);
  CHECK(residual_mse(p, {3.7}, sw) <= 1e-28);
  // and zeta does not matter: the curves are max-normalized
  CHECK(residual_mse(p, {123.0}, sw) <= 1e-28);
}

TEST_CASE("residual is invariant under scaling of the measured curve") {
  const CircuitParams p{5.0, 500e-12, 15.0, 5e-9};
  const CircuitParams q{5.5, 450e-12, 16.0, 4.6e-9};
  auto sw = sweep_at(p, 1.0);
  const double before = residual_mse(q, {1.0}, sw);
  for (auto& v : sw.values) v *= 37.25;
  CHECK(residual_mse(q, {1.0}, sw) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("residual rejects an all-zero sweep") {
  S21Sweep sw;
  sw.grid = FrequencyGrid::log_spaced(1e5, 1e8, 16);
  sw.values.assign(16, {0.0, 0.0});
  CHECK_THROWS_AS(residual_mse(CircuitParams::nominal(), {1.0}, sw), std::invalid_argument);
}

TEST_CASE("initial guess lands within x3 of the truth for population devices") {
  PopulationSpec spec;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    spec.seed = seed;
    for (const auto& dev : sample_population(spec)) {
      const auto sw = sweep_at(dev.true_params, 2.0);
      const auto [guess, zeta0] = initial_guess(sw);
      for (auto [g, t] : {std::pair{guess.r_c, dev.true_params.r_c},
                          {guess.c_j, dev.true_params.c_j},
                          {guess.r_q, dev.true_params.r_q},
                          {guess.c_q, dev.true_params.c_q}}) {
        CHECK(g / t <= 3.0);
        CHECK(g / t >= 1.0 / 3.0);
      }
      CHECK(zeta0.zeta == doctest::Approx(2.0).epsilon(0.01));
    }
  }
}

TEST_CASE("initial guess needs a decade of bandwidth") {
  const auto sw = sweep_response(CircuitParams::nominal(), {1.0},
                                 FrequencyGrid::log_spaced(1e6, 5e6, 64));
  CHECK_THROWS_AS(initial_guess(sw), std::invalid_argument);
}

TEST_CASE("flat in-band response falls back to the anchors and still converges") {
  // tiny capacitances push the corner far above 100 MHz
  const CircuitParams p{5.0, 1e-15, 15.0, 1e-14};
  const auto sw = sweep_at(p, 1.4);
  const auto [guess, zeta0] = initial_guess(sw);
  CHECK(guess.r_c == CircuitParams::nominal().r_c);
  CHECK(guess.r_q == CircuitParams::nominal().r_q);  // fallback, not corner-derived
  CHECK(zeta0.zeta == doctest::Approx(1.4).epsilon(1e-6));

  const FitResult fit = fit_sweep(sw);
  CHECK(fit.converged);
  CHECK(fit.mse < 1e-10);
}

TEST_CASE("round trip: section devices recover lambda to 0.1% with mse below 1e-10") {
  Rng rng(2024);
  GeometrySampling gs;
  for (int trial = 0; trial < 20; ++trial) {
    const CircuitParams truth = section_device(rng);
    gs.seed = 100 + static_cast<std::uint64_t>(trial);
    const auto geom = sample_geometries(gs).front();
    const double zeta = zeta_for(geom, kDefaultElectronicsGain).zeta;
    const FitResult fit = fit_sweep(sweep_at(truth, zeta));
    REQUIRE(fit.converged);
    CHECK(fit.mse < 1e-10);
    CHECK(std::abs(fit.params.r_c / truth.r_c - 1.0) < 1e-3);
    CHECK(std::abs(fit.params.c_j / truth.c_j - 1.0) < 1e-3);
    CHECK(std::abs(fit.params.r_q / truth.r_q - 1.0) < 1e-3);
    CHECK(std::abs(fit.params.c_q / truth.c_q - 1.0) < 1e-3);
    CHECK(std::abs(fit.zeta.zeta / zeta - 1.0) < 1e-3);
  }
}

TEST_CASE("noisy boresight sweep at -40 dBm fits below the 1e-4 mse bar") {
  const CircuitParams truth = CircuitParams::nominal();
  const ChannelGeometry g{0.3, 0.0, 0.0, kPi / 3.0, 1e-4, 1.0};
  const double zeta = zeta_for(g, kDefaultElectronicsGain).zeta;
  const auto noisy = add_noise(sweep_at(truth, zeta), -40.0, -5.0, 7);
  const FitResult fit = fit_sweep(noisy);
  CHECK(fit.converged);
  CHECK(fit.mse < 1e-4);
}

TEST_CASE("max_iterations = 0 returns the initial guess unconverged") {
  const auto sw = sweep_at(CircuitParams::nominal(), 2.0);
  FitOptions opts;
  opts.max_iterations = 0;
  const FitResult fit = fit_sweep(sw, opts);
  CHECK_FALSE(fit.converged);
  CHECK(fit.iterations == 0);
  const auto [guess, zeta0] = initial_guess(sw);
  CHECK(fit.params.r_c == guess.r_c);
  CHECK(fit.params.c_j == guess.c_j);
  CHECK(fit.params.r_q == guess.r_q);
  CHECK(fit.params.c_q == guess.c_q);
  CHECK(fit.zeta.zeta == zeta0.zeta);
}

TEST_CASE("accepted Levenberg-Marquardt steps never increase the residual") {
  const auto noisy = add_noise(sweep_at(CircuitParams::nominal(), 5.0), -30.0, -5.0, 99);
  std::vector<double> trace;
  const FitResult fit = fit_sweep(noisy, FitOptions{}, &trace);
  CHECK(fit.converged);
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1]);
}

TEST_CASE("position invariance: lambda stays put while zeta moves with geometry") {
  Rng rng(5);
  const CircuitParams truth = CircuitParams::nominal();
  GeometrySampling gs;
  gs.n_positions = 8;
  gs.seed = 77;
  const double jitter = 0.01;

  std::vector<FitResult> fits;
  for (const auto& geom : sample_geometries(gs)) {
    CircuitParams p;
    p.r_c = truth.r_c * (1.0 + rng.uniform(-jitter, jitter));
    p.c_j = truth.c_j * (1.0 + rng.uniform(-jitter, jitter));
    p.r_q = truth.r_q * (1.0 + rng.uniform(-jitter, jitter));
    p.c_q = truth.c_q * (1.0 + rng.uniform(-jitter, jitter));
    fits.push_back(fit_sweep(sweep_at(p, zeta_for(geom, kDefaultElectronicsGain).zeta)));
    REQUIRE(fits.back().converged);
  }
  auto rel_spread = [](const std::vector<double>& xs) {
    const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
    return (*mx - *mn) / *mn;
  };
  std::vector<double> rc, cj, rq, zeta;
  for (const auto& f : fits) {
    rc.push_back(f.params.r_c);
    cj.push_back(f.params.c_j);
    rq.push_back(f.params.r_q);
    zeta.push_back(f.zeta.zeta);
  }
  // jitter of 1% can move the denominator coefficients by a few percent;
  // position must contribute nothing beyond that
  CHECK(rel_spread(rc) < 5.0 * jitter);
  CHECK(rel_spread(cj) < 5.0 * jitter);
  CHECK(rel_spread(rq) < 5.0 * jitter);
  CHECK(rel_spread(zeta) > 1.0);  // geometry swings the link scale hugely
}

TEST_CASE("scaling the sweep rescales zeta and nothing else") {
  Rng rng(31);
  const CircuitParams truth = section_device(rng);
  auto sw = sweep_at(truth, 4.2);
  const FitResult base = fit_sweep(sw);
  for (auto& v : sw.values) v *= 12.5;
  const FitResult scaled = fit_sweep(sw);
  CHECK(scaled.params.r_c == doctest::Approx(base.params.r_c).epsilon(1e-9));
  CHECK(scaled.params.c_j == doctest::Approx(base.params.c_j).epsilon(1e-9));
  CHECK(scaled.params.r_q == doctest::Approx(base.params.r_q).epsilon(1e-9));
  CHECK(scaled.zeta.zeta == doctest::Approx(12.5 * base.zeta.zeta).epsilon(1e-9));
}

TEST_CASE("phase-mode fitting also recovers section devices") {
  Rng rng(8);
  const CircuitParams truth = section_device(rng);
  FitOptions opts;
  opts.use_phase = true;
  const FitResult fit = fit_sweep(sweep_at(truth, 2.0), opts);
  CHECK(fit.converged);
  CHECK(std::abs(fit.params.r_q / truth.r_q - 1.0) < 1e-3);
  CHECK(fit.mse < 1e-10);
}

TEST_CASE("fingerprint projects converged fits and rejects the rest") {
  FitResult fit;
  fit.params = {5.0, 500e-12, 15.0, 5e-9};
  fit.zeta = {0.01};
  fit.mse = 0.0;
  fit.iterations = 3;
  fit.converged = true;
  const OpticFingerprint fp = fingerprint(fit);
  CHECK(fp.r_c == 5.0);
  CHECK(fp.c_j == 500e-12);
  CHECK(fp.r_q == 15.0);

  // zeta and C_q do not reach the fingerprint
  FitResult other = fit;
  other.zeta = {123.0};
  other.params.c_q = 9e-9;
  const OpticFingerprint fp2 = fingerprint(other);
  CHECK(fp2.r_c == fp.r_c);
  CHECK(fp2.c_j == fp.c_j);
  CHECK(fp2.r_q == fp.r_q);

  fit.converged = false;
  CHECK_THROWS_AS(fingerprint(fit), std::invalid_argument);
}

TEST_CASE("fit rejects short and non-finite sweeps") {
  S21Sweep sw;
  sw.grid.hz = {1e5, 2e5, 4e5, 8e5, 1.6e6, 3.2e6, 6.4e6, 1.28e7};
  sw.values.assign(8, {1.0, 0.0});
  CHECK_THROWS_AS(fit_sweep(sw), std::invalid_argument);  // < 10 points

  auto bad = sweep_at(CircuitParams::nominal(), 1.0);
  bad.values[5] = {std::nan(""), 0.0};
  CHECK_THROWS(fit_sweep(bad));
}

TEST_CASE("dataset fitting is an independent map over sweeps") {
  PopulationSpec spec;
  spec.n_devices = 2;
  const auto pop = sample_population(spec);
  GeometrySampling gs;
  gs.n_positions = 2;
  const auto ds = simulate_dataset(pop, sample_geometries(gs), 2, kGrid, 0.01,
                                   kDefaultElectronicsGain, 11);
  const auto fits = fit_dataset(ds.sweeps);
  REQUIRE(fits.size() == ds.sweeps.size());
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const FitResult lone = fit_sweep(ds.sweeps[i]);
    CHECK(fits[i].params.r_q == lone.params.r_q);
    CHECK(fits[i].mse == lone.mse);
  }
}
