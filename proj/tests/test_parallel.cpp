// Serial is the reference implementation; the OpenMP path must reproduce it
// bit for bit (every kernel derives per-index RNG streams).

#include "doctest.h"
#include "ofp/extract.hpp"
#include "ofp/synth.hpp"

using namespace ofp;

namespace {
const FrequencyGrid kGrid = FrequencyGrid::log_spaced(1e5, 1e8, 400);
}

TEST_CASE("dataset synthesis is identical in serial and parallel modes") {
  PopulationSpec spec;
  const auto pop = sample_population(spec);
  GeometrySampling gs;
  gs.n_positions = 6;
  const auto geoms = sample_geometries(gs);

  const auto serial = simulate_dataset(pop, geoms, 4, kGrid, 0.01, kDefaultElectronicsGain, 99,
                                       ExecMode::Serial);
  const auto parallel = simulate_dataset(pop, geoms, 4, kGrid, 0.01, kDefaultElectronicsGain, 99,
                                         ExecMode::Parallel);
  REQUIRE(serial.sweeps.size() == parallel.sweeps.size());
  CHECK(serial.labels == parallel.labels);
  for (std::size_t i = 0; i < serial.sweeps.size(); ++i)
    CHECK(serial.sweeps[i].values == parallel.sweeps[i].values);
}

TEST_CASE("dataset fitting is identical in serial and parallel modes") {
  PopulationSpec spec;
  spec.n_devices = 2;
  const auto pop = sample_population(spec);
  GeometrySampling gs;
  gs.n_positions = 3;
  auto ds = simulate_dataset(pop, sample_geometries(gs), 2, kGrid, 0.01,
                             kDefaultElectronicsGain, 7, ExecMode::Serial);
  for (std::size_t i = 0; i < ds.sweeps.size(); ++i)
    ds.sweeps[i] = add_noise(ds.sweeps[i], -50.0, -5.0, 1000 + i);

  const auto serial = fit_dataset(ds.sweeps, FitOptions{}, ExecMode::Serial);
  const auto parallel = fit_dataset(ds.sweeps, FitOptions{}, ExecMode::Parallel);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].params.r_c == parallel[i].params.r_c);
    CHECK(serial[i].params.c_j == parallel[i].params.c_j);
    CHECK(serial[i].params.r_q == parallel[i].params.r_q);
    CHECK(serial[i].params.c_q == parallel[i].params.c_q);
    CHECK(serial[i].zeta.zeta == parallel[i].zeta.zeta);
    CHECK(serial[i].mse == parallel[i].mse);
    CHECK(serial[i].converged == parallel[i].converged);
  }
}

TEST_CASE("noise injection through parallel_for matches the serial loop") {
  const auto clean = sweep_response(CircuitParams::nominal(), {2.0}, kGrid);
  std::vector<S21Sweep> serial(16), parallel(16);
  for (std::size_t i = 0; i < serial.size(); ++i)
    serial[i] = add_noise(clean, -35.0, -5.0, 40 + i);
  parallel_for(parallel.size(), ExecMode::Parallel,
               [&](std::size_t i) { parallel[i] = add_noise(clean, -35.0, -5.0, 40 + i); });
  for (std::size_t i = 0; i < serial.size(); ++i)
    CHECK(serial[i].values == parallel[i].values);
}
