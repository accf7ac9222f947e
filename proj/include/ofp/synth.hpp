#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ofp/circuit.hpp"
#include "ofp/parallel.hpp"

namespace ofp {

/// Default lumped electronics gain (power amplifier, driver, receiver chain,
/// quantum efficiency). Chosen so that, over the default 0.1-0.6 m geometry
/// range, noise powers swept from -90 dBm up to 0 dBm (against the -5 dBm
/// drive) go from negligible to destructive.
constexpr double kDefaultElectronicsGain = 1e6;

/// Sentinel for add_noise: leave the sweep untouched.
constexpr double kNoiseOff = -std::numeric_limits<double>::infinity();

/// Per-parameter relative spreads (fractions).
struct ParamSpread {
  double r_c;
  double c_j;
  double r_q;
  double c_q;
};

/// Manufacturing-varied device population. Each parameter of each device is
/// drawn as nominal * (1 + u) with u uniform in +-spread. `tolerance` is the
/// common spread; `tolerance_overrides` can pin individual parameters (e.g.
/// a population whose C_q barely varies).
struct PopulationSpec {
  int n_devices = 4;
  CircuitParams nominal = CircuitParams::nominal();
  double tolerance = 0.10;
  std::optional<ParamSpread> tolerance_overrides;
  double intra_device_jitter = 0.01;
  std::uint64_t seed = 1;

  ParamSpread spreads() const;
  void require_valid() const;
};

struct DeviceGroundTruth {
  std::string device_id;
  CircuitParams true_params;
};

/// Labeled sweep collection; labels[i] is the device that produced sweeps[i].
struct SweepDataset {
  std::vector<S21Sweep> sweeps;
  std::vector<std::string> labels;
};

/// Measurement-position sampler settings. d uniform in [d_min, d_max],
/// irradiance and incidence angles uniform in [0, angle_max].
struct GeometrySampling {
  int n_positions = 15;
  double d_min = 0.1;  // m
  double d_max = 0.6;  // m
  double angle_max = 0.5235987755982988;  // 30 deg
  double phi_half = 1.0471975511965976;   // 60 deg -> Lambertian order 1
  double a_r = 1e-4;                      // m^2
  double g_psi = 1.0;
  std::uint64_t seed = 2;

  void require_valid() const;
};

/// Draw a device population. Deterministic in spec.seed.
std::vector<DeviceGroundTruth> sample_population(const PopulationSpec& spec);

/// Draw measurement geometries. Deterministic in gs.seed.
std::vector<ChannelGeometry> sample_geometries(const GeometrySampling& gs);

/// zeta = electronics_gain * channel_gain(geom). Throws std::domain_error on
/// an unmeasurable position (zero channel gain).
LinkScale zeta_for(const ChannelGeometry& geom, double electronics_gain);

/// One sweep per (device, geometry, rep), device-major order. Per-measurement
/// parameters are true_params * (1 + jitter draw). Each cell derives its own
/// RNG stream from `seed`, so results are identical in both exec modes.
SweepDataset simulate_dataset(const std::vector<DeviceGroundTruth>& devices,
                              const std::vector<ChannelGeometry>& geometries,
                              int reps, const FrequencyGrid& grid, double jitter,
                              double electronics_gain, std::uint64_t seed,
                              ExecMode mode = ExecMode::Serial);

/// Superimpose circular complex Gaussian noise with per-point variance
///   sigma^2 = 10^((noise_power_dbm - signal_power_dbm) / 10)
/// in S21 units (the sweep values are referenced to the injected tone, so
/// sigma^2 is the noise-to-drive power ratio). noise_power_dbm of -inf
/// returns the sweep unchanged.
S21Sweep add_noise(const S21Sweep& sweep, double noise_power_dbm,
                   double signal_power_dbm, std::uint64_t seed);

}  // namespace ofp
