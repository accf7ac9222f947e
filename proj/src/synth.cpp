#include "ofp/synth.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ofp/rng.hpp"

namespace ofp {

namespace {

std::string device_name(int index, int total) {
  int width = total >= 100 ? 3 : 2;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "LED-%0*d", width, index + 1);
  return buf;
}

CircuitParams perturb(const CircuitParams& base, const ParamSpread& s, Rng& rng) {
  // draw order is part of the determinism contract: r_c, c_j, r_q, c_q
  CircuitParams p;
  p.r_c = base.r_c * (1.0 + rng.uniform(-s.r_c, s.r_c));
  p.c_j = base.c_j * (1.0 + rng.uniform(-s.c_j, s.c_j));
  p.r_q = base.r_q * (1.0 + rng.uniform(-s.r_q, s.r_q));
  p.c_q = base.c_q * (1.0 + rng.uniform(-s.c_q, s.c_q));
  return p;
}

}  // namespace

ParamSpread PopulationSpec::spreads() const {
  if (tolerance_overrides) return *tolerance_overrides;
  return {tolerance, tolerance, tolerance, tolerance};
}

void PopulationSpec::require_valid() const {
  nominal.require_valid();
  if (n_devices < 2) throw std::invalid_argument("PopulationSpec: n_devices must be >= 2");
  if (!(tolerance > 0.0 && tolerance < 1.0))
    throw std::invalid_argument("PopulationSpec: tolerance must lie in (0, 1)");
  if (tolerance_overrides) {
    const ParamSpread& s = *tolerance_overrides;
    for (double v : {s.r_c, s.c_j, s.r_q, s.c_q})
      if (!(v >= 0.0 && v < 1.0))
        throw std::invalid_argument("PopulationSpec: tolerance overrides must lie in [0, 1)");
  }
  if (!(intra_device_jitter >= 0.0 && intra_device_jitter < tolerance))
    throw std::invalid_argument("PopulationSpec: intra_device_jitter must lie in [0, tolerance)");
}

void GeometrySampling::require_valid() const {
  if (!(d_min > 0.0 && d_min < d_max))
    throw std::invalid_argument("GeometrySampling: need 0 < d_min < d_max");
  if (n_positions < 1) throw std::invalid_argument("GeometrySampling: n_positions must be >= 1");
  if (!(angle_max >= 0.0 && angle_max < 1.57079632679489661923))
    throw std::invalid_argument("GeometrySampling: angle_max must lie in [0, pi/2)");
  ChannelGeometry probe{d_min, 0.0, 0.0, phi_half, a_r, g_psi};
  probe.require_valid();
}

std::vector<DeviceGroundTruth> sample_population(const PopulationSpec& spec) {
  spec.require_valid();
  const ParamSpread s = spec.spreads();
  Rng root(spec.seed);
  std::vector<DeviceGroundTruth> out;
  out.reserve(spec.n_devices);
  for (int i = 0; i < spec.n_devices; ++i) {
    Rng rng = root.child(static_cast<std::uint64_t>(i));
    out.push_back({device_name(i, spec.n_devices), perturb(spec.nominal, s, rng)});
  }
  return out;
}

std::vector<ChannelGeometry> sample_geometries(const GeometrySampling& gs) {
  gs.require_valid();
  Rng root(gs.seed);
  std::vector<ChannelGeometry> out;
  out.reserve(gs.n_positions);
  for (int i = 0; i < gs.n_positions; ++i) {
    Rng rng = root.child(static_cast<std::uint64_t>(i));
    ChannelGeometry g;
    g.d = rng.uniform(gs.d_min, gs.d_max);
    g.phi = rng.uniform(0.0, gs.angle_max);
    g.psi = rng.uniform(0.0, gs.angle_max);
    g.phi_half = gs.phi_half;
    g.a_r = gs.a_r;
    g.g_psi = gs.g_psi;
    out.push_back(g);
  }
  return out;
}

LinkScale zeta_for(const ChannelGeometry& geom, double electronics_gain) {
  if (!(electronics_gain > 0.0) || !std::isfinite(electronics_gain))
    throw std::domain_error("zeta_for: electronics_gain must be positive");
  const double gain = channel_gain(geom);
  if (gain <= 0.0) throw std::domain_error("zeta_for: unmeasurable position (zero channel gain)");
  return {electronics_gain * gain};
}

SweepDataset simulate_dataset(const std::vector<DeviceGroundTruth>& devices,
                              const std::vector<ChannelGeometry>& geometries,
                              int reps, const FrequencyGrid& grid, double jitter,
                              double electronics_gain, std::uint64_t seed, ExecMode mode) {
  if (reps < 1) throw std::invalid_argument("simulate_dataset: reps must be >= 1");
  if (devices.empty() || geometries.empty())
    throw std::invalid_argument("simulate_dataset: devices and geometries must be non-empty");
  if (!(jitter >= 0.0 && jitter < 1.0))
    throw std::invalid_argument("simulate_dataset: jitter must lie in [0, 1)");
  grid.require_valid();

  // zeta per geometry up front so an unmeasurable position fails early
  std::vector<LinkScale> zetas;
  zetas.reserve(geometries.size());
  for (const auto& g : geometries) zetas.push_back(zeta_for(g, electronics_gain));

  const std::size_t n_geo = geometries.size();
  const std::size_t n_rep = static_cast<std::size_t>(reps);
  const std::size_t total = devices.size() * n_geo * n_rep;

  SweepDataset ds;
  ds.sweeps.resize(total);
  ds.labels.resize(total);

  Rng root(seed);
  const ParamSpread js{jitter, jitter, jitter, jitter};
  parallel_for(total, mode, [&](std::size_t cell) {
    const std::size_t di = cell / (n_geo * n_rep);
    const std::size_t gi = (cell / n_rep) % n_geo;
    Rng rng = root.child(cell);
    CircuitParams measured = perturb(devices[di].true_params, js, rng);
    S21Sweep sw = sweep_response(measured, zetas[gi], grid);
    sw.device_id = devices[di].device_id;
    sw.geometry = geometries[gi];
    ds.sweeps[cell] = std::move(sw);
    ds.labels[cell] = devices[di].device_id;
  });
  return ds;
}

S21Sweep add_noise(const S21Sweep& sweep, double noise_power_dbm,
                   double signal_power_dbm, std::uint64_t seed) {
  sweep.require_valid();
  if (noise_power_dbm == kNoiseOff) return sweep;
  if (!std::isfinite(noise_power_dbm) || !std::isfinite(signal_power_dbm))
    throw std::invalid_argument("add_noise: noise and signal powers must be finite");

  const double sigma2 = std::pow(10.0, (noise_power_dbm - signal_power_dbm) / 10.0);
  const double s = std::sqrt(sigma2 / 2.0);  // per quadrature

  S21Sweep out = sweep;
  Rng rng(seed);
  for (auto& v : out.values) v += std::complex<double>(s * rng.normal(), s * rng.normal());
  out.noise_power_dbm = noise_power_dbm;
  out.signal_power_dbm = signal_power_dbm;
  return out;
}

}  // namespace ofp
