#include "ofp/circuit.hpp"

#include <cmath>
#include <stdexcept>

namespace ofp {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = 1.57079632679489661923;

bool pos_finite(double x) { return std::isfinite(x) && x > 0.0; }
}  // namespace

bool CircuitParams::valid() const {
  return pos_finite(r_c) && pos_finite(c_j) && pos_finite(r_q) && pos_finite(c_q);
}

void CircuitParams::require_valid() const {
  if (!valid())
    throw std::domain_error("CircuitParams: all of r_c, c_j, r_q, c_q must be positive and finite");
}

bool LinkScale::valid() const { return pos_finite(zeta); }

void LinkScale::require_valid() const {
  if (!valid()) throw std::domain_error("LinkScale: zeta must be positive and finite");
}

bool ChannelGeometry::valid() const {
  return pos_finite(d) && pos_finite(a_r) && std::isfinite(g_psi) && g_psi >= 0.0 &&
         phi_half > 0.0 && phi_half < kHalfPi && phi >= 0.0 && phi < kHalfPi &&
         psi >= 0.0 && psi <= kHalfPi && std::isfinite(phi) && std::isfinite(psi);
}

void ChannelGeometry::require_valid() const {
  if (!valid()) throw std::domain_error("ChannelGeometry: invalid geometry");
}

FrequencyGrid FrequencyGrid::log_spaced(double f_min, double f_max, std::size_t n) {
  if (!(pos_finite(f_min) && pos_finite(f_max)) || f_min >= f_max || n < 2)
    throw std::domain_error("FrequencyGrid::log_spaced: need 0 < f_min < f_max and n >= 2");
  FrequencyGrid g;
  g.hz.resize(n);
  const double l0 = std::log10(f_min);
  const double l1 = std::log10(f_max);
  for (std::size_t i = 0; i < n; ++i)
    g.hz[i] = std::pow(10.0, l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.hz.front() = f_min;
  g.hz.back() = f_max;
  return g;
}

bool FrequencyGrid::valid() const {
  if (hz.size() < 2) return false;
  double prev = 0.0;
  for (double f : hz) {
    if (!pos_finite(f) || f <= prev) return false;
    prev = f;
  }
  return true;
}

void FrequencyGrid::require_valid() const {
  if (!valid())
    throw std::domain_error("FrequencyGrid: points must be strictly increasing, positive, length >= 2");
}

bool S21Sweep::valid() const {
  if (!grid.valid() || values.size() != grid.size()) return false;
  for (const auto& v : values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

void S21Sweep::require_valid() const {
  if (!valid()) throw std::domain_error("S21Sweep: values must be finite and aligned with a valid grid");
}

DenomCoeffs denom_coeffs(const CircuitParams& p) {
  return {p.r_c * p.r_q * p.c_q * p.c_j, p.r_q * p.c_q + p.r_c * p.c_j + p.r_q * p.c_j};
}

double lambertian_order(double phi_half) {
  if (!(phi_half > 0.0 && phi_half < kHalfPi))
    throw std::domain_error("lambertian_order: phi_half must lie in (0, pi/2)");
  return -std::log(2.0) / std::log(std::cos(phi_half));
}

double channel_gain(const ChannelGeometry& g) {
  g.require_valid();
  const double m = lambertian_order(g.phi_half);
  const double geometric = (m + 1.0) * g.a_r / (2.0 * kPi * g.d * g.d);
  // exact zero at grazing incidence (cos(pi/2) rounds to 6e-17 otherwise)
  const double cos_psi = g.psi == kHalfPi ? 0.0 : std::cos(g.psi);
  return geometric * std::pow(std::cos(g.phi), m) * g.g_psi * cos_psi;
}

std::complex<double> led_impedance(const CircuitParams& p, double w) {
  p.require_valid();
  if (!(w >= 0.0) || !std::isfinite(w)) throw std::domain_error("led_impedance: w must be >= 0");
  const auto [a, b] = denom_coeffs(p);
  const std::complex<double> num(p.r_c + p.r_q, w * p.r_c * p.r_q * p.c_q);
  const std::complex<double> den(1.0 - a * w * w, b * w);
  return num / den;
}

std::complex<double> vlc_transfer(const CircuitParams& p, const LinkScale& s, double w) {
  p.require_valid();
  s.require_valid();
  if (!(w >= 0.0) || !std::isfinite(w)) throw std::domain_error("vlc_transfer: w must be >= 0");
  const auto [a, b] = denom_coeffs(p);
  // scale the unit response so the result is exactly linear in zeta
  const std::complex<double> unit = 1.0 / std::complex<double>(1.0 - a * w * w, b * w);
  return {s.zeta * unit.real(), s.zeta * unit.imag()};
}

S21Sweep sweep_response(const CircuitParams& p, const LinkScale& s, const FrequencyGrid& grid) {
  grid.require_valid();
  p.require_valid();
  s.require_valid();
  S21Sweep out;
  out.grid = grid;
  out.values.resize(grid.size());
  const auto [a, b] = denom_coeffs(p);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = 2.0 * kPi * grid.hz[i];
    const std::complex<double> unit = 1.0 / std::complex<double>(1.0 - a * w * w, b * w);
    out.values[i] = {s.zeta * unit.real(), s.zeta * unit.imag()};
  }
  return out;
}

}  // namespace ofp
