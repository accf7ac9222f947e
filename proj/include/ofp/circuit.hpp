#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace ofp {

/// Equivalent-circuit parameters of one LED transmitter: cladding
/// resistance R_c, barrier+parasitic capacitance C_j, and the quantum-well
/// pair R_q / C_q. All four are strictly positive and finite.
struct CircuitParams {
  double r_c;  // ohm
  double c_j;  // farad
  double r_q;  // ohm
  double c_q;  // farad

  /// Toolkit defaults: a white LED with its -3 dB corner in the low MHz.
  static CircuitParams nominal() { return {5.0, 500e-12, 15.0, 5e-9}; }

  bool valid() const;
  void require_valid() const;  // throws std::domain_error
};

/// Lumped link gain zeta: amplifier, driver and receiver gains, quantum
/// efficiency and the optical channel loss collapsed into one scale. It
/// depends on equipment and position, not on the LED die.
struct LinkScale {
  double zeta;
  bool valid() const;
  void require_valid() const;
};

/// Line-of-sight link geometry.
struct ChannelGeometry {
  double d;         // Tx-Rx distance, m (> 0)
  double phi;       // irradiance angle, rad, [0, pi/2)
  double psi;       // incidence angle, rad, [0, pi/2]
  double phi_half;  // emission semi-angle, rad, (0, pi/2)
  double a_r;       // detector area, m^2 (> 0)
  double g_psi;     // concentrator gain (>= 0)

  bool valid() const;
  void require_valid() const;  // throws std::domain_error
};

/// Strictly increasing positive frequency grid, at least two points.
struct FrequencyGrid {
  std::vector<double> hz;

  static FrequencyGrid log_spaced(double f_min, double f_max, std::size_t n);

  std::size_t size() const { return hz.size(); }
  bool valid() const;
  void require_valid() const;
};

/// One recorded (or synthesized) S21 frequency sweep: complex transmission
/// per grid point plus optional provenance metadata.
struct S21Sweep {
  FrequencyGrid grid;
  std::vector<std::complex<double>> values;
  std::optional<std::string> device_id;
  std::optional<ChannelGeometry> geometry;
  std::optional<double> noise_power_dbm;  // unset = clean
  double signal_power_dbm = -5.0;

  std::size_t size() const { return values.size(); }
  bool valid() const;
  void require_valid() const;
};

/// Denominator coefficients of the transfer function,
/// D(w) = 1 - a w^2 + j b w with a = Rc Rq Cq Cj and
/// b = RqCq + RcCj + RqCj. The magnitude response depends on the four R/C
/// parameters only through (a, b); the extraction code leans on this.
struct DenomCoeffs {
  double a;
  double b;
};
DenomCoeffs denom_coeffs(const CircuitParams& p);

/// Lambertian emission order m = -ln 2 / ln(cos phi_half).
/// Throws std::domain_error unless 0 < phi_half < pi/2.
double lambertian_order(double phi_half);

/// Line-of-sight channel gain
///   H_C = (m+1) A_r / (2 pi d^2) * cos^m(phi) * g(psi) * cos(psi).
double channel_gain(const ChannelGeometry& g);

/// LED impedance at angular frequency w:
///   Z(w) = (Rc + Rq + j w Rc Rq Cq) / D(w).
std::complex<double> led_impedance(const CircuitParams& p, double w);

/// System transfer function at angular frequency w: H(w) = zeta / D(w).
std::complex<double> vlc_transfer(const CircuitParams& p, const LinkScale& s, double w);

/// Evaluate vlc_transfer across a grid (w = 2 pi f).
S21Sweep sweep_response(const CircuitParams& p, const LinkScale& s, const FrequencyGrid& grid);

}  // namespace ofp
