#pragma once

#include <utility>
#include <vector>

#include "ofp/circuit.hpp"
#include "ofp/parallel.hpp"

namespace ofp {

/// The 3-D optic fingerprint lambda = [R_c, C_j, R_q]. zeta and C_q are
/// deliberately excluded: zeta tracks equipment and position, and C_q's
/// fitted value carries no device information beyond fit noise.
struct OpticFingerprint {
  double r_c;
  double c_j;
  double r_q;

  bool valid() const;
  void require_valid() const;
};

struct FitOptions {
  int max_iterations = 200;
  double mse_tolerance = 1e-10;
  double step_tolerance = 1e-9;
  double damping_init = 1e-3;
  bool use_phase = false;
  /// Anchors for the initial guess and for the gauge convention (see
  /// fit_sweep). These are the toolkit defaults, not per-device truth.
  CircuitParams nominal = CircuitParams::nominal();

  void require_valid() const;
};

struct FitResult {
  CircuitParams params;
  LinkScale zeta;
  double mse;       // residual_mse of params against the sweep
  int iterations;   // Levenberg-Marquardt iterations performed
  bool converged;
};

/// Mean squared residual between the model and measured magnitude curves,
/// each normalized by its own maximum:
///   mse = (1/n) sum_i (|H|_i / max|H| - m_i / max m)^2.
/// Scale-invariant in both the measured data and zeta. Throws on an
/// all-zero sweep (normalization undefined).
double residual_mse(const CircuitParams& p, const LinkScale& s, const S21Sweep& sweep);

/// Coarse starting point: zeta0 = mean magnitude over the lowest 5% of the
/// grid; the -3 dB corner (first point at or below zeta0/sqrt(2)) sets
/// R_q C_q = 1/(2 pi f_c) with R_c, C_j, C_q at their nominal anchors. If no
/// corner exists in-band, all four parameters fall back to the anchors.
/// Requires the grid to span at least a decade.
std::pair<CircuitParams, LinkScale> initial_guess(const S21Sweep& sweep,
                                                  const CircuitParams& nominal = CircuitParams::nominal());

/// Nonlinear least-squares parameter extraction.
///
/// The magnitude of H(w) = zeta / (1 - a w^2 + j b w) determines exactly
/// three quantities: zeta and the denominator coefficients (a, b). The five
/// model parameters are therefore recovered in a fixed gauge: starting from
/// initial_guess, a weighted linear least-squares pass estimates
/// (zeta, a, b) from the magnitude curve, (a, b) is mapped back onto the
/// parameters with C_q held at its anchor and R_c, C_j sharing one common
/// scale factor, and a damped Gauss-Newton (Levenberg-Marquardt) polish
/// over the five log-parameters minimizes the residual. zeta is finally
/// rescaled to the measured curve by linear least squares. Deterministic;
/// returns the best parameters seen. max_iterations = 0 returns the coarse
/// initial guess unconverged.
FitResult fit_sweep(const S21Sweep& sweep, const FitOptions& opts = {},
                    std::vector<double>* accepted_mse_trace = nullptr);

/// Project a converged fit onto lambda. Throws std::invalid_argument if the
/// fit did not converge.
OpticFingerprint fingerprint(const FitResult& fit);

/// Independent fits across a dataset; Parallel mode gives identical results.
std::vector<FitResult> fit_dataset(const std::vector<S21Sweep>& sweeps,
                                   const FitOptions& opts = {},
                                   ExecMode mode = ExecMode::Serial);

}  // namespace ofp
