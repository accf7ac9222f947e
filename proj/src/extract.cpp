#include "ofp/extract.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace ofp {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool pos_finite(double x) { return std::isfinite(x) && x > 0.0; }

struct MagData {
  std::vector<double> w;  // angular frequencies
  std::vector<double> m;  // measured magnitudes
  std::vector<double> y;  // m / max(m)
  double max_mag = 0.0;
};

MagData magnitudes(const S21Sweep& sweep) {
  MagData d;
  const std::size_t n = sweep.size();
  d.w.resize(n);
  d.m.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.w[i] = 2.0 * kPi * sweep.grid.hz[i];
    d.m[i] = std::abs(sweep.values[i]);
    d.max_mag = std::max(d.max_mag, d.m[i]);
  }
  if (d.max_mag <= 0.0)
    throw std::invalid_argument("all-zero sweep: magnitude normalization undefined");
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.y[i] = d.m[i] / d.max_mag;
  return d;
}

// Normalized model magnitude curve for denominator coefficients (a, b).
void model_norm(const std::vector<double>& w, double a, double b, std::vector<double>& out) {
  const std::size_t n = w.size();
  out.resize(n);
  double mx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double re = 1.0 - a * w[i] * w[i];
    const double im = b * w[i];
    out[i] = 1.0 / std::sqrt(re * re + im * im);
    mx = std::max(mx, out[i]);
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= mx;
}

double mse_of(const std::vector<double>& w, const std::vector<double>& y, const CircuitParams& p) {
  const auto [a, b] = denom_coeffs(p);
  std::vector<double> f;
  model_norm(w, a, b, f);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = f[i] - y[i];
    s += e * e;
  }
  return s / static_cast<double>(y.size());
}

double low_band_mean(const MagData& d) {
  const std::size_t nlow = std::max<std::size_t>(1, (d.m.size() + 19) / 20);  // ceil(5%)
  double s = 0.0;
  for (std::size_t i = 0; i < nlow; ++i) s += d.m[i];
  return s / static_cast<double>(nlow);
}

struct ZabEstimate {
  double zeta;
  double a;
  double b;
};

// Weighted linear least squares on q = 1/y^2 = c0 (1 + B w^2 + A w^4).
// With weight y^6 the system rows are y^3 * [1, u, u^2] -> y, where
// u = (w tau)^2 keeps the basis near unit scale. Exact on noiseless data;
// the weight suppresses noise-dominated tail points.
std::optional<ZabEstimate> estimate_zab(const MagData& d, double tau) {
  if (!pos_finite(tau)) return std::nullopt;
  const std::size_t n = d.y.size();
  std::vector<double> q0(n), q1(n), q2(n), rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = d.w[i] * tau * d.w[i] * tau;
    const double s = d.y[i] * d.y[i] * d.y[i];
    q0[i] = s;
    q1[i] = s * u;
    q2[i] = s * u * u;
    rhs[i] = d.y[i];
  }
  // modified Gram-Schmidt QR with one re-orthogonalization pass
  std::vector<double>* cols[3] = {&q0, &q1, &q2};
  double R[3][3] = {};
  for (int k = 0; k < 3; ++k) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < k; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += (*cols[j])[i] * (*cols[k])[i];
        R[j][k] += dot;
        for (std::size_t i = 0; i < n; ++i) (*cols[k])[i] -= dot * (*cols[j])[i];
      }
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) nrm += (*cols[k])[i] * (*cols[k])[i];
    nrm = std::sqrt(nrm);
    if (!(nrm > 1e-150)) return std::nullopt;
    R[k][k] = nrm;
    for (std::size_t i = 0; i < n; ++i) (*cols[k])[i] /= nrm;
  }
  double qtb[3];
  for (int k = 0; k < 3; ++k) {
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += (*cols[k])[i] * rhs[i];
    qtb[k] = dot;
  }
  double c[3];
  for (int k = 2; k >= 0; --k) {
    double v = qtb[k];
    for (int j = k + 1; j < 3; ++j) v -= R[k][j] * c[j];
    c[k] = v / R[k][k];
  }
  if (!(c[0] > 0.0) || !std::isfinite(c[0])) return std::nullopt;
  const double Bc = (c[1] / c[0]) * tau * tau;            // b^2 - 2a
  const double Ac = (c[2] / c[0]) * tau * tau * tau * tau;  // a^2
  const double a = std::sqrt(std::max(Ac, 0.0));
  const double b = std::sqrt(std::max(Bc + 2.0 * a, 0.0));
  const double zeta = d.max_mag / std::sqrt(c[0]);
  if (!std::isfinite(a) || !std::isfinite(b) || !pos_finite(zeta)) return std::nullopt;
  return ZabEstimate{zeta, a, b};
}

// Map (a, b) back onto circuit parameters in the canonical gauge: C_q stays
// at its anchor and R_c, C_j share one factor rho. Damped Newton in
// (log rho, log R_q); exact where a solution exists, nullopt otherwise.
std::optional<CircuitParams> gauge_solve(double a_target, double b_target,
                                         const CircuitParams& anchor, double rq_start) {
  if (!pos_finite(a_target) || !pos_finite(b_target) || !pos_finite(rq_start))
    return std::nullopt;
  const double rc0 = anchor.r_c, cj0 = anchor.c_j, cq0 = anchor.c_q;
  double lr = 0.0;                  // log rho
  double lq = std::log(rq_start);   // log R_q
  const double la_t = std::log(a_target), lb_t = std::log(b_target);

  auto eval = [&](double lrv, double lqv, double F[2]) {
    const double rho = std::exp(lrv), rq = std::exp(lqv);
    const double a = rc0 * rho * cj0 * rho * rq * cq0;
    const double b = rq * cq0 + rc0 * cj0 * rho * rho + rq * cj0 * rho;
    F[0] = std::log(a) - la_t;
    F[1] = std::log(b) - lb_t;
    return std::max(std::abs(F[0]), std::abs(F[1]));
  };

  double F[2];
  double err = eval(lr, lq, F);
  for (int it = 0; it < 80 && err > 1e-14; ++it) {
    const double rho = std::exp(lr), rq = std::exp(lq);
    const double b = rq * cq0 + rc0 * cj0 * rho * rho + rq * cj0 * rho;
    // Jacobian rows: d log a = (2, 1); d log b = (j10, j11)
    const double j10 = (2.0 * rc0 * cj0 * rho * rho + rq * cj0 * rho) / b;
    const double j11 = (rq * cq0 + rq * cj0 * rho) / b;
    const double det = 2.0 * j11 - j10;
    if (std::abs(det) < 1e-14) return std::nullopt;
    double dr = (-F[0] * j11 + F[1]) / det;
    double dq = (j10 * F[0] - 2.0 * F[1]) / det;
    dr = std::clamp(dr, -1.0, 1.0);
    dq = std::clamp(dq, -1.0, 1.0);
    double step = 1.0;
    double Ftry[2];
    for (int ls = 0; ls < 40; ++ls) {
      if (eval(lr + step * dr, lq + step * dq, Ftry) < err) break;
      step *= 0.5;
    }
    lr += step * dr;
    lq += step * dq;
    err = eval(lr, lq, F);
  }
  if (err > 1e-10) return std::nullopt;
  CircuitParams out{rc0 * std::exp(lr), cj0 * std::exp(lr), std::exp(lq), cq0};
  if (!out.valid()) return std::nullopt;
  return out;
}

// Residual vector for the LM stage. Magnitude mode compares max-normalized
// magnitude curves; phase mode compares max-magnitude-normalized complex
// curves (2n entries). zeta cancels in both.
struct Residual {
  const MagData* data;
  const S21Sweep* sweep;
  bool use_phase;

  std::size_t size() const { return use_phase ? 2 * data->y.size() : data->y.size(); }

  void operator()(const double* x, std::vector<double>& r) const {
    const CircuitParams p{std::exp(x[0]), std::exp(x[1]), std::exp(x[2]), std::exp(x[3])};
    const auto [a, b] = denom_coeffs(p);
    const std::size_t n = data->y.size();
    r.resize(size());
    if (!use_phase) {
      double mx = 0.0;
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double re = 1.0 - a * data->w[i] * data->w[i];
        const double im = b * data->w[i];
        g[i] = 1.0 / std::sqrt(re * re + im * im);
        mx = std::max(mx, g[i]);
      }
      for (std::size_t i = 0; i < n; ++i) r[i] = g[i] / mx - data->y[i];
      return;
    }
    std::vector<std::complex<double>> h(n);
    double mx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = 1.0 / std::complex<double>(1.0 - a * data->w[i] * data->w[i], b * data->w[i]);
      mx = std::max(mx, std::abs(h[i]));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::complex<double> model = h[i] / mx;
      const std::complex<double> meas = sweep->values[i] / data->max_mag;
      r[i] = model.real() - meas.real();
      r[n + i] = model.imag() - meas.imag();
    }
  }
};

bool cholesky_solve(double A[5][5], const double g[5], double out[5]) {
  double L[5][5] = {};
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = A[i][j];
      for (int k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
      if (i == j) {
        if (s <= 0.0) return false;
        L[i][i] = std::sqrt(s);
      } else {
        L[i][j] = s / L[j][j];
      }
    }
  }
  double z[5];
  for (int i = 0; i < 5; ++i) {
    double s = -g[i];
    for (int k = 0; k < i; ++k) s -= L[i][k] * z[k];
    z[i] = s / L[i][i];
  }
  for (int i = 4; i >= 0; --i) {
    double s = z[i];
    for (int k = i + 1; k < 5; ++k) s -= L[k][i] * out[k];
    out[i] = s / L[i][i];
  }
  return true;
}

struct LmOutcome {
  double x[5];
  double objective;  // sum of squared residuals / residual count
  int iterations = 0;
  bool step_converged = false;
  bool mse_converged = false;
};

LmOutcome run_lm(const Residual& resid, const double x0[5], const FitOptions& opts,
                 std::vector<double>* trace) {
  LmOutcome out;
  for (int k = 0; k < 5; ++k) out.x[k] = x0[k];
  const std::size_t nr = resid.size();
  std::vector<double> r, r2, rp;
  resid(out.x, r);
  double S = 0.0;
  for (double v : r) S += v * v;
  double bestS = S;
  double bestx[5];
  for (int k = 0; k < 5; ++k) bestx[k] = out.x[k];

  double lam = opts.damping_init;
  const double h = 1e-6;  // relative step on the underlying parameters
  std::vector<double> J;  // nr x 5, column-major
  J.resize(nr * 5);

  int it = 0;
  while (it < opts.max_iterations) {
    if (S / static_cast<double>(nr) <= opts.mse_tolerance) {
      out.mse_converged = true;
      break;
    }
    ++it;
    // forward-difference Jacobian on the log parameters
    double xp[5];
    for (int k = 0; k < 5; ++k) {
      for (int j = 0; j < 5; ++j) xp[j] = out.x[j];
      xp[k] += h;
      resid(xp, rp);
      for (std::size_t i = 0; i < nr; ++i) J[k * nr + i] = (rp[i] - r[i]) / h;
    }
    double A[5][5], g[5];
    for (int a = 0; a < 5; ++a) {
      double gv = 0.0;
      for (std::size_t i = 0; i < nr; ++i) gv += J[a * nr + i] * r[i];
      g[a] = gv;
      for (int b = a; b < 5; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < nr; ++i) s += J[a * nr + i] * J[b * nr + i];
        A[a][b] = A[b][a] = s;
      }
    }
    double delta[5];
    bool solved = false;
    while (lam < 1e15) {
      double Ad[5][5];
      for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) Ad[a][b] = A[a][b] + (a == b ? lam : 0.0);
      if (cholesky_solve(Ad, g, delta)) {
        solved = true;
        break;
      }
      lam *= 10.0;
    }
    if (!solved) break;
    double dmax = 0.0;
    for (double v : delta) dmax = std::max(dmax, std::abs(v));
    if (dmax <= opts.step_tolerance) {
      out.step_converged = true;
      break;
    }
    double x2[5];
    for (int k = 0; k < 5; ++k) x2[k] = out.x[k] + delta[k];
    resid(x2, r2);
    double S2 = 0.0;
    for (double v : r2) S2 += v * v;
    if (S2 < S) {
      for (int k = 0; k < 5; ++k) out.x[k] = x2[k];
      r.swap(r2);
      S = S2;
      lam = std::max(lam / 10.0, 1e-15);
      if (S < bestS) {
        bestS = S;
        for (int k = 0; k < 5; ++k) bestx[k] = out.x[k];
      }
      if (trace) trace->push_back(S / static_cast<double>(nr));
    } else {
      lam *= 10.0;
      if (lam >= 1e15) break;
    }
  }
  out.iterations = it;
  for (int k = 0; k < 5; ++k) out.x[k] = bestx[k];
  out.objective = bestS / static_cast<double>(nr);
  if (out.objective <= opts.mse_tolerance) out.mse_converged = true;
  return out;
}

// Least-squares scale of the unit-zeta model onto the raw measured curve.
double rescale_zeta(const MagData& d, const CircuitParams& p) {
  const auto [a, b] = denom_coeffs(p);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < d.m.size(); ++i) {
    const double re = 1.0 - a * d.w[i] * d.w[i];
    const double im = b * d.w[i];
    const double g = 1.0 / std::sqrt(re * re + im * im);
    num += g * d.m[i];
    den += g * g;
  }
  return den > 0.0 ? num / den : d.max_mag;
}

}  // namespace

bool OpticFingerprint::valid() const {
  return pos_finite(r_c) && pos_finite(c_j) && pos_finite(r_q);
}

void OpticFingerprint::require_valid() const {
  if (!valid())
    throw std::domain_error("OpticFingerprint: components must be positive and finite");
}

void FitOptions::require_valid() const {
  if (max_iterations < 0) throw std::invalid_argument("FitOptions: max_iterations must be >= 0");
  if (!(mse_tolerance > 0.0 && step_tolerance > 0.0 && damping_init > 0.0))
    throw std::invalid_argument("FitOptions: tolerances must be > 0");
  nominal.require_valid();
}

double residual_mse(const CircuitParams& p, const LinkScale& s, const S21Sweep& sweep) {
  p.require_valid();
  s.require_valid();
  sweep.require_valid();
  const MagData d = magnitudes(sweep);
  return mse_of(d.w, d.y, p);
}

std::pair<CircuitParams, LinkScale> initial_guess(const S21Sweep& sweep,
                                                  const CircuitParams& nominal) {
  sweep.require_valid();
  nominal.require_valid();
  if (sweep.grid.hz.back() < 10.0 * sweep.grid.hz.front())
    throw std::invalid_argument("initial_guess: sweep must cover at least a decade");
  const MagData d = magnitudes(sweep);
  const double zeta0 = low_band_mean(d);
  if (!(zeta0 > 0.0))
    throw std::invalid_argument("initial_guess: low-frequency band has zero magnitude");

  const double target = zeta0 / std::sqrt(2.0);
  std::size_t corner = d.m.size();
  for (std::size_t i = 0; i < d.m.size(); ++i) {
    if (d.m[i] <= target) {
      corner = i;
      break;
    }
  }
  CircuitParams p = nominal;
  if (corner < d.m.size() && corner > 0) {
    const double tau = 1.0 / (2.0 * kPi * sweep.grid.hz[corner]);
    p.r_q = tau / nominal.c_q;
  }
  // no -3 dB crossing in-band (or it sits on the first point): keep the
  // nominal defaults and let the optimizer take it from there
  return {p, LinkScale{zeta0}};
}

FitResult fit_sweep(const S21Sweep& sweep, const FitOptions& opts,
                    std::vector<double>* accepted_mse_trace) {
  opts.require_valid();
  sweep.require_valid();
  if (sweep.size() < 10) throw std::invalid_argument("fit_sweep: need at least 10 points");
  const MagData d = magnitudes(sweep);

  CircuitParams coarse;
  double zeta0;
  try {
    auto ig = initial_guess(sweep, opts.nominal);
    coarse = ig.first;
    zeta0 = ig.second.zeta;
  } catch (const std::invalid_argument&) {
    coarse = opts.nominal;  // narrow-band sweep: anchor start
    zeta0 = low_band_mean(d);
  }

  FitResult result;
  result.params = coarse;
  result.zeta = LinkScale{zeta0};
  result.mse = mse_of(d.w, d.y, coarse);
  result.iterations = 0;
  result.converged = false;
  if (opts.max_iterations == 0) return result;

  // Algebraic refinement: (zeta, a, b) from the magnitude curve, then the
  // gauge map back to parameters. Falls back to the coarse guess whenever
  // the data does not support it.
  CircuitParams start = coarse;
  double start_mse = result.mse;
  if (auto est = estimate_zab(d, coarse.r_q * coarse.c_q)) {
    if (auto mapped = gauge_solve(est->a, est->b, opts.nominal, coarse.r_q)) {
      const double m = mse_of(d.w, d.y, *mapped);
      if (m < start_mse) {
        start = *mapped;
        start_mse = m;
      }
    }
    if (pos_finite(est->zeta)) zeta0 = est->zeta;
  }

  Residual resid{&d, &sweep, opts.use_phase};
  double x0[5] = {std::log(start.r_c), std::log(start.c_j), std::log(start.r_q),
                  std::log(start.c_q), std::log(zeta0)};
  LmOutcome lm = run_lm(resid, x0, opts, accepted_mse_trace);

  CircuitParams fitted{std::exp(lm.x[0]), std::exp(lm.x[1]), std::exp(lm.x[2]),
                       std::exp(lm.x[3])};
  double fitted_mse = mse_of(d.w, d.y, fitted);

  // best-seen across coarse guess, refined start, and LM result
  if (start_mse < fitted_mse) {
    fitted = start;
    fitted_mse = start_mse;
  }
  if (result.mse < fitted_mse) {
    fitted = coarse;
    fitted_mse = result.mse;
  }

  result.params = fitted;
  result.zeta = LinkScale{rescale_zeta(d, fitted)};
  result.mse = fitted_mse;
  result.iterations = lm.iterations;
  result.converged = (fitted_mse <= opts.mse_tolerance) || lm.step_converged;
  return result;
}

OpticFingerprint fingerprint(const FitResult& fit) {
  if (!fit.converged)
    throw std::invalid_argument("fingerprint: fit did not converge");
  fit.params.require_valid();
  return {fit.params.r_c, fit.params.c_j, fit.params.r_q};
}

std::vector<FitResult> fit_dataset(const std::vector<S21Sweep>& sweeps, const FitOptions& opts,
                                   ExecMode mode) {
  std::vector<FitResult> out(sweeps.size());
  parallel_for(sweeps.size(), mode, [&](std::size_t i) { out[i] = fit_sweep(sweeps[i], opts); });
  return out;
}

}  // namespace ofp
