#pragma once

// Measured quantities from runs and ensembles: variances with standard
// errors, squeezing in dB, log-log power-law fits, finite-measurement-time
// variances and pump depletion.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "su11/engine.hpp"
#include "su11/errors.hpp"
#include "su11/model.hpp"
#include "su11/random.hpp"

namespace su11 {

struct VarianceEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  /// Standard error from the Gaussian formula sqrt(2/(n-1)) * value; false
  /// when the sample kurtosis makes that formula doubtful.
  bool gaussian_error = true;
};

struct FitResult {
  double exponent = 0.0;  ///< slope in log-log (or linear) coordinates
  double uncertainty = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t n = 0;
  /// Set when the fit spans less than one decade in x.
  bool narrow_range = false;
};

/// Cross-quadratures d+- = (a_s +- a_i)/sqrt2 and amplitude sum/difference.
struct CrossQuadratures {
  double x_plus, y_plus, x_minus, y_minus;
  double r_s, r_i;
  double amp_sum, amp_diff;
};

inline CrossQuadratures cross_quadratures(double x_s, double y_s, double x_i, double y_i) {
  const double k = 1.0 / std::sqrt(2.0);
  CrossQuadratures q;
  q.x_plus = k * (x_s + x_i);
  q.y_plus = k * (y_s + y_i);
  q.x_minus = k * (x_s - x_i);
  q.y_minus = k * (y_s - y_i);
  q.r_s = std::hypot(x_s, y_s);
  q.r_i = std::hypot(x_i, y_i);
  q.amp_sum = k * (q.r_s + q.r_i);
  q.amp_diff = k * (q.r_s - q.r_i);
  return q;
}

inline CrossQuadratures cross_quadratures(const MeasurementRecord& r) {
  return cross_quadratures(r.x_s, r.y_s, r.x_i, r.y_i);
}

inline CrossQuadratures cross_quadratures(cplx s, cplx i) {
  return cross_quadratures(s.real(), s.imag(), i.real(), i.imag());
}

/// Unbiased sample variance with the Gaussian standard error.
inline VarianceEstimate ensemble_variance(std::span<const double> samples) {
  require(samples.size() >= 2, "ensemble_variance: need at least 2 samples");
  const auto st = quadrature_stats(samples);
  VarianceEstimate est;
  est.value = st.variance;
  est.n = st.n;
  const double nm1 = static_cast<double>(st.n - 1);
  est.std_error = std::sqrt(2.0 / nm1) * st.variance;
  if (st.variance > 0.0 && st.n >= 8) {
    std::vector<double> q(samples.size());
    for (std::size_t k = 0; k < q.size(); ++k) {
      const double z = (samples[k] - st.mean) * (samples[k] - st.mean);
      q[k] = z * z;
    }
    const double m4 = pairwise_sum(q) / static_cast<double>(st.n);
    const double excess = m4 / (st.variance * st.variance) - 3.0;
    est.gaussian_error = std::abs(excess) <= 4.0 * std::sqrt(24.0 / static_cast<double>(st.n));
  }
  return est;
}

/// Bootstrap standard error of the sample variance (slow; no Gaussian assumption).
inline double bootstrap_variance_error(std::span<const double> samples, std::size_t n_boot,
                                       std::uint64_t seed) {
  require(samples.size() >= 2 && n_boot >= 2, "bootstrap_variance_error: need >= 2 samples");
  NormalStream rng(seed);
  std::vector<double> resample(samples.size());
  std::vector<double> stats(n_boot);
  for (std::size_t b = 0; b < n_boot; ++b) {
    for (auto& x : resample) {
      auto idx = static_cast<std::size_t>(rng.uniform() * static_cast<double>(samples.size()));
      x = samples[std::min(idx, samples.size() - 1)];
    }
    stats[b] = quadrature_stats(resample).variance;
  }
  return std::sqrt(quadrature_stats(stats).variance);
}

/// 10 log10(variance / reference). Negative values mean squeezing.
inline double squeezing_db(double variance, double reference = 1.0) {
  require(variance > 0.0 && reference > 0.0, "squeezing_db: inputs must be > 0");
  return 10.0 * std::log10(variance / reference);
}

/// Weighted least squares y = a + b x. The slope error comes from the
/// residual scatter, so exact data give zero uncertainty.
inline FitResult linear_fit(std::span<const double> x, std::span<const double> y,
                            std::span<const double> weights = {}) {
  require(x.size() == y.size(), "linear_fit: x and y differ in length");
  require(weights.empty() || weights.size() == x.size(), "linear_fit: weights length mismatch");
  require(x.size() >= 3, "linear_fit: need at least 3 points");
  const std::size_t n = x.size();
  auto w = [&](std::size_t k) { return weights.empty() ? 1.0 : weights[k]; };
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    require(w(k) > 0.0 && std::isfinite(w(k)), "linear_fit: weights must be > 0");
    require(std::isfinite(x[k]) && std::isfinite(y[k]), "linear_fit: non-finite data");
    sw += w(k);
    sx += w(k) * x[k];
    sy += w(k) * y[k];
  }
  const double xm = sx / sw, ym = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += w(k) * (x[k] - xm) * (x[k] - xm);
    sxy += w(k) * (x[k] - xm) * (y[k] - ym);
    syy += w(k) * (y[k] - ym) * (y[k] - ym);
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  require(sxx > 1e-300 * sw && *hi > *lo, "linear_fit: degenerate x range");
  FitResult f;
  f.n = n;
  f.exponent = sxy / sxx;
  f.intercept = ym - f.exponent * xm;
  double ssr = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = y[k] - (f.intercept + f.exponent * x[k]);
    ssr += w(k) * r * r;
  }
  f.uncertainty = std::sqrt(std::max(0.0, ssr / static_cast<double>(n - 2) / sxx));
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  f.x_min = *lo;
  f.x_max = *hi;
  return f;
}

/// Power law y = A x^p by weighted least squares on (ln x, ln y). The window
/// and range flag refer to x.
inline FitResult fit_power_law(std::span<const double> x, std::span<const double> y,
                               std::span<const double> weights = {}) {
  require(x.size() == y.size(), "fit_power_law: x and y differ in length");
  require(x.size() >= 3, "fit_power_law: need at least 3 points");
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    require(x[k] > 0.0 && y[k] > 0.0, "fit_power_law: data must be positive");
    lx[k] = std::log(x[k]);
    ly[k] = std::log(y[k]);
  }
  FitResult f = linear_fit(lx, ly, weights);
  f.x_min = std::exp(f.x_min);
  f.x_max = std::exp(f.x_max);
  f.narrow_range = f.x_max / f.x_min < 10.0;
  return f;
}

/// alpha in delta_phi ~ 1/N^alpha.
inline FitResult fit_scaling_exponent(std::span<const double> n_signal,
                                      std::span<const double> delta_phi,
                                      std::span<const double> weights = {}) {
  FitResult f = fit_power_law(n_signal, delta_phi, weights);
  f.exponent = -f.exponent;
  return f;
}

// ---------------------------------------------------------------------------
// Finite measurement time

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// Removes every Fourier component below `cut` bins (k < cut, and the
/// matching negative frequencies) from x in place.
inline void highpass_bins(std::vector<double>& x, std::size_t cut) {
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> spec(x.size() / 2 + 1);
  auto* out = reinterpret_cast<fftw_complex*>(spec.data());
  fftw_plan fwd, inv;
  {
    std::lock_guard lock(fftw_planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(n, x.data(), out, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(n, out, x.data(), FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  for (std::size_t k = 0; k < std::min(cut, spec.size()); ++k) spec[k] = 0.0;
  fftw_execute(inv);
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : x) v *= scale;
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(inv);
}

}  // namespace detail

/// Variance measured with a finite record length tau_m: spectral content
/// below 2 pi / tau_m is removed (brick-wall filter over the whole series),
/// then the filtered variance is averaged over consecutive windows of
/// length tau_m. A single window reduces to the ordinary sample variance.
inline VarianceEstimate windowed_variance(std::span<const double> samples, double sample_dt,
                                          double tau_m) {
  require(sample_dt > 0.0 && tau_m > 0.0, "windowed_variance: need sample_dt > 0, tau_m > 0");
  const auto window = static_cast<std::size_t>(std::llround(tau_m / sample_dt));
  require(window >= 2 && samples.size() >= window,
          "windowed_variance: trajectory shorter than tau_m");
  const std::size_t n_windows = samples.size() / window;
  const std::size_t m = n_windows * window;

  std::vector<double> x(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(m));
  detail::highpass_bins(x, n_windows);

  // Removed degrees of freedom: DC plus a cosine/sine pair per cut bin.
  const double dof = static_cast<double>(m) - static_cast<double>(2 * n_windows - 1);
  require(dof > 0.0, "windowed_variance: window too short");
  const double unbias = static_cast<double>(m) / dof;

  std::vector<double> per_window(n_windows);
  for (std::size_t w = 0; w < n_windows; ++w) {
    std::span<const double> seg(x.data() + w * window, window);
    std::vector<double> sq(seg.size());
    for (std::size_t k = 0; k < seg.size(); ++k) sq[k] = seg[k] * seg[k];
    per_window[w] = unbias * pairwise_sum(sq) / static_cast<double>(window);
  }
  VarianceEstimate est;
  if (n_windows >= 2) {
    const auto st = quadrature_stats(per_window);
    est.value = st.mean;
    est.std_error = std::sqrt(st.variance / static_cast<double>(n_windows));
    est.n = n_windows;
    est.gaussian_error = false;
  } else {
    est.value = per_window[0];
    est.n = m;
    est.std_error = std::sqrt(2.0 / static_cast<double>(m - 1)) * est.value;
  }
  return est;
}

enum class Observable { Xs, Ys, Xi, Yi, XPlus, YPlus, XMinus, YMinus, AmpSum, AmpDiff };

inline double observe(Observable o, cplx s, cplx i) {
  const auto q = cross_quadratures(s, i);
  switch (o) {
    case Observable::Xs: return s.real();
    case Observable::Ys: return s.imag();
    case Observable::Xi: return i.real();
    case Observable::Yi: return i.imag();
    case Observable::XPlus: return q.x_plus;
    case Observable::YPlus: return q.y_plus;
    case Observable::XMinus: return q.x_minus;
    case Observable::YMinus: return q.y_minus;
    case Observable::AmpSum: return q.amp_sum;
    case Observable::AmpDiff: return q.amp_diff;
  }
  return 0.0;
}

/// Samples of an observable at times >= t_start.
inline std::vector<double> observable_series(const Trajectory& traj, Observable o,
                                             double t_start = 0.0) {
  std::vector<double> out;
  for (std::size_t k = 0; k < traj.size(); ++k)
    if (traj.times[k] >= t_start) out.push_back(observe(o, traj.signal[k], traj.idler[k]));
  return out;
}

/// windowed_variance of one observable of a uniformly sampled trajectory.
inline VarianceEstimate windowed_variance(const Trajectory& traj, Observable o, double tau_m,
                                          double t_start = 0.0) {
  std::vector<double> t;
  for (double v : traj.times)
    if (v >= t_start) t.push_back(v);
  require(t.size() >= 3, "windowed_variance: too few samples after t_start");
  const double spacing = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  for (std::size_t k = 1; k < t.size(); ++k)
    require(std::abs(t[k] - t[k - 1] - spacing) <= 1e-6 * spacing,
            "windowed_variance: trajectory must be uniformly sampled");
  require(t.back() - t.front() + spacing >= tau_m * (1.0 - 1e-9),
          "windowed_variance: trajectory shorter than tau_m");
  return windowed_variance(observable_series(traj, o, t_start), spacing, tau_m);
}

// ---------------------------------------------------------------------------
// Pump depletion

/// max over the PA segment of |A_s A_i| / mu0, with mu0 the PA drive.
inline double pump_depletion_factor(const Trajectory& traj) {
  require(traj.has_pump(), "pump_depletion_factor: trajectory has no pump / mu(t) channel");
  double mu0 = 0.0;
  for (double d : traj.drive) mu0 = std::max(mu0, d);
  require(mu0 > 0.0, "pump_depletion_factor: trajectory has no PA segment");
  double eta = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.drive[k] <= 0.0) continue;
    eta = std::max(eta, std::abs(traj.signal[k] * traj.idler[k]) / mu0);
  }
  return eta;
}

/// Depletion expected at t_PA = ln(10 mu0) / (gamma (1 + mu0)) in the linear model.
inline double eta_predicted(double mu0, double seed_s, double seed_i) {
  require(mu0 > 0.0, "eta_predicted: mu0 must be > 0");
  return std::pow(10.0 * mu0, (mu0 - 1.0) / (mu0 + 1.0)) * seed_s * seed_i / mu0;
}

/// Large-mu0 limit of eta_predicted.
inline double eta_asymptote(double seed_s, double seed_i) { return 10.0 * seed_s * seed_i; }

/// PA duration used by the depletion estimate.
inline double depletion_pulse_duration(double mu0, double gamma) {
  return std::log(10.0 * mu0) / (gamma * (1.0 + mu0));
}

// ---------------------------------------------------------------------------
// Estimate tables

struct EstimateRow {
  std::string quantity;
  double value;
  double std_error;
  std::size_t n;
};

inline void write_estimate_table(std::ostream& os, std::span<const EstimateRow> rows) {
  os << "quantity,value,std_error,n\n";
  os.precision(12);
  for (const auto& r : rows) os << r.quantity << ',' << r.value << ',' << r.std_error << ',' << r.n << '\n';
}

}  // namespace su11
