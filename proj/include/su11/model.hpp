#pragma once

// Domain types and closed-form results for a pair of parametrically coupled
// damped modes (signal and idler). All amplitudes are in thermal-normalized
// units: an undriven mode relaxes to unit variance per quadrature.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "su11/errors.hpp"

namespace su11 {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Signal/idler frequencies (rad/s), energy damping rates (rad/s) and
/// coherent seed amplitudes.
struct ModePair {
  double omega_s = kTwoPi * 1.233e6;
  double omega_i = kTwoPi * 1.466e6;
  double gamma_s = kTwoPi * 0.083;
  double gamma_i = kTwoPi * 0.108;
  cplx alpha_s{0.0, 0.0};
  cplx alpha_i{0.0, 0.0};

  double gamma_bar() const noexcept { return 0.5 * (gamma_s + gamma_i); }

  void validate() const {
    require(std::isfinite(gamma_s) && gamma_s > 0.0, "ModePair: gamma_s must be > 0");
    require(std::isfinite(gamma_i) && gamma_i > 0.0, "ModePair: gamma_i must be > 0");
    require(omega_s != omega_i, "ModePair: signal and idler must be nondegenerate");
    require(std::isfinite(alpha_s.real()) && std::isfinite(alpha_s.imag()) &&
                std::isfinite(alpha_i.real()) && std::isfinite(alpha_i.imag()),
            "ModePair: seed amplitudes must be finite");
  }

  /// Both modes damped at `gamma`, frequencies kept at their defaults.
  static ModePair matched(double gamma, cplx alpha_s = {}, cplx alpha_i = {}) {
    ModePair m;
    m.gamma_s = gamma;
    m.gamma_i = gamma;
    m.alpha_s = alpha_s;
    m.alpha_i = alpha_i;
    return m;
  }
};

/// Pulsed drive: mu = X_S / X_S,th, beamsplitter mixing angle and pulse lengths.
struct PumpDrive {
  double mu = 0.0;
  double phi_bs = 0.0;
  double t_pa = 0.0;
  double t_bs = 0.0;

  void validate() const {
    require(mu >= 0.0, "PumpDrive: mu must be >= 0");
    require(t_pa >= 0.0, "PumpDrive: t_pa must be >= 0");
    require(t_bs >= 0.0, "PumpDrive: t_bs must be >= 0");
  }
};

/// First and second moments of (X_s, Y_s, X_i, Y_i), with a = X + iY.
struct GaussianState {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d cov = Eigen::Matrix4d::Identity();

  enum Index : int { Xs = 0, Ys = 1, Xi = 2, Yi = 3 };

  static GaussianState thermal(cplx alpha_s = {}, cplx alpha_i = {}, double variance = 1.0) {
    GaussianState g;
    g.mean << alpha_s.real(), alpha_s.imag(), alpha_i.real(), alpha_i.imag();
    g.cov = variance * Eigen::Matrix4d::Identity();
    return g;
  }

  void validate() const {
    require(mean.allFinite() && cov.allFinite(), "GaussianState: non-finite moments");
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
            "GaussianState: covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(cov, Eigen::EigenvaluesOnly);
    require(eig.eigenvalues().minCoeff() >= -1e-10 * scale,
            "GaussianState: covariance not positive semi-definite");
  }

  /// Variance of the linear combination w . (X_s, Y_s, X_i, Y_i).
  double variance_of(const Eigen::Vector4d& w) const { return w.dot(cov * w); }

  double var_x_minus() const { return variance_of(Eigen::Vector4d(1, 0, -1, 0) / std::sqrt(2.0)); }
  double var_x_plus() const { return variance_of(Eigen::Vector4d(1, 0, 1, 0) / std::sqrt(2.0)); }
};

/// Relative frequency and damping asymmetries.
struct MismatchParams {
  double delta_omega = 0.0;
  double delta_gamma = 0.0;
  double gamma_bar = 1.0;

  static MismatchParams from(const ModePair& m) {
    MismatchParams p;
    p.delta_omega = (m.omega_s - m.omega_i) / (m.omega_s + m.omega_i);
    p.delta_gamma = (m.gamma_s - m.gamma_i) / (m.gamma_s + m.gamma_i);
    p.gamma_bar = m.gamma_bar();
    return p;
  }

  void validate() const {
    require(std::abs(delta_gamma) < 1.0, "MismatchParams: |delta_gamma| must be < 1");
    require(std::abs(delta_omega) < 1.0, "MismatchParams: |delta_omega| must be < 1");
    require(gamma_bar > 0.0, "MismatchParams: gamma_bar must be > 0");
  }
};

/// One point on a phase-sensitivity sweep.
struct SensitivityPoint {
  double k = 0.0;
  double t_pa = 0.0;
  double n_signal = 0.0;
  double gain_sq = 0.0;
  double delta_phi = 0.0;
  /// False when Re[alpha_s] >> 1 or G^2 >> 1 fails (taken here as < 10).
  bool large_gain_regime = true;
};

// ---------------------------------------------------------------------------
// Lossless pulse maps

struct PaGains {
  double G;
  double g;
};

/// Hyperbolic gains of a lossless PA pulse with squeeze argument r.
inline PaGains pa_pulse_gains(double r) {
  require(std::isfinite(r), "pa_pulse_gains: r must be finite");
  return {std::cosh(r), std::sinh(r)};
}

/// a_s -> G a_s + g a_i^*, a_i -> G a_i + g a_s^*.
inline GaussianState apply_pa_map(const GaussianState& state, double G, double g) {
  state.validate();
  const double scale = std::max(1.0, G * G);
  require(std::abs(G * G - g * g - 1.0) <= 1e-9 * scale,
          "apply_pa_map: (G, g) must satisfy G^2 - g^2 = 1");
  Eigen::Matrix4d S;
  S << G, 0, g, 0,
       0, G, 0, -g,
       g, 0, G, 0,
       0, -g, 0, G;
  GaussianState out;
  out.mean = S * state.mean;
  out.cov = S * state.cov * S.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

/// a_s -> cos(phi) a_s + sin(phi) a_i, a_i -> cos(phi) a_i - sin(phi) a_s.
inline GaussianState apply_bs_map(const GaussianState& state, double phi_bs) {
  state.validate();
  const double c = std::cos(phi_bs);
  const double s = std::sin(phi_bs);
  Eigen::Matrix4d R;
  R << c, 0, s, 0,
       0, c, 0, s,
       -s, 0, c, 0,
       0, -s, 0, c;
  GaussianState out;
  out.mean = R * state.mean;
  out.cov = R * state.cov * R.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

// ---------------------------------------------------------------------------
// Damped dynamics, matched damping rate gamma

/// Squeezed cross-quadrature variance after driving for time t from a thermal start.
inline double squeezed_variance_t(double mu, double gamma, double t) {
  require(mu >= 0.0 && gamma > 0.0 && t >= 0.0, "squeezed_variance_t: need mu>=0, gamma>0, t>=0");
  return 1.0 + mu / (1.0 + mu) * std::expm1(-gamma * (1.0 + mu) * t);
}

/// Amplified cross-quadrature variance. Written as 1 + mu*expm1(x)/(mu-1),
/// x = gamma (mu-1) t, which is the same expression without the cancellation;
/// mu = 1 takes the limit branch 1 + gamma t.
inline double amplified_variance_t(double mu, double gamma, double t) {
  require(mu >= 0.0 && gamma > 0.0 && t >= 0.0, "amplified_variance_t: need mu>=0, gamma>0, t>=0");
  const double d = mu - 1.0;
  if (d == 0.0) return 1.0 + gamma * t;
  const double x = gamma * d * t;
  return 1.0 + mu * std::expm1(x) / d;
}

/// Steady-state variances of the phase diagram.
///
/// Below threshold these are the cross-quadratures: `squeezed` 1/(1+mu) and
/// `antisqueezed` 1/(1-mu). Above threshold the amplitudes lock and the pair
/// becomes amplitude sum (`squeezed`) and amplitude difference
/// (`antisqueezed`). The sum is 1/(2(mu-1)) for a cold substrate and sits at
/// its large-mu bound 1/2 when the substrate shares the signal/idler
/// temperature; the difference relaxes at gamma for every mu and stays at 1/2.
struct SteadyStateVariances {
  enum class Regime { BelowThreshold, AboveThreshold };
  Regime regime;
  double squeezed;
  double antisqueezed;
};

inline SteadyStateVariances steady_state_phase_diagram(double mu, bool substrate_cold) {
  require(mu >= 0.0, "steady_state_phase_diagram: mu must be >= 0");
  if (mu == 1.0) throw ValidationError("steady_state_phase_diagram: mu = 1 is the critical point");
  if (mu < 1.0) {
    return {SteadyStateVariances::Regime::BelowThreshold, 1.0 / (1.0 + mu), 1.0 / (1.0 - mu)};
  }
  const double sum = substrate_cold ? 1.0 / (2.0 * (mu - 1.0)) : 0.5;
  return {SteadyStateVariances::Regime::AboveThreshold, sum, 0.5};
}

/// Linearized above-threshold amplitude-sum variance, in units of the thermal
/// variance, for substrate force noise at `temp_ratio` times the signal/idler
/// intensity: 1/(2(mu-1)) + temp_ratio/2.
inline double above_threshold_sum_variance(double mu, double temp_ratio) {
  require(mu > 1.0, "above_threshold_sum_variance: need mu > 1");
  require(temp_ratio >= 0.0, "above_threshold_sum_variance: temp_ratio must be >= 0");
  return 1.0 / (2.0 * (mu - 1.0)) + 0.5 * temp_ratio;
}

/// Variance v0 relaxing freely toward the thermal level 1 for a time dt.
inline double relaxed_variance(double v0, double gamma, double dt) {
  return 1.0 + (v0 - 1.0) * std::exp(-gamma * dt);
}

/// Steady self-oscillation amplitude in characteristic-amplitude units.
inline double above_threshold_amplitude(double mu) {
  require(std::isfinite(mu), "above_threshold_amplitude: mu must be finite");
  return mu > 1.0 ? std::sqrt(mu - 1.0) : 0.0;
}

/// Unstable eigenvalue of the X_{d+} equation (amplitude e-folding rate).
inline double amplitude_growth_rate(double mu, double gamma) {
  return 0.5 * gamma * (mu - 1.0);
}

/// <X_s,out> for input |alpha_s, 0> after a PA pulse of length t_pa and a
/// beamsplitter at angle phi_bs.
inline double mean_output_quadrature(cplx alpha_s, double phi_bs, double mu, double gamma,
                                     double t_pa) {
  const double c = std::cos(phi_bs);
  const double s = std::sin(phi_bs);
  const double decay = std::exp(-gamma * (mu + 1.0) * t_pa / 2.0);
  const double grow = std::exp(gamma * (mu - 1.0) * t_pa / 2.0);
  return alpha_s.real() / 2.0 * ((c - s) * decay + (c + s) * grow);
}

/// d<X_s,out>/d(phi_bs).
inline double mean_output_quadrature_derivative(cplx alpha_s, double phi_bs, double mu,
                                                double gamma, double t_pa) {
  const double c = std::cos(phi_bs);
  const double s = std::sin(phi_bs);
  const double decay = std::exp(-gamma * (mu + 1.0) * t_pa / 2.0);
  const double grow = std::exp(gamma * (mu - 1.0) * t_pa / 2.0);
  return alpha_s.real() / 2.0 * ((-s - c) * decay + (c - s) * grow);
}

/// PA duration for pulse parameter k: ln(k mu) / (gamma (1 + mu)).
inline double pa_duration_for_k(double k, double mu, double gamma) {
  require(mu > 0.0 && gamma > 0.0, "pa_duration_for_k: need mu > 0, gamma > 0");
  require(k * mu > 1.0, "pa_duration_for_k: k must exceed 1/mu");
  return std::log(k * mu) / (gamma * (1.0 + mu));
}

/// Minimum detectable mixing angle at phi_bs = -pi/4 with the PA duration
/// parametrized by k. Remnant noise sqrt(k+1) exp(-gamma(mu+1)t/2).
inline SensitivityPoint phase_sensitivity(cplx alpha_s, double mu, double gamma, double k) {
  require(alpha_s.real() != 0.0, "phase_sensitivity: Re[alpha_s] must be nonzero");
  SensitivityPoint p;
  p.k = k;
  p.t_pa = pa_duration_for_k(k, mu, gamma);
  const double re = std::abs(alpha_s.real());
  p.gain_sq = std::exp(gamma * mu * p.t_pa);
  p.n_signal = p.gain_sq * re * re / 4.0;
  const double noise = std::sqrt(k + 1.0) * std::exp(-gamma * (mu + 1.0) * p.t_pa / 2.0);
  const double slope =
      std::abs(mean_output_quadrature_derivative(re, -std::numbers::pi / 4, mu, gamma, p.t_pa));
  p.delta_phi = noise / slope;
  p.large_gain_regime = re >= 10.0 && p.gain_sq >= 10.0;
  return p;
}

/// Delta-phi of the damped model at phi_bs = -pi/4 with exact squeezed variance.
inline double damped_delta_phi(cplx alpha_s, double mu, double gamma, double t_pa) {
  const double slope =
      mean_output_quadrature_derivative(alpha_s, -std::numbers::pi / 4, mu, gamma, t_pa);
  return std::sqrt(squeezed_variance_t(mu, gamma, t_pa)) / std::abs(slope);
}

/// Phonon number gain G^2 = exp(gamma mu t_pa) and N_s = G^2 (Re alpha / 2)^2.
inline double phonon_gain(double mu, double gamma, double t_pa) {
  return std::exp(gamma * mu * t_pa);
}
inline double signal_phonon_number(cplx alpha_s, double mu, double gamma, double t_pa) {
  const double re = alpha_s.real();
  return phonon_gain(mu, gamma, t_pa) * re * re / 4.0;
}

struct MismatchTimeConstants {
  double tau_squeezed;
  double tau_amplified;
  /// mu >> delta_gamma / sqrt(1 - delta_gamma^2), taken as a factor of 10.
  bool valid;
};

inline MismatchTimeConstants mismatch_time_constants(const MismatchParams& p, double mu) {
  p.validate();
  const double root = std::sqrt(1.0 - p.delta_gamma * p.delta_gamma);
  const double tau_sq = 1.0 / std::abs(p.gamma_bar * (1.0 + mu * root));
  const double tau_amp = 1.0 / std::abs(p.gamma_bar * (1.0 - mu * root));
  const bool valid = mu >= 10.0 * std::abs(p.delta_gamma) / root;
  return {tau_sq, tau_amp, valid};
}

/// Variance of the OU process dX = -lambda X dt + sqrt(gamma) dW with spectral
/// content below 2 pi / tau_m removed. tau_m = +inf gives gamma / (2 lambda).
inline double truncated_ou_variance(double lambda, double gamma, double tau_m) {
  require(lambda > 0.0 && tau_m > 0.0, "truncated_ou_variance: need lambda > 0, tau_m > 0");
  const double full = gamma / (2.0 * lambda);
  if (std::isinf(tau_m)) return full;
  const double omega_m = kTwoPi / tau_m;
  return full * (1.0 - (2.0 / std::numbers::pi) * std::atan(omega_m / lambda));
}

/// Fraction of an OU variance with relaxation rate lambda that survives the
/// 2 pi / tau_m truncation.
inline double truncation_factor(double lambda, double tau_m) {
  if (std::isinf(tau_m)) return 1.0;
  return 1.0 - (2.0 / std::numbers::pi) * std::atan(kTwoPi / tau_m / lambda);
}

inline double to_db(double ratio) { return 10.0 * std::log10(ratio); }

}  // namespace su11
