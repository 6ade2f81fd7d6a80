#pragma once

// The five experiments behind the CLI. Each maps an ExperimentConfig to a
// tidy DataSet; all randomness comes from derive_seed(base_seed, ...), so a
// rerun with the same config reproduces every value.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "su11/config.hpp"
#include "su11/dataset.hpp"
#include "su11/engine.hpp"
#include "su11/estimators.hpp"
#include "su11/model.hpp"
#include "su11/pulse.hpp"
#include "su11/random.hpp"

namespace su11 {

namespace detail {

inline DataSet start_dataset(const ExperimentConfig& cfg, ExperimentKind expected) {
  require(cfg.kind == expected, std::string("config is for '") + to_string(cfg.kind) +
                                    "', not '" + to_string(expected) + "'");
  cfg.validate();
  DataSet ds;
  ds.provenance.experiment = to_string(cfg.kind);
  ds.provenance.config_text = cfg.canonical_text();
  ds.provenance.config_hash = fnv1a64(ds.provenance.config_text);
  ds.provenance.base_seed = cfg.base_seed;
  return ds;
}

inline void note_aborted(DataSet& ds, const std::vector<AbortedRun>& aborted) {
  for (const auto& a : aborted) ds.provenance.aborted_seeds.push_back(a.seed);
}

/// Samples of observable o at sample j across an ensemble.
inline std::vector<double> column(const TrajectoryEnsemble& ens, std::size_t j, Observable o) {
  std::vector<double> out(ens.n_completed());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = observe(o, ens.signal[j][r], ens.idler[j][r]);
  return out;
}

/// Keyed sub-seed, separate from the per-run stream.
inline std::uint64_t grid_seed(std::uint64_t base, std::uint64_t key, std::uint64_t index) {
  return derive_seed(mix64(base ^ (0x9e3779b97f4a7c15ull * (key + 1))), index);
}

inline double mean_of(std::span<const double> v) {
  return pairwise_sum(v) / static_cast<double>(v.size());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Phase diagram

/// Per mu: analytic and simulated squeezed/antisqueezed variances. Below
/// threshold these are the X_{d-}/X_{d+} cross-quadratures of the two-mode
/// model (thermal units); above threshold the amplitude sum/difference of the
/// three-mode model in units of its thermal variance. A finite tau_m applies
/// the spectral truncation to both branches; tau_m = inf uses ensembles of
/// independent steady-state samples instead of one long record.
inline DataSet run_phase_diagram(const ExperimentConfig& cfg) {
  DataSet ds = detail::start_dataset(cfg, ExperimentKind::PhaseDiagram);
  const ModePair modes = cfg.modes();
  const double gamma = modes.gamma_bar();
  const bool windowed = std::isfinite(cfg.tau_m);

  for (std::size_t g = 0; g < cfg.mu.size(); ++g) {
    const double mu = cfg.mu[g];
    const bool above = mu > 1.0;
    const Params p{{"mu", mu}, {"above_threshold", above ? 1.0 : 0.0}};

    // Field relaxation rates of the squeezed and antisqueezed directions.
    const double lam_sq = above ? gamma * (mu - 1.0) : 0.5 * gamma * (1.0 + mu);
    const double lam_anti = above ? gamma : 0.5 * gamma * (1.0 - mu);
    const double v_sq = above ? above_threshold_sum_variance(mu, cfg.substrate_temp_ratio)
                              : steady_state_phase_diagram(mu, true).squeezed;
    const double v_anti = above ? 0.5 : steady_state_phase_diagram(mu, true).antisqueezed;

    ds.add(p, "squeezed_steady", v_sq);
    ds.add(p, "antisqueezed_steady", v_anti);
    ds.add(p, "squeezed_analytic", v_sq * truncation_factor(lam_sq, cfg.tau_m));
    ds.add(p, "antisqueezed_analytic", v_anti * truncation_factor(lam_anti, cfg.tau_m));
    if (!cfg.simulate) continue;

    const double burn = 6.0 / std::min(lam_sq, lam_anti);
    const double dt = cfg.step_for(mu);
    const Observable o_sq = above ? Observable::AmpSum : Observable::XMinus;
    const Observable o_anti = above ? Observable::AmpDiff : Observable::XPlus;
    const double unit = above ? cfg.thermal_variance : 1.0;

    ThreeModeParams prm;
    prm.gamma_s = modes.gamma_s;
    prm.gamma_i = modes.gamma_i;
    prm.gamma_pump = 1e3 * std::max(modes.gamma_s, modes.gamma_i);
    prm.seed_s = prm.seed_i = above_threshold_amplitude(mu);
    prm.thermal_variance = cfg.thermal_variance;
    prm.substrate_temp_ratio = cfg.substrate_temp_ratio;

    auto integrate = [&](const PulseSequence& seq, std::uint64_t seed, const IntegratorOptions& opt) {
      return above ? integrate_three_mode(prm, seq, dt, seed, opt)
                   : integrate_two_mode(modes, seq, dt, seed, opt);
    };

    VarianceEstimate sq, anti;
    if (windowed) {
      // One long record: burn-in, then n_windows measurement windows.
      const double lam_fast = std::max(lam_sq, lam_anti);
      const double want = std::min(cfg.tau_m / 256.0, 0.1 / lam_fast);
      IntegratorOptions opt;
      opt.record_stride = std::max<std::size_t>(1, static_cast<std::size_t>(want / dt));
      const double sample_dt = static_cast<double>(opt.record_stride) * dt;
      const auto n_burn = static_cast<std::size_t>(std::ceil(burn / sample_dt));
      // Same rounding as windowed_variance, so exactly n_windows windows fit.
      const auto n_meas = cfg.n_windows * static_cast<std::size_t>(std::llround(cfg.tau_m / sample_dt));
      const double duration = static_cast<double>(n_burn + n_meas) * sample_dt;
      PulseSequence seq;
      seq.pa(mu, duration);
      const std::uint64_t seed = detail::grid_seed(cfg.base_seed, 1, g);
      try {
        const Trajectory tr = integrate(seq, seed, opt);
        const double t0 = static_cast<double>(n_burn) * sample_dt * (1.0 - 1e-12);
        sq = windowed_variance(tr, o_sq, cfg.tau_m, t0);
        anti = windowed_variance(tr, o_anti, cfg.tau_m, t0);
      } catch (const NumericalAbort& e) {
        ds.provenance.aborted_seeds.push_back(e.seed());
        continue;
      }
    } else {
      PulseSequence seq;
      seq.pa(mu, burn);
      IntegratorOptions opt;
      opt.samples_per_segment = 1;
      const auto ens = collect_trajectories(
          cfg.runs, detail::grid_seed(cfg.base_seed, 2, g), cfg.threads,
          [&](std::uint64_t seed) { return integrate(seq, seed, opt); });
      detail::note_aborted(ds, ens.aborted);
      if (ens.n_completed() < 2) continue;
      const std::size_t last = ens.n_samples() - 1;
      sq = ensemble_variance(detail::column(ens, last, o_sq));
      anti = ensemble_variance(detail::column(ens, last, o_anti));
    }
    ds.add(p, "squeezed_sim", sq.value / unit, sq.std_error / unit, sq.n);
    ds.add(p, "antisqueezed_sim", anti.value / unit, anti.std_error / unit, anti.n);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Transient squeezing

/// mu_run from a per-run jitter stream that is independent of the noise stream.
inline double jittered_mu(double mu, double spread, std::uint64_t seed) {
  if (spread <= 0.0 || mu <= 0.0) return mu;
  NormalStream jr(mix64(seed ^ 0x6a09e667f3bcc909ull));
  return std::clamp(mu + spread * jr(), 0.0, mu + 6.0 * spread);
}

/// Squeezed variance of the PA-then-free-decay sequence at time t.
inline double transient_squeezed(double mu, double gamma, double t_pa, double t) {
  if (t <= t_pa) return squeezed_variance_t(mu, gamma, t);
  return relaxed_variance(squeezed_variance_t(mu, gamma, t_pa), gamma, t - t_pa);
}
inline double transient_antisqueezed(double mu, double gamma, double t_pa, double t) {
  if (t <= t_pa) return amplified_variance_t(mu, gamma, t);
  return relaxed_variance(amplified_variance_t(mu, gamma, t_pa), gamma, t - t_pa);
}

/// Mean of f(mu') over mu' ~ N(mu, spread), truncated at 0 (Simpson, +-6 sd).
template <class F>
double mixture_mean(double mu, double spread, F&& f) {
  if (spread <= 0.0) return f(mu);
  const int n = 240;
  double num = 0.0, den = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double z = -6.0 + 12.0 * j / n;
    const double w = (j == 0 || j == n) ? 1.0 : (j % 2 ? 4.0 : 2.0);
    const double pdf = std::exp(-0.5 * z * z);
    num += w * pdf * f(std::max(0.0, mu + spread * z));
    den += w * pdf;
  }
  return num / den;
}

/// A PA pulse followed by free decay, sampled at time_samples points per
/// segment. The pulse defaults to 10 squeezed-quadrature time constants,
/// which brings X_{d-} within 0.05% of its floor, and the decay to 2/gamma.
inline DataSet run_transient_squeeze(const ExperimentConfig& cfg) {
  DataSet ds = detail::start_dataset(cfg, ExperimentKind::TransientSqueeze);
  const ModePair modes = cfg.modes();
  const double gamma = modes.gamma_bar();

  for (std::size_t g = 0; g < cfg.mu.size(); ++g) {
    const double mu = cfg.mu[g];
    const double t_pa = cfg.pa_duration > 0.0 ? cfg.pa_duration : 10.0 / (gamma * (1.0 + mu));
    const double t_dec = cfg.decay_duration > 0.0 ? cfg.decay_duration : 2.0 / gamma;
    PulseSequence seq;
    seq.pa(mu, t_pa).dwell(t_dec);
    const double dt = cfg.step_for(mu);
    IntegratorOptions opt;
    opt.samples_per_segment = cfg.time_samples;

    const auto ens = collect_trajectories(
        cfg.runs, detail::grid_seed(cfg.base_seed, 3, g), cfg.threads, [&](std::uint64_t seed) {
          const double mu_run = jittered_mu(mu, cfg.mu_spread, seed);
          return integrate_two_mode(modes, mu > 0.0 ? seq.with_mu_scaled(mu_run / mu) : seq, dt,
                                    seed, opt);
        });
    detail::note_aborted(ds, ens.aborted);
    if (ens.n_completed() < 2) continue;

    const double mu_lo = std::max(0.0, mu - cfg.mu_spread);
    const double mu_hi = mu + cfg.mu_spread;
    double best = std::numeric_limits<double>::infinity();
    VarianceEstimate best_est;
    std::vector<double> decay_t, decay_y, decay_w;
    for (std::size_t j = 0; j < ens.n_samples(); ++j) {
      const double t = ens.times[j];
      const Params p{{"mu", mu}, {"t", t}, {"gamma_t", gamma * t}, {"pa_on", t <= t_pa ? 1.0 : 0.0}};
      const auto sq = ensemble_variance(detail::column(ens, j, Observable::XMinus));
      const auto an = ensemble_variance(detail::column(ens, j, Observable::XPlus));
      ds.add(p, "var_squeezed_sim", sq.value, sq.std_error, sq.n);
      ds.add(p, "var_antisqueezed_sim", an.value, an.std_error, an.n);
      const double a_lo = transient_squeezed(mu_lo, gamma, t_pa, t);
      const double a_hi = transient_squeezed(mu_hi, gamma, t_pa, t);
      ds.add(p, "var_squeezed_analytic", transient_squeezed(mu, gamma, t_pa, t));
      ds.add(p, "var_squeezed_band_lo", std::min(a_lo, a_hi));
      ds.add(p, "var_squeezed_band_hi", std::max(a_lo, a_hi));
      const double b_lo = transient_antisqueezed(mu_lo, gamma, t_pa, t);
      const double b_hi = transient_antisqueezed(mu_hi, gamma, t_pa, t);
      ds.add(p, "var_antisqueezed_analytic", transient_antisqueezed(mu, gamma, t_pa, t));
      ds.add(p, "var_antisqueezed_band_lo", std::min(b_lo, b_hi));
      ds.add(p, "var_antisqueezed_band_hi", std::max(b_lo, b_hi));
      if (sq.value > 0.0) ds.add(p, "squeezing_db_sim", -squeezing_db(sq.value),
                                 10.0 / std::numbers::ln10 * sq.std_error / sq.value, sq.n);
      if (sq.value > 0.0 && sq.value < best) {
        best = sq.value;
        best_est = sq;
      }
      // Decay rate from ln(1 - V) on points clearly below the thermal level.
      if (t > t_pa && 1.0 - sq.value > 3.0 * sq.std_error) {
        decay_t.push_back(t - t_pa);
        decay_y.push_back(std::log(1.0 - sq.value));
        const double sd = sq.std_error / (1.0 - sq.value);
        decay_w.push_back(1.0 / (sd * sd));
      }
    }

    const Params p{{"mu", mu}, {"mu_spread", cfg.mu_spread}, {"t_pa", t_pa}};
    if (std::isfinite(best)) {
      ds.add(p, "min_squeezing_db_sim", -squeezing_db(best),
             10.0 / std::numbers::ln10 * best_est.std_error / best, best_est.n);
    }
    ds.add(p, "min_squeezing_db_analytic", -squeezing_db(squeezed_variance_t(mu, gamma, t_pa)));
    ds.add(p, "min_squeezing_db_band_lo", -squeezing_db(squeezed_variance_t(mu_lo, gamma, t_pa)));
    ds.add(p, "min_squeezing_db_band_hi", -squeezing_db(squeezed_variance_t(mu_hi, gamma, t_pa)));
    ds.add(p, "min_squeezing_db_mixture",
           -squeezing_db(mixture_mean(mu, cfg.mu_spread, [&](double m) {
             return squeezed_variance_t(m, gamma, t_pa);
           })));
    ds.add(p, "squeezing_floor_db", to_db(1.0 + mu));
    if (decay_t.size() >= 3) {
      const auto fit = linear_fit(decay_t, decay_y, decay_w);
      ds.add(p, "decay_rate_sim", -fit.exponent, fit.uncertainty, fit.n);
    }
    ds.add(p, "decay_rate_analytic", gamma);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Heisenberg scaling

struct DeltaPhiEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double slope = 0.0;  ///< mean d<X_s,out>/dphi
  std::size_t n = 0;
  std::vector<std::uint64_t> aborted;
};

/// Monte-Carlo Delta-phi at phi_bs = -pi/4: spread of X_s,out over the slope
/// d<X_s,out>/dphi, the slope from a central difference with common seeds.
/// t_pa = 0 is the conventional interferometer (beamsplitter only).
inline DeltaPhiEstimate simulate_delta_phi(const ModePair& modes, double mu, double t_pa,
                                           double dt, std::size_t runs, std::uint64_t base_seed,
                                           unsigned threads, double readout_noise_var = 0.0) {
  constexpr double phi0 = -std::numbers::pi / 4;
  constexpr double h = 1e-3;
  auto ensemble = [&](double phi) {
    InterferometerConfig ic;
    ic.modes = modes;
    if (t_pa > 0.0) ic.sequence.pa(mu, t_pa);
    ic.sequence.bs(phi, 0.0).measure(0.0);
    ic.dt = dt;
    ic.readout_noise_var = readout_noise_var;
    return run_ensemble(ic, runs, base_seed, threads);
  };
  const Ensemble c = ensemble(phi0);
  const Ensemble up = ensemble(phi0 + h);
  const Ensemble dn = ensemble(phi0 - h);
  DeltaPhiEstimate out;
  for (const auto& a : c.aborted) out.aborted.push_back(a.seed);
  require(up.runs.size() == dn.runs.size() && up.runs.size() == c.runs.size(),
          "simulate_delta_phi: aborted runs differ between phase points");
  std::vector<double> slope(c.runs.size());
  for (std::size_t r = 0; r < slope.size(); ++r) slope[r] = (up.runs[r].x_s - dn.runs[r].x_s) / (2 * h);
  const auto sl = quadrature_stats(slope);
  const auto x = ensemble_variance(c.column(&MeasurementRecord::x_s));
  const double n = static_cast<double>(x.n);
  out.value = std::sqrt(x.value) / std::abs(sl.mean);
  const double rel_slope = std::sqrt(sl.variance / n) / std::abs(sl.mean);
  out.std_error = out.value * std::sqrt(0.5 / (n - 1.0) + rel_slope * rel_slope);
  out.slope = std::abs(sl.mean);
  out.n = x.n;
  return out;
}

/// Delta-phi vs N_s for the SU(1,1) sequence at each (k, mu) and for the
/// conventional interferometer at the same N_s (coherent amplitude
/// 2 sqrt(N_s), no PA), plus alpha fits, the SQL/SU(1,1) ratio and an inset
/// of alpha over PA-duration windows at inset_mu. Simulations use matched
/// damping at gamma_bar so that they share the closed forms' single rate.
inline DataSet run_heisenberg_scaling(const ExperimentConfig& cfg) {
  DataSet ds = detail::start_dataset(cfg, ExperimentKind::HeisenbergScaling);
  const double gamma = cfg.gamma_bar();
  const cplx alpha{cfg.alpha_s, 0.0};
  const ModePair modes = ModePair::matched(gamma, alpha);
  std::uint64_t grid_index = 0;

  auto add_fit = [&](const Params& p, const std::string& q, const std::vector<double>& n,
                     const std::vector<double>& d) {
    if (n.size() < 3) return;
    const auto fit = fit_scaling_exponent(n, d);
    ds.add(p, q, fit.exponent, fit.uncertainty, fit.n);
  };

  for (double k : cfg.k) {
    std::vector<double> n_s, d_an, d_dm, d_sql, d_sim, n_sim, d_sql_sim, n_sql_sim;
    double g2_min = std::numeric_limits<double>::infinity(), g2_max = 0.0;
    for (double mu : cfg.mu) {
      const auto sp = phase_sensitivity(alpha, mu, gamma, k);
      const double damped = damped_delta_phi(alpha, mu, gamma, sp.t_pa);
      const double sql = 1.0 / std::sqrt(2.0 * sp.n_signal);
      const Params p{{"k", k}, {"mu", mu}, {"t_pa", sp.t_pa}, {"gain_sq", sp.gain_sq},
                     {"n_signal", sp.n_signal}};
      ds.add(p, "delta_phi_analytic", sp.delta_phi);
      ds.add(p, "delta_phi_damped", damped);
      ds.add(p, "delta_phi_sql", sql);
      ds.add(p, "sql_ratio_damped", sql / damped);
      n_s.push_back(sp.n_signal);
      d_an.push_back(sp.delta_phi);
      d_dm.push_back(damped);
      d_sql.push_back(sql);
      g2_min = std::min(g2_min, sp.gain_sq);
      g2_max = std::max(g2_max, sp.gain_sq);
      if (!cfg.simulate) continue;

      const auto est = simulate_delta_phi(modes, mu, sp.t_pa, cfg.step_for(mu), cfg.runs,
                                          detail::grid_seed(cfg.base_seed, 4, grid_index++),
                                          cfg.threads, cfg.readout_noise_var);
      for (auto s : est.aborted) ds.provenance.aborted_seeds.push_back(s);
      ds.add(p, "delta_phi_sim", est.value, est.std_error, est.n);
      n_sim.push_back(sp.n_signal);
      d_sim.push_back(est.value);

      ModePair conv = ModePair::matched(gamma, 2.0 * std::sqrt(sp.n_signal));
      const auto ref = simulate_delta_phi(conv, 0.0, 0.0, cfg.step_for(mu), cfg.runs,
                                          detail::grid_seed(cfg.base_seed, 5, grid_index++),
                                          cfg.threads, cfg.readout_noise_var);
      ds.add(p, "delta_phi_sql_sim", ref.value, ref.std_error, ref.n);
      ds.add(p, "sql_ratio_sim", ref.value / est.value,
             ref.value / est.value *
                 std::hypot(ref.std_error / ref.value, est.std_error / est.value),
             est.n);
      n_sql_sim.push_back(sp.n_signal);
      d_sql_sim.push_back(ref.value);
    }
    const Params pk{{"k", k}};
    ds.add(pk, "gain_sq_decades", std::log10(g2_max / g2_min));
    add_fit(pk, "alpha_analytic", n_s, d_an);
    add_fit(pk, "alpha_damped", n_s, d_dm);
    add_fit(pk, "alpha_sql", n_s, d_sql);
    add_fit(pk, "alpha_sim", n_sim, d_sim);
    add_fit(pk, "alpha_sql_sim", n_sql_sim, d_sql_sim);
  }

  // Inset: alpha over PA-duration windows (units of 1/gamma) at fixed mu.
  const double mu = cfg.inset_mu;
  for (const auto& w : cfg.inset_windows) {
    std::vector<double> n_s, d_dm, d_sim;
    const Params p{{"mu", mu}, {"gamma_t_lo", w.lo}, {"gamma_t_hi", w.hi}};
    for (std::size_t j = 0; j < cfg.inset_points; ++j) {
      const double gt = w.lo + (w.hi - w.lo) * static_cast<double>(j) /
                                   static_cast<double>(cfg.inset_points - 1);
      const double t = gt / gamma;
      const double n = signal_phonon_number(alpha, mu, gamma, t);
      n_s.push_back(n);
      d_dm.push_back(damped_delta_phi(alpha, mu, gamma, t));
      if (cfg.simulate) {
        const auto est = simulate_delta_phi(modes, mu, t, cfg.step_for(mu), cfg.runs,
                                            detail::grid_seed(cfg.base_seed, 6, grid_index++),
                                            cfg.threads, cfg.readout_noise_var);
        for (auto s : est.aborted) ds.provenance.aborted_seeds.push_back(s);
        d_sim.push_back(est.value);
        ds.add({{"mu", mu}, {"gamma_t", gt}, {"n_signal", n}}, "inset_delta_phi_sim", est.value,
               est.std_error, est.n);
      }
    }
    add_fit(p, "alpha_inset_damped", n_s, d_dm);
    if (cfg.simulate) add_fit(p, "alpha_inset_sim", n_s, d_sim);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Pump depletion

/// Deterministic three-mode pulses of length ln(10 mu0)/(gamma(1+mu0)) per
/// (mu0, seed): measured depletion against the linear-model predictor. Then,
/// for the first mu0, ensembles with thermal noise through twice that
/// duration compare the squeezed variance with the undepleted closed form.
inline DataSet run_pump_depletion(const ExperimentConfig& cfg) {
  DataSet ds = detail::start_dataset(cfg, ExperimentKind::PumpDepletion);
  const ModePair modes = cfg.modes();
  const double gamma = modes.gamma_bar();

  auto params_for = [&](double seed) {
    ThreeModeParams prm;
    prm.gamma_s = modes.gamma_s;
    prm.gamma_i = modes.gamma_i;
    prm.gamma_pump = 1e3 * std::max(modes.gamma_s, modes.gamma_i);
    prm.seed_s = prm.seed_i = seed;
    prm.thermal_variance = cfg.thermal_variance;
    prm.substrate_temp_ratio = cfg.substrate_temp_ratio;
    return prm;
  };

  for (double mu0 : cfg.mu) {
    const double t_pa = cfg.pa_duration > 0.0 ? cfg.pa_duration : depletion_pulse_duration(mu0, gamma);
    PulseSequence seq;
    seq.pa(mu0, t_pa);
    IntegratorOptions opt;
    opt.thermal_noise = false;
    for (double seed : cfg.seeds) {
      const Params p{{"mu0", mu0}, {"seed", seed}, {"t_pa", t_pa}};
      try {
        const Trajectory tr = integrate_three_mode(params_for(seed), seq, cfg.step_for(mu0), 0, opt);
        ds.add(p, "eta_sim", pump_depletion_factor(tr));
        ds.add(p, "mu_eff_end", tr.mu_eff.back());
      } catch (const NumericalAbort& e) {
        ds.provenance.aborted_seeds.push_back(e.seed());
      }
      ds.add(p, "eta_predicted", eta_predicted(mu0, seed, seed));
      ds.add(p, "eta_asymptote", eta_asymptote(seed, seed));
    }
  }

  const double mu0 = cfg.mu.front();
  const double t_end = 2.0 * (cfg.pa_duration > 0.0 ? cfg.pa_duration
                                                     : depletion_pulse_duration(mu0, gamma));
  PulseSequence seq;
  seq.pa(mu0, t_end);
  IntegratorOptions opt;
  opt.samples_per_segment = cfg.time_samples;
  for (std::size_t g = 0; g < cfg.seeds.size(); ++g) {
    const double seed = cfg.seeds[g];
    const auto prm = params_for(seed);
    const auto ens = collect_trajectories(
        cfg.runs, detail::grid_seed(cfg.base_seed, 7, g), cfg.threads, [&](std::uint64_t s) {
          return integrate_three_mode(prm, seq, cfg.step_for(mu0), s, opt);
        });
    detail::note_aborted(ds, ens.aborted);
    if (ens.n_completed() < 2) continue;
    for (std::size_t j = 0; j < ens.n_samples(); ++j) {
      const double t = ens.times[j];
      const Params p{{"mu0", mu0}, {"seed", seed}, {"t", t}, {"gamma_t", gamma * t}};
      const auto v = ensemble_variance(detail::column(ens, j, Observable::XMinus));
      ds.add(p, "var_squeezed_depleted_sim", v.value / cfg.thermal_variance,
             v.std_error / cfg.thermal_variance, v.n);
      ds.add(p, "var_squeezed_undepleted", squeezed_variance_t(mu0, gamma, t));
      std::vector<double> drive(ens.n_completed());
      for (std::size_t r = 0; r < drive.size(); ++r) {
        const cplx a = ens.signal[j][r] * ens.idler[j][r];
        drive[r] = std::abs(kI * a - kI * mu0);  // |A_S| with F_S = -mu0
      }
      const auto st = quadrature_stats(drive);
      ds.add(p, "mu_eff_mean", st.mean, std::sqrt(st.variance / static_cast<double>(st.n)), st.n);
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Growth law

/// Three-mode runs from small real seeds per mu > 1: the ensemble-mean X_{d+}
/// during the exponential phase gives the growth rate, the late-time mean
/// amplitude gives the steady amplitude. Power-law fit of amplitude vs mu-1
/// and a linear fit of rate vs mu.
inline DataSet run_growth_law(const ExperimentConfig& cfg) {
  DataSet ds = detail::start_dataset(cfg, ExperimentKind::GrowthLaw);
  const ModePair modes = cfg.modes();
  const double gamma = modes.gamma_bar();
  const double a0 = cfg.seed_amplitude;

  std::vector<double> x_amp, y_amp, w_amp, mu_rate, rate, w_rate, y_an;
  for (std::size_t g = 0; g < cfg.mu.size(); ++g) {
    const double mu = cfg.mu[g];
    const double r_ss = above_threshold_amplitude(mu);
    const double lam = amplitude_growth_rate(mu, gamma);
    const double t_grow = std::max(std::log(r_ss / a0), 1.0) / lam;
    const double t_settle = 8.0 / (gamma * (mu - 1.0));
    PulseSequence seq;
    seq.pa(mu, t_grow).pa(mu, t_settle);

    ThreeModeParams prm;
    prm.gamma_s = modes.gamma_s;
    prm.gamma_i = modes.gamma_i;
    prm.gamma_pump = 1e3 * std::max(modes.gamma_s, modes.gamma_i);
    prm.seed_s = prm.seed_i = a0;
    prm.thermal_variance = cfg.thermal_variance;
    prm.substrate_temp_ratio = cfg.substrate_temp_ratio;
    IntegratorOptions opt;
    opt.samples_per_segment = std::max<std::size_t>(cfg.time_samples, 100);

    const auto ens = collect_trajectories(
        cfg.runs, detail::grid_seed(cfg.base_seed, 8, g), cfg.threads, [&](std::uint64_t s) {
          return integrate_three_mode(prm, seq, cfg.step_for(mu), s, opt);
        });
    detail::note_aborted(ds, ens.aborted);
    if (ens.n_completed() < 2) continue;

    const Params p{{"mu", mu}, {"mu_minus_1", mu - 1.0}};
    // Steady amplitude: (r_s + r_i)/2 at the final sample.
    const std::size_t last = ens.n_samples() - 1;
    std::vector<double> amp(ens.n_completed());
    for (std::size_t r = 0; r < amp.size(); ++r)
      amp[r] = 0.5 * (std::abs(ens.signal[last][r]) + std::abs(ens.idler[last][r]));
    const auto st = quadrature_stats(amp);
    const double se = std::sqrt(st.variance / static_cast<double>(st.n));
    ds.add(p, "amplitude_sim", st.mean, se, st.n);
    ds.add(p, "amplitude_analytic", r_ss);
    x_amp.push_back(mu - 1.0);
    y_amp.push_back(st.mean);
    y_an.push_back(r_ss);
    const double rel = se / st.mean;
    w_amp.push_back(rel > 0.0 ? 1.0 / (rel * rel) : 1.0);

    // Growth rate from ln <X_{d+}> while the amplitude is below 10% of steady.
    std::vector<double> tt, yy;
    const double cap = 0.1 * std::sqrt(2.0) * r_ss;
    for (std::size_t j = 0; j < ens.n_samples(); ++j) {
      const double m = detail::mean_of(detail::column(ens, j, Observable::XPlus));
      if (ens.times[j] > t_grow || m > cap) break;
      if (m > 0.0) {
        tt.push_back(ens.times[j]);
        yy.push_back(std::log(m));
      }
    }
    if (tt.size() >= 3) {
      const auto fit = linear_fit(tt, yy);
      ds.add(p, "growth_rate_sim", fit.exponent, fit.uncertainty, fit.n);
      mu_rate.push_back(mu);
      rate.push_back(fit.exponent);
      const double u = fit.uncertainty > 0.0 ? fit.uncertainty : 1e-12;
      w_rate.push_back(1.0 / (u * u));
    }
    ds.add(p, "growth_rate_analytic", lam);
  }

  if (x_amp.size() >= 3) {
    const auto fit = fit_power_law(x_amp, y_amp, w_amp);
    ds.add({{"mu_minus_1_min", fit.x_min}, {"mu_minus_1_max", fit.x_max}}, "exponent_sim",
           fit.exponent, fit.uncertainty, fit.n);
    const auto an = fit_power_law(x_amp, y_an);
    ds.add({{"mu_minus_1_min", an.x_min}, {"mu_minus_1_max", an.x_max}}, "exponent_analytic",
           an.exponent, an.uncertainty, an.n);
  }
  if (mu_rate.size() >= 3) {
    const auto fit = linear_fit(mu_rate, rate, w_rate);
    ds.add({}, "growth_slope_sim", fit.exponent, fit.uncertainty, fit.n);
    ds.add({}, "growth_intercept_sim", fit.intercept, 0.0, fit.n);
  }
  ds.add({}, "growth_slope_analytic", 0.5 * gamma);
  ds.add({}, "growth_intercept_analytic", -0.5 * gamma);
  return ds;
}

inline DataSet run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::PhaseDiagram: return run_phase_diagram(cfg);
    case ExperimentKind::TransientSqueeze: return run_transient_squeeze(cfg);
    case ExperimentKind::HeisenbergScaling: return run_heisenberg_scaling(cfg);
    case ExperimentKind::PumpDepletion: return run_pump_depletion(cfg);
    case ExperimentKind::GrowthLaw: return run_growth_law(cfg);
  }
  throw ValidationError("unknown experiment kind");
}

}  // namespace su11
