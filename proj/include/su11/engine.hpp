#pragma once

// Euler-Maruyama integration of the slow envelope equations through a pulse
// sequence. Two-mode model:
//
//   da_s = [ (mu/2) sqrt(g_s g_i) a_i^* - (g_s/2) a_s ] dt + sqrt(g_s) (dW_x + i dW_y)
//
// and symmetrically for a_i. The noise intensity makes an undriven mode relax
// to unit quadrature variance. The three-mode model adds the sum-frequency
// pump with saturation (pump depletion) and optional substrate noise.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "su11/errors.hpp"
#include "su11/model.hpp"
#include "su11/pulse.hpp"
#include "su11/random.hpp"

namespace su11 {

inline constexpr cplx kI{0.0, 1.0};

struct IntegratorOptions {
  /// Samples recorded per segment, evenly spaced in steps. 0 records every
  /// `record_stride`-th step plus each segment end.
  std::size_t samples_per_segment = 0;
  std::size_t record_stride = 1;
  bool thermal_noise = true;
  double overflow_guard = 1e150;
};

struct SegmentSpan {
  SegmentKind kind;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::size_t first_sample = 0;  ///< index of the first sample inside the segment
  std::size_t end_sample = 0;    ///< one past the last sample inside the segment
};

/// Time-sampled envelopes of one run. At a zero-duration segment (an
/// instantaneous map) the boundary sample holds the post-map state.
struct Trajectory {
  std::vector<double> times;
  std::vector<cplx> signal;
  std::vector<cplx> idler;
  std::vector<cplx> pump;       ///< empty for the two-mode model
  std::vector<double> drive;    ///< nominal drive mu set by the sequence
  std::vector<double> mu_eff;   ///< |A_S| for three-mode runs, equal to drive otherwise
  std::vector<SegmentSpan> segments;
  std::uint64_t seed = 0;
  double dt = 0.0;

  std::size_t size() const noexcept { return times.size(); }
  bool has_pump() const noexcept { return !pump.empty(); }
  double duration() const noexcept { return times.empty() ? 0.0 : times.back() - times.front(); }

  void validate() const {
    const std::size_t n = times.size();
    require(signal.size() == n && idler.size() == n && drive.size() == n && mu_eff.size() == n,
            "Trajectory: channel lengths differ");
    require(pump.empty() || pump.size() == n, "Trajectory: pump channel length differs");
    for (std::size_t k = 1; k < n; ++k)
      require(times[k] > times[k - 1], "Trajectory: times must be strictly increasing");
    for (std::size_t k = 0; k < n; ++k) {
      require(std::isfinite(signal[k].real()) && std::isfinite(signal[k].imag()) &&
                  std::isfinite(idler[k].real()) && std::isfinite(idler[k].imag()),
              "Trajectory: non-finite envelope");
    }
  }
};

namespace detail {

inline std::size_t steps_for(double duration, double dt) {
  if (duration <= 0.0) return 0;
  return static_cast<std::size_t>(std::max(1.0, std::ceil(duration / dt - 1e-9)));
}

inline cplx complex_normal(NormalStream& rng) {
  const double re = rng();
  return {re, rng()};
}

inline bool finite(cplx z, double guard) {
  return std::isfinite(z.real()) && std::isfinite(z.imag()) && std::abs(z) <= guard;
}

/// Rotation of the (signal, idler) pair by the beamsplitter angle.
inline void mix(cplx& s, cplx& i, double angle) {
  const double c = std::cos(angle);
  const double sn = std::sin(angle);
  const cplx s0 = s;
  s = c * s0 + sn * i;
  i = c * i - sn * s0;
}

struct StepInfo {
  std::size_t segment;
  SegmentKind kind;
  std::size_t step;     ///< 1-based step within the segment, 0 for instantaneous maps
  std::size_t n_steps;  ///< steps in the segment
  double t;
};

/// Walks a pulse sequence, calling model.step for every Euler step and
/// on_step after each step. Models provide:
///   void step(double h, double drive, NormalStream&)
///   void rotate_signal(double angle), void mix(double angle)
///   bool finite(double guard) const
template <class Model, class OnStep>
void drive_sequence(Model& model, const PulseSequence& seq, double dt, NormalStream& rng,
                    std::uint64_t seed, double guard, OnStep&& on_step) {
  double t = 0.0;
  const auto& segs = seq.segments();
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const Segment& seg = segs[k];
    const SegmentKind kind = kind_of(seg);
    const double duration = duration_of(seg);
    const std::size_t n = steps_for(duration, dt);

    double drive = 0.0;
    double signal_phase = 0.0;
    double mix_angle = 0.0;
    if (const auto* pa = std::get_if<PaSegment>(&seg)) drive = pa->mu;
    if (const auto* dw = std::get_if<DwellSegment>(&seg)) signal_phase = dw->sensing_phase;
    if (const auto* bs = std::get_if<BsSegment>(&seg)) mix_angle = bs->phi;

    if (n == 0) {
      if (signal_phase != 0.0) model.rotate_signal(signal_phase);
      if (mix_angle != 0.0) model.mix(mix_angle);
      on_step(StepInfo{k, kind, 0, 0, t});
      continue;
    }
    const double h = duration / static_cast<double>(n);
    const double t0 = t;
    for (std::size_t j = 1; j <= n; ++j) {
      model.step(h, drive, rng);
      if (signal_phase != 0.0) model.rotate_signal(signal_phase / static_cast<double>(n));
      if (mix_angle != 0.0) model.mix(mix_angle / static_cast<double>(n));
      t = t0 + h * static_cast<double>(j);
      if (!model.finite(guard)) throw NumericalAbort("envelope diverged", seed, t);
      on_step(StepInfo{k, kind, j, n, t});
    }
    t = t0 + duration;
  }
}

struct TwoModeModel {
  static constexpr bool kHasPump = false;

  double gamma_s, gamma_i;
  double coupling_scale;  ///< sqrt(gamma_s gamma_i) / 2, multiplied by mu
  bool noise;
  cplx s, i;

  TwoModeModel(const ModePair& m, bool thermal_noise)
      : gamma_s(m.gamma_s),
        gamma_i(m.gamma_i),
        coupling_scale(0.5 * std::sqrt(m.gamma_s * m.gamma_i)),
        noise(thermal_noise),
        s(m.alpha_s),
        i(m.alpha_i) {}

  void thermalize(NormalStream& rng) {
    if (!noise) return;
    s += complex_normal(rng);
    i += complex_normal(rng);
  }

  void step(double h, double mu, NormalStream& rng) {
    const double kappa = mu * coupling_scale;
    cplx ds = (kappa * std::conj(i) - 0.5 * gamma_s * s) * h;
    cplx di = (kappa * std::conj(s) - 0.5 * gamma_i * i) * h;
    if (noise) {
      ds += std::sqrt(gamma_s * h) * complex_normal(rng);
      di += std::sqrt(gamma_i * h) * complex_normal(rng);
    }
    s += ds;
    i += di;
  }

  void rotate_signal(double angle) { s *= std::polar(1.0, angle); }
  void mix(double angle) { detail::mix(s, i, angle); }
  bool finite(double guard) const { return detail::finite(s, guard) && detail::finite(i, guard); }
  cplx pump() const { return {}; }
  double mu_eff(double drive) const { return drive; }
};

}  // namespace detail

/// Checks the step-size precondition dt <= 0.01 / (gamma_bar (1 + mu_max)).
inline void validate_step(double dt, double gamma_bar, double mu_max) {
  require(std::isfinite(dt) && dt > 0.0, "dt must be finite and > 0");
  const double limit = 0.01 / (gamma_bar * (1.0 + mu_max));
  require(dt <= limit * (1.0 + 1e-9),
          "dt too coarse: need dt <= " + std::to_string(limit) + " s");
}

/// Largest step allowed by validate_step.
inline double default_step(double gamma_bar, double mu_max) {
  return 0.01 / (gamma_bar * (1.0 + mu_max));
}

namespace detail {

/// Records samples into a Trajectory according to IntegratorOptions.
template <class Model>
class Recorder {
 public:
  Recorder(Trajectory& traj, const Model& model, const IntegratorOptions& opt,
           const PulseSequence& seq)
      : traj_(traj), model_(model), opt_(opt), seq_(seq) {}

  void initial(double drive) { push(0.0, drive); }

  void operator()(const StepInfo& info) {
    if (info.segment != current_) {
      close_segment();
      current_ = info.segment;
      SegmentSpan span;
      span.kind = info.kind;
      span.t_begin = traj_.times.empty() ? 0.0 : last_time_;
      span.first_sample = traj_.size();
      traj_.segments.push_back(span);
    }
    const auto* pa = std::get_if<PaSegment>(&seq_.segments()[info.segment]);
    const double drive = pa ? pa->mu : 0.0;
    if (info.n_steps == 0) {
      overwrite_last(drive);
    } else if (wanted(info)) {
      push(info.t, drive);
    }
    last_time_ = info.t;
    traj_.segments.back().t_end = info.t;
  }

  void finish() { close_segment(); }

 private:
  bool wanted(const StepInfo& info) {
    ++global_;
    if (opt_.samples_per_segment > 0) {
      const std::size_t m = opt_.samples_per_segment;
      return (info.step * m) / info.n_steps != ((info.step - 1) * m) / info.n_steps;
    }
    const std::size_t stride = std::max<std::size_t>(1, opt_.record_stride);
    return global_ % stride == 0 || info.step == info.n_steps;
  }

  void push(double t, double drive) {
    traj_.times.push_back(t);
    traj_.signal.push_back(model_.s);
    traj_.idler.push_back(model_.i);
    if constexpr (Model::kHasPump) traj_.pump.push_back(model_.pump());
    traj_.drive.push_back(drive);
    traj_.mu_eff.push_back(model_.mu_eff(drive));
  }

  void overwrite_last(double drive) {
    traj_.signal.back() = model_.s;
    traj_.idler.back() = model_.i;
    if constexpr (Model::kHasPump) traj_.pump.back() = model_.pump();
    traj_.drive.back() = drive;
    traj_.mu_eff.back() = model_.mu_eff(drive);
  }

  void close_segment() {
    if (!traj_.segments.empty()) traj_.segments.back().end_sample = traj_.size();
  }

  Trajectory& traj_;
  const Model& model_;
  const IntegratorOptions& opt_;
  const PulseSequence& seq_;
  std::size_t current_ = static_cast<std::size_t>(-1);
  std::size_t global_ = 0;
  double last_time_ = 0.0;
};

}  // namespace detail

/// One stochastic run of the two-mode model through `seq`.
inline Trajectory integrate_two_mode(const ModePair& modes, const PulseSequence& seq, double dt,
                                     std::uint64_t seed, const IntegratorOptions& opt = {}) {
  modes.validate();
  seq.validate();
  validate_step(dt, modes.gamma_bar(), seq.max_mu());

  NormalStream rng(seed);
  detail::TwoModeModel model(modes, opt.thermal_noise);
  model.thermalize(rng);

  Trajectory traj;
  traj.seed = seed;
  traj.dt = dt;
  detail::Recorder<detail::TwoModeModel> rec(traj, model, opt, seq);
  rec.initial(0.0);
  detail::drive_sequence(model, seq, dt, rng, seed, opt.overflow_guard, rec);
  rec.finish();
  return traj;
}

// ---------------------------------------------------------------------------
// Three-mode model with pump depletion

/// Signal, idler and sum-frequency pump in the normalized slow-flow units:
/// signal/idler relative to their characteristic above-threshold amplitude,
/// pump relative to its threshold value.
struct ThreeModeParams {
  double gamma_s = kTwoPi * 0.0955;
  double gamma_i = kTwoPi * 0.0955;
  double gamma_pump = 1e3 * kTwoPi * 0.0955;
  cplx seed_s{0.0, 0.0};
  cplx seed_i{0.0, 0.0};
  /// Thermal quadrature variance of signal and idler in these units.
  double thermal_variance = 0.0;
  /// Substrate force-noise intensity relative to signal/idler.
  double substrate_temp_ratio = 0.0;
  bool adiabatic_pump = true;

  double gamma_bar() const noexcept { return 0.5 * (gamma_s + gamma_i); }

  void validate() const {
    std::vector<std::string> p;
    if (!(gamma_s > 0.0)) p.emplace_back("ThreeModeParams: gamma_s must be > 0");
    if (!(gamma_i > 0.0)) p.emplace_back("ThreeModeParams: gamma_i must be > 0");
    if (!(gamma_pump > 0.0)) p.emplace_back("ThreeModeParams: gamma_pump must be > 0");
    if (adiabatic_pump && gamma_pump < 100.0 * std::max(gamma_s, gamma_i))
      p.emplace_back("ThreeModeParams: adiabatic pump needs gamma_pump >= 100 max(gamma_s, gamma_i)");
    if (!(thermal_variance >= 0.0)) p.emplace_back("ThreeModeParams: thermal_variance must be >= 0");
    if (!(substrate_temp_ratio >= 0.0))
      p.emplace_back("ThreeModeParams: substrate_temp_ratio must be >= 0");
    if (!p.empty()) throw ValidationError(std::move(p));
  }
};

namespace detail {

struct ThreeModeModel {
  static constexpr bool kHasPump = true;

  double gamma_s, gamma_i, gamma_p;
  double thermal_sd;      ///< sqrt(theta)
  double substrate_sd;    ///< pump-force noise amplitude per quadrature
  bool adiabatic;
  bool noise;
  cplx s, i, p;
  double drive = 0.0;

  ThreeModeModel(const ThreeModeParams& prm, bool thermal_noise)
      : gamma_s(prm.gamma_s),
        gamma_i(prm.gamma_i),
        gamma_p(prm.gamma_pump),
        thermal_sd(std::sqrt(prm.thermal_variance)),
        substrate_sd(std::sqrt(2.0 * prm.substrate_temp_ratio * prm.thermal_variance /
                               prm.gamma_bar())),
        adiabatic(prm.adiabatic_pump),
        noise(thermal_noise),
        s(prm.seed_s),
        i(prm.seed_i),
        p(adiabatic_pump_value(prm.seed_s, prm.seed_i, 0.0)) {}

  // Drive phase pi: F_S = -mu, so the linearized equations carry +mu a^*.
  static cplx adiabatic_pump_value(cplx s, cplx i, double mu) { return kI * s * i - kI * mu; }

  void thermalize(NormalStream& rng) {
    if (!noise || thermal_sd == 0.0) return;
    s += thermal_sd * complex_normal(rng);
    i += thermal_sd * complex_normal(rng);
    if (adiabatic) p = adiabatic_pump_value(s, i, drive);
  }

  void step(double h, double mu, NormalStream& rng) {
    drive = mu;
    const cplx pump_det = adiabatic ? adiabatic_pump_value(s, i, mu) : p;
    cplx ds = 0.5 * gamma_s * (-s + kI * std::conj(i) * pump_det) * h;
    cplx di = 0.5 * gamma_i * (-i + kI * std::conj(s) * pump_det) * h;
    if (!adiabatic) {
      cplx dp = 0.5 * gamma_p * (-p + kI * s * i - kI * mu) * h;
      if (noise && substrate_sd > 0.0)
        dp += 0.5 * gamma_p * kI * substrate_sd * std::sqrt(h) * complex_normal(rng);
      p += dp;
    }
    if (noise) {
      if (thermal_sd > 0.0) {
        ds += std::sqrt(gamma_s * h) * thermal_sd * complex_normal(rng);
        di += std::sqrt(gamma_i * h) * thermal_sd * complex_normal(rng);
      }
      if (adiabatic && substrate_sd > 0.0) {
        // Pump-force noise enters through A_S and multiplies the partner
        // envelope; the last term is the Stratonovich drift correction.
        const cplx dw = std::sqrt(h) * complex_normal(rng);
        const double cs = -0.5 * gamma_s * substrate_sd;
        const double ci = -0.5 * gamma_i * substrate_sd;
        ds += cs * std::conj(i) * dw + cs * ci * s * h;
        di += ci * std::conj(s) * dw + cs * ci * i * h;
      }
    }
    s += ds;
    i += di;
    if (adiabatic) p = adiabatic_pump_value(s, i, mu);
  }

  void rotate_signal(double angle) {
    s *= std::polar(1.0, angle);
    if (adiabatic) p = adiabatic_pump_value(s, i, drive);
  }
  void mix(double angle) {
    detail::mix(s, i, angle);
    if (adiabatic) p = adiabatic_pump_value(s, i, drive);
  }
  bool finite(double guard) const {
    return detail::finite(s, guard) && detail::finite(i, guard) && detail::finite(p, guard);
  }
  cplx pump() const { return p; }
  double mu_eff(double) const { return std::abs(p); }
};

}  // namespace detail

/// One run of the three-mode slow-flow system through `seq`. PA segments set
/// the sum-frequency drive; the pump is eliminated adiabatically when
/// `params.adiabatic_pump` is set.
inline Trajectory integrate_three_mode(const ThreeModeParams& params, const PulseSequence& seq,
                                       double dt, std::uint64_t seed,
                                       const IntegratorOptions& opt = {}) {
  params.validate();
  seq.validate();
  validate_step(dt, params.gamma_bar(), seq.max_mu());
  if (!params.adiabatic_pump) {
    require(dt <= 0.01 / params.gamma_pump * (1.0 + 1e-9),
            "dt too coarse for an explicit pump: need dt <= 0.01/gamma_pump");
  }

  NormalStream rng(seed);
  detail::ThreeModeModel model(params, opt.thermal_noise);
  model.thermalize(rng);

  Trajectory traj;
  traj.seed = seed;
  traj.dt = dt;
  detail::Recorder<detail::ThreeModeModel> rec(traj, model, opt, seq);
  rec.initial(0.0);
  detail::drive_sequence(model, seq, dt, rng, seed, opt.overflow_guard, rec);
  rec.finish();
  return traj;
}

// ---------------------------------------------------------------------------
// Interferometer runs and ensembles

/// Everything needed to repeat one interferometer shot.
struct InterferometerConfig {
  ModePair modes;
  PulseSequence sequence;
  double dt = 0.0;
  /// Variance of additive Gaussian readout noise on each measured quadrature.
  double readout_noise_var = 0.0;
  /// Standard deviation of a per-run multiplicative jitter on every PA drive,
  /// relative to the nominal mu (mu_run = mu (1 + mu_spread_rel * n)).
  double mu_spread_rel = 0.0;
  bool thermal_noise = true;

  void validate() const {
    modes.validate();
    sequence.validate();
    require(sequence.has_measure(), "InterferometerConfig: sequence needs a Measure segment");
    require(readout_noise_var >= 0.0, "InterferometerConfig: readout noise variance must be >= 0");
    require(mu_spread_rel >= 0.0, "InterferometerConfig: mu spread must be >= 0");
    const double mu_max = sequence.max_mu() * (1.0 + 6.0 * mu_spread_rel);
    validate_step(dt, modes.gamma_bar(), mu_max);
  }
};

/// Output quadratures of one shot.
struct MeasurementRecord {
  double x_s = 0.0, y_s = 0.0, x_i = 0.0, y_i = 0.0;
  double mu_scale = 1.0;
  std::uint64_t seed = 0;
};

/// prepare |alpha_s, alpha_i> (+ thermal) -> sequence -> measure. Quadratures
/// are averaged over the Measure window (terminal values for a zero window).
inline MeasurementRecord run_interferometer_sequence(const InterferometerConfig& cfg,
                                                     std::uint64_t seed) {
  cfg.validate();
  NormalStream rng(seed);
  MeasurementRecord rec;
  rec.seed = seed;
  if (cfg.mu_spread_rel > 0.0) {
    rec.mu_scale = std::max(0.0, 1.0 + cfg.mu_spread_rel * rng());
  }
  const PulseSequence seq =
      rec.mu_scale == 1.0 ? cfg.sequence : cfg.sequence.with_mu_scaled(rec.mu_scale);

  detail::TwoModeModel model(cfg.modes, cfg.thermal_noise);
  model.thermalize(rng);

  cplx sum_s{}, sum_i{};
  std::size_t count = 0;
  detail::drive_sequence(model, seq, cfg.dt, rng, seed, 1e150, [&](const detail::StepInfo& info) {
    if (info.kind == SegmentKind::Measure && info.n_steps > 0) {
      sum_s += model.s;
      sum_i += model.i;
      ++count;
    }
  });
  const cplx s = count ? sum_s / static_cast<double>(count) : model.s;
  const cplx i = count ? sum_i / static_cast<double>(count) : model.i;
  rec.x_s = s.real();
  rec.y_s = s.imag();
  rec.x_i = i.real();
  rec.y_i = i.imag();
  if (cfg.readout_noise_var > 0.0) {
    const double sd = std::sqrt(cfg.readout_noise_var);
    rec.x_s += sd * rng();
    rec.y_s += sd * rng();
    rec.x_i += sd * rng();
    rec.y_i += sd * rng();
  }
  return rec;
}

/// Runs fn(index) for index in [0, n) on up to `threads` workers (0 = all
/// cores). Each index is processed exactly once; callers store results by
/// index, so the outcome does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < n; k = next++) {
          try {
            fn(k);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

struct AbortedRun {
  std::size_t index;
  std::uint64_t seed;
  std::string message;
};

/// Pairwise sum; deterministic regardless of how the input was produced.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct QuadratureStats {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  std::size_t n = 0;
};

inline QuadratureStats quadrature_stats(std::span<const double> v) {
  QuadratureStats st;
  st.n = v.size();
  if (v.empty()) return st;
  st.mean = pairwise_sum(v) / static_cast<double>(v.size());
  if (v.size() < 2) return st;
  std::vector<double> sq(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) sq[k] = (v[k] - st.mean) * (v[k] - st.mean);
  st.variance = pairwise_sum(sq) / static_cast<double>(v.size() - 1);
  return st;
}

struct Ensemble {
  std::vector<MeasurementRecord> runs;  ///< completed runs in index order
  std::vector<AbortedRun> aborted;
  std::uint64_t base_seed = 0;
  std::size_t n_runs = 0;
  InterferometerConfig config;

  std::vector<double> column(double MeasurementRecord::*field) const {
    std::vector<double> out;
    out.reserve(runs.size());
    for (const auto& r : runs) out.push_back(r.*field);
    return out;
  }

  /// Mean and variance of X_s, Y_s, X_i, Y_i.
  std::array<QuadratureStats, 4> summary() const {
    return {quadrature_stats(column(&MeasurementRecord::x_s)),
            quadrature_stats(column(&MeasurementRecord::y_s)),
            quadrature_stats(column(&MeasurementRecord::x_i)),
            quadrature_stats(column(&MeasurementRecord::y_i))};
  }
};

/// n_runs shots with seeds derive_seed(base_seed, index).
inline Ensemble run_ensemble(const InterferometerConfig& cfg, std::size_t n_runs,
                             std::uint64_t base_seed, unsigned threads = 0) {
  require(n_runs >= 2, "run_ensemble: need n_runs >= 2");
  cfg.validate();
  std::vector<std::optional<MeasurementRecord>> slots(n_runs);
  std::vector<std::optional<AbortedRun>> failures(n_runs);
  parallel_for(n_runs, threads, [&](std::size_t k) {
    const std::uint64_t seed = derive_seed(base_seed, k);
    try {
      slots[k] = run_interferometer_sequence(cfg, seed);
    } catch (const NumericalAbort& e) {
      failures[k] = AbortedRun{k, seed, e.what()};
    }
  });
  Ensemble ens;
  ens.base_seed = base_seed;
  ens.n_runs = n_runs;
  ens.config = cfg;
  for (std::size_t k = 0; k < n_runs; ++k) {
    if (slots[k]) ens.runs.push_back(*slots[k]);
    if (failures[k]) ens.aborted.push_back(*failures[k]);
  }
  return ens;
}

/// Time-resolved ensemble: sample k of run r at signal[k][r], idler[k][r].
struct TrajectoryEnsemble {
  std::vector<double> times;
  std::vector<std::vector<cplx>> signal;
  std::vector<std::vector<cplx>> idler;
  std::vector<std::uint64_t> seeds;  ///< seeds of the completed runs, in index order
  std::vector<AbortedRun> aborted;
  std::uint64_t base_seed = 0;

  std::size_t n_samples() const noexcept { return times.size(); }
  std::size_t n_completed() const noexcept { return seeds.size(); }
};

/// Runs integrate(seed) for seeds derive_seed(base_seed, index) and
/// transposes the trajectories to per-sample columns. Every run must share
/// the same time grid.
template <class Integrate>
TrajectoryEnsemble collect_trajectories(std::size_t n_runs, std::uint64_t base_seed,
                                        unsigned threads, Integrate&& integrate) {
  require(n_runs >= 2, "collect_trajectories: need n_runs >= 2");
  std::vector<std::optional<Trajectory>> slots(n_runs);
  std::vector<std::optional<AbortedRun>> failures(n_runs);
  parallel_for(n_runs, threads, [&](std::size_t k) {
    const std::uint64_t seed = derive_seed(base_seed, k);
    try {
      slots[k] = integrate(seed);
    } catch (const NumericalAbort& e) {
      failures[k] = AbortedRun{k, seed, e.what()};
    }
  });
  TrajectoryEnsemble ens;
  ens.base_seed = base_seed;
  for (std::size_t k = 0; k < n_runs; ++k) {
    if (failures[k]) ens.aborted.push_back(*failures[k]);
    if (!slots[k]) continue;
    const Trajectory& tr = *slots[k];
    if (ens.seeds.empty()) {
      ens.times = tr.times;
      ens.signal.assign(tr.size(), {});
      ens.idler.assign(tr.size(), {});
    }
    require(tr.size() == ens.times.size(), "collect_trajectories: runs differ in time grid");
    for (std::size_t j = 0; j < tr.size(); ++j) {
      ens.signal[j].push_back(tr.signal[j]);
      ens.idler[j].push_back(tr.idler[j]);
    }
    ens.seeds.push_back(tr.seed);
  }
  return ens;
}

}  // namespace su11
