#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "su11/engine.hpp"
#include "su11/estimators.hpp"

using namespace su11;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;
const double kGamma = kTwoPi * 0.0955;

std::vector<double> x_minus(const TrajectoryEnsemble& e, std::size_t k) {
  std::vector<double> out;
  for (std::size_t r = 0; r < e.n_completed(); ++r)
    out.push_back(cross_quadratures(e.signal[k][r], e.idler[k][r]).x_minus);
  return out;
}

std::vector<double> x_plus(const TrajectoryEnsemble& e, std::size_t k) {
  std::vector<double> out;
  for (std::size_t r = 0; r < e.n_completed(); ++r)
    out.push_back(cross_quadratures(e.signal[k][r], e.idler[k][r]).x_plus);
  return out;
}

// Ensemble of PA runs at drive mu over gamma t in [0, 5/(1+mu)].
TrajectoryEnsemble pa_ensemble(double mu, std::size_t runs, double dt_scale = 1.0,
                               std::uint64_t base = 11) {
  const auto modes = ModePair::matched(kGamma);
  PulseSequence seq;
  seq.pa(mu, 5.0 / (kGamma * (1.0 + mu)));
  const double dt = default_step(kGamma, mu) * dt_scale;
  IntegratorOptions opt;
  opt.samples_per_segment = 10;
  return collect_trajectories(runs, base, 0, [&](std::uint64_t seed) {
    return integrate_two_mode(modes, seq, dt, seed, opt);
  });
}

}  // namespace

TEST_CASE("step-size precondition") {
  const auto modes = ModePair::matched(kGamma);
  PulseSequence seq;
  seq.pa(38, 0.1);
  const double limit = 0.01 / (kGamma * 39);
  CHECK_NOTHROW(integrate_two_mode(modes, seq, limit, 1));
  CHECK_THROWS_AS(integrate_two_mode(modes, seq, 1.01 * limit, 1), ValidationError);
  CHECK_THROWS_AS(integrate_two_mode(modes, seq, -1.0, 1), ValidationError);
}

TEST_CASE("trajectory recording and segment spans") {
  const auto modes = ModePair::matched(kGamma, {5, 0});
  PulseSequence seq;
  seq.pa(2, 0.5).dwell(0.2, 0.3).bs(-kPi / 4).measure(0.1);
  IntegratorOptions opt;
  opt.samples_per_segment = 5;
  const auto tr = integrate_two_mode(modes, seq, 1e-3, 77, opt);
  CHECK_NOTHROW(tr.validate());
  REQUIRE(tr.segments.size() == 4);
  CHECK(tr.size() == 1 + 5 + 5 + 5);  // the BS map overwrites the boundary sample
  CHECK(tr.segments[0].end_sample - tr.segments[0].first_sample == 5);
  CHECK(tr.segments[2].end_sample == tr.segments[2].first_sample);
  CHECK_THAT(tr.times.back(), WithinAbs(0.8, 1e-12));
  CHECK_THAT(tr.segments[1].t_end, WithinAbs(0.7, 1e-12));
  CHECK(tr.drive[1] == 2.0);
  CHECK(tr.drive.back() == 0.0);
  CHECK_FALSE(tr.has_pump());
  CHECK(tr.seed == 77);

  IntegratorOptions every;
  const auto full = integrate_two_mode(modes, seq, 1e-3, 77, every);
  CHECK(full.size() == 1 + 800);
  CHECK(full.signal.back() == tr.signal.back());
}

TEST_CASE("identical seeds give bit-identical trajectories") {
  const auto modes = ModePair::matched(kGamma, {1, 0});
  PulseSequence seq;
  seq.pa(10, 0.3).dwell(0.1, 0.2);
  const auto a = integrate_two_mode(modes, seq, 1e-4, 5);
  const auto b = integrate_two_mode(modes, seq, 1e-4, 5);
  const auto c = integrate_two_mode(modes, seq, 1e-4, 6);
  CHECK(a.signal == b.signal);
  CHECK(a.idler == b.idler);
  CHECK(a.signal != c.signal);
}

TEST_CASE("thermal relaxation calibrates the noise to unit variance") {
  InterferometerConfig cfg;
  cfg.modes = ModePair{};
  cfg.sequence.dwell(3.0 / cfg.modes.gamma_s).measure();
  cfg.dt = default_step(cfg.modes.gamma_bar(), 0.0);
  const auto ens = run_ensemble(cfg, 10000, 2024);
  REQUIRE(ens.aborted.empty());
  for (auto field : {&MeasurementRecord::x_s, &MeasurementRecord::y_s, &MeasurementRecord::x_i,
                     &MeasurementRecord::y_i}) {
    const auto v = ensemble_variance(ens.column(field));
    CHECK(std::abs(v.value - 1.0) <= 3.0 * v.std_error);
    CHECK(std::abs(v.value - 1.0) <= 0.02 + 3.0 * v.std_error);
  }
}

TEST_CASE("cross-quadrature variances track the closed forms") {
  for (double mu : {0.0, 0.5, 0.9, 2.0, 10.0, 38.0}) {
    const auto ens = pa_ensemble(mu, 10000);
    REQUIRE(ens.aborted.empty());
    for (std::size_t k = 0; k < ens.n_samples(); ++k) {
      const double t = ens.times[k];
      const auto vm = ensemble_variance(x_minus(ens, k));
      const auto vp = ensemble_variance(x_plus(ens, k));
      INFO("mu=" << mu << " gamma t=" << kGamma * t);
      CHECK(std::abs(vm.value - squeezed_variance_t(mu, kGamma, t)) <= 3.5 * vm.std_error);
      CHECK(std::abs(vp.value - amplified_variance_t(mu, kGamma, t)) <= 3.5 * vp.std_error);
    }
  }
}

TEST_CASE("halving dt changes the squeezed variance by less than the Monte-Carlo error") {
  const auto a = pa_ensemble(38, 4000, 1.0, 3);
  const auto b = pa_ensemble(38, 4000, 0.5, 3);
  for (std::size_t k = 1; k < a.n_samples(); ++k) {
    const auto va = ensemble_variance(x_minus(a, k));
    const auto vb = ensemble_variance(x_minus(b, k));
    CHECK(std::abs(va.value - vb.value) <= std::hypot(va.std_error, vb.std_error) * 3.0);
  }
}

TEST_CASE("above threshold the amplitude grows at gamma (mu - 1) / 2") {
  const double g = kGamma;
  const auto modes = ModePair::matched(g, {1e-3, 0}, {1e-3, 0});
  PulseSequence seq;
  seq.pa(2.0, 4.0 / g);
  IntegratorOptions opt;
  opt.thermal_noise = false;
  opt.samples_per_segment = 40;
  const auto tr = integrate_two_mode(modes, seq, default_step(g, 2.0) / 4, 1, opt);
  std::vector<double> t, la;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    t.push_back(tr.times[k]);
    la.push_back(std::log(std::abs(tr.signal[k])));
  }
  const auto fit = linear_fit(t, la);
  CHECK_THAT(fit.exponent, WithinRel(amplitude_growth_rate(2.0, g), 2e-3));
}

TEST_CASE("pass-through and dwell phase") {
  const double g = kGamma;
  const auto pass = [&](double phase) {
    InterferometerConfig cfg;
    cfg.modes = ModePair::matched(g, {5, 0});
    cfg.sequence.pa(38, 0.0).dwell(0.0, phase).bs(0.0).measure(0.01);
    cfg.dt = default_step(g, 38);
    return run_ensemble(cfg, 2000, 8);
  };
  const auto e0 = pass(0.0);
  const auto s0 = e0.summary();
  // damping over the short window: 5 exp(-g t/2) averaged over [0, 0.01]
  const double expected = 5.0 * (1 - std::exp(-g * 0.005)) / (g * 0.005);
  CHECK(std::abs(s0[0].mean - expected) < 4 * std::sqrt(s0[0].variance / 2000));
  const auto spi = pass(kPi).summary();
  CHECK(std::abs(spi[0].mean + expected) < 4 * std::sqrt(spi[0].variance / 2000));
}

TEST_CASE("output mean is linear in the seed") {
  const auto mean_for = [](double alpha) {
    InterferometerConfig cfg;
    cfg.modes = ModePair::matched(kGamma, {alpha, 0});
    cfg.sequence.pa(10, 0.1).dwell(0.05, 0.4).bs(-kPi / 4, 0.01).measure();
    cfg.dt = default_step(kGamma, 10);
    cfg.thermal_noise = false;
    return run_interferometer_sequence(cfg, 1);
  };
  const auto a = mean_for(3.0), b = mean_for(6.0);
  CHECK_THAT(b.x_s, WithinRel(2 * a.x_s, 1e-12));
  CHECK_THAT(b.y_i, WithinRel(2 * a.y_i, 1e-12));
}

TEST_CASE("noise-free interferometer reproduces the mean output closed form") {
  const double mu = 5, t_pa = 0.2;
  for (double phi : {-kPi / 4, 0.0, 0.3}) {
    InterferometerConfig cfg;
    cfg.modes = ModePair::matched(kGamma, {4, 0});
    cfg.sequence.pa(mu, t_pa).bs(phi).measure();
    cfg.dt = default_step(kGamma, mu) / 10;
    cfg.thermal_noise = false;
    const auto rec = run_interferometer_sequence(cfg, 1);
    CHECK_THAT(rec.x_s, WithinAbs(mean_output_quadrature(4.0, phi, mu, kGamma, t_pa), 2e-3));
  }
}

TEST_CASE("a damped BS pulse converges to the lossless map") {
  const double phi = -kPi / 4;
  auto [G, g] = pa_pulse_gains(0.8);
  const auto state = apply_pa_map(GaussianState::thermal({2, 0}), G, g);
  const auto target = apply_bs_map(state, phi);
  // propagate the first moments of the thermal-seeded PA output through a
  // short BS pulse without noise
  for (double t_bs : {1e-2, 1e-3}) {
    ModePair m = ModePair::matched(kGamma, {state.mean[0], state.mean[1]},
                                   {state.mean[2], state.mean[3]});
    PulseSequence seq;
    seq.bs(phi, t_bs);
    IntegratorOptions opt;
    opt.thermal_noise = false;
    const auto tr = integrate_two_mode(m, seq, t_bs / 100, 1, opt);
    const double err = std::abs(tr.signal.back().real() - target.mean[0]);
    CHECK(err <= 2.0 * kGamma * t_bs);
  }
}

TEST_CASE("divergence aborts the run and is recorded with its seed") {
  InterferometerConfig cfg;
  cfg.modes = ModePair::matched(kGamma, {1, 0});
  cfg.sequence.pa(300, 300.0).measure();
  cfg.dt = default_step(kGamma, 300);
  CHECK_THROWS_AS(run_interferometer_sequence(cfg, 4), NumericalAbort);
  try {
    run_interferometer_sequence(cfg, 4);
  } catch (const NumericalAbort& e) {
    CHECK(e.seed() == 4);
    CHECK(e.time() > 0.0);
  }
  const auto ens = run_ensemble(cfg, 3, 9, 1);
  CHECK(ens.runs.empty());
  REQUIRE(ens.aborted.size() == 3);
  CHECK(ens.aborted[1].seed == derive_seed(9, 1));
}

TEST_CASE("ensembles are reproducible and independent of scheduling") {
  InterferometerConfig cfg;
  cfg.modes = ModePair{};
  cfg.sequence.pa(38, 0.1).bs(-kPi / 4).measure();
  cfg.dt = default_step(cfg.modes.gamma_bar(), 38 + 6 * 5);
  cfg.mu_spread_rel = 5.0 / 38.0;
  cfg.readout_noise_var = 0.01;
  const auto a = run_ensemble(cfg, 300, 1234, 1);
  const auto b = run_ensemble(cfg, 300, 1234, 4);
  REQUIRE(a.runs.size() == b.runs.size());
  for (std::size_t k = 0; k < a.runs.size(); ++k) {
    CHECK(a.runs[k].x_s == b.runs[k].x_s);
    CHECK(a.runs[k].mu_scale == b.runs[k].mu_scale);
  }
  CHECK(a.summary()[0].variance == b.summary()[0].variance);
  CHECK_THROWS_AS(run_ensemble(cfg, 1, 0), ValidationError);
}

TEST_CASE("interferometer config validation") {
  InterferometerConfig cfg;
  cfg.sequence.pa(1, 0.1);
  cfg.dt = 1e-3;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);  // no Measure
  cfg.sequence.measure();
  CHECK_NOTHROW(cfg.validate());
  cfg.readout_noise_var = -1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

// ---------------------------------------------------------------------------
// Three-mode model

TEST_CASE("three-mode steady state above threshold") {
  ThreeModeParams p;
  p.seed_s = {0.05, 0};
  p.seed_i = {0.05, 0};
  PulseSequence seq;
  seq.pa(2.0, 40.0 / p.gamma_bar());
  IntegratorOptions opt;
  opt.thermal_noise = false;
  opt.samples_per_segment = 20;
  const auto tr = integrate_three_mode(p, seq, default_step(p.gamma_bar(), 2.0), 1, opt);
  REQUIRE(tr.has_pump());
  CHECK_THAT(std::abs(tr.signal.back()), WithinAbs(1.0, 1e-6));
  CHECK_THAT(std::abs(tr.idler.back()), WithinAbs(1.0, 1e-6));
  CHECK_THAT(tr.mu_eff.back(), WithinAbs(1.0, 1e-6));
  CHECK_THAT(tr.mu_eff.front(), WithinAbs(0.05 * 0.05, 1e-15));  // undriven: |A_s A_i|
  CHECK_THAT(tr.mu_eff[1], WithinRel(2.0, 0.05));
}

TEST_CASE("explicit and adiabatic pumps agree") {
  ThreeModeParams p;
  p.seed_s = {0.1, 0};
  p.seed_i = {0.1, 0};
  PulseSequence seq;
  seq.pa(3.0, 5.0 / p.gamma_bar());
  IntegratorOptions opt;
  opt.thermal_noise = false;
  const auto ad = integrate_three_mode(p, seq, default_step(p.gamma_bar(), 3.0), 1, opt);
  p.adiabatic_pump = false;
  CHECK_THROWS_AS(integrate_three_mode(p, seq, default_step(p.gamma_bar(), 3.0), 1, opt),
                  ValidationError);
  const auto ex = integrate_three_mode(p, seq, 0.01 / p.gamma_pump, 1, opt);
  CHECK_THAT(std::abs(ex.signal.back()), WithinRel(std::abs(ad.signal.back()), 5e-3));
  CHECK_THAT(ex.mu_eff.back(), WithinRel(ad.mu_eff.back(), 5e-3));
}

TEST_CASE("three-mode below threshold reduces to the two-mode system") {
  const double theta = 1e-4, mu = 0.9;
  ThreeModeParams p;
  p.thermal_variance = theta;
  PulseSequence seq;
  seq.pa(mu, 2.0 / p.gamma_bar());
  const double dt = default_step(p.gamma_bar(), mu);
  IntegratorOptions opt;
  opt.samples_per_segment = 4;
  const auto three = collect_trajectories(6000, 21, 0, [&](std::uint64_t s) {
    return integrate_three_mode(p, seq, dt, s, opt);
  });
  const auto two = collect_trajectories(6000, 22, 0, [&](std::uint64_t s) {
    return integrate_two_mode(ModePair::matched(p.gamma_bar()), seq, dt, s, opt);
  });
  for (std::size_t k = 1; k < three.n_samples(); ++k) {
    auto a = ensemble_variance(x_minus(three, k));
    const auto b = ensemble_variance(x_minus(two, k));
    a.value /= theta;
    a.std_error /= theta;
    CHECK(std::abs(a.value - b.value) <= 3.0 * std::hypot(a.std_error, b.std_error));
  }
}

TEST_CASE("three-mode params validation") {
  ThreeModeParams p;
  p.gamma_pump = 10 * p.gamma_s;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.adiabatic_pump = false;
  CHECK_NOTHROW(p.validate());
  p.thermal_variance = -1;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}
