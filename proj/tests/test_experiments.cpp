#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>

#include "su11/experiments.hpp"

using namespace su11;
using Catch::Approx;

namespace {

ExperimentConfig config(const std::string& body) {
  return parse_config("schema = su11-config/1\n" + body);
}

const DataRow& row(const DataSet& ds, const std::string& q, const Params& where = {}) {
  const DataRow* r = ds.find(q, where);
  if (!r) FAIL("missing row " << q);
  return *r;
}

std::string csv(const DataSet& ds) {
  std::ostringstream os;
  ds.write_csv(os);
  return os.str();
}

}  // namespace

TEST_CASE("phase diagram below threshold matches 1/(1+mu)") {
  const auto cfg = config(
      "experiment = phase-diagram\nmu = 0.25, 0.5, 0.9\ntau_m = inf\nruns = 2000\ngamma_hz = 0.0955\n");
  const auto ds = run_phase_diagram(cfg);
  const double expect[] = {0.8, 2.0 / 3.0, 1.0 / 1.9};
  for (int j = 0; j < 3; ++j) {
    const Params w{{"mu", cfg.mu[j]}};
    CHECK(row(ds, "squeezed_steady", w).value == Approx(expect[j]).epsilon(1e-12));
    CHECK(row(ds, "squeezed_analytic", w).value == row(ds, "squeezed_steady", w).value);
    const auto& sim = row(ds, "squeezed_sim", w);
    CHECK(std::abs(sim.value - expect[j]) < 4 * sim.std_error);
    const auto& anti = row(ds, "antisqueezed_sim", w);
    CHECK(std::abs(anti.value - 1.0 / (1.0 - cfg.mu[j])) < 4 * anti.std_error);
    CHECK(sim.n == 2000);
  }
}

TEST_CASE("phase diagram above threshold: amplitude sum 1/(2(mu-1)) for a cold substrate") {
  const auto cfg = config(
      "experiment = phase-diagram\nmu = 3\ntau_m = inf\nruns = 1500\ngamma_hz = 0.0955\n"
      "thermal_variance = 1e-4\nsubstrate_temp_ratio = 0\n");
  const auto ds = run_phase_diagram(cfg);
  CHECK(row(ds, "squeezed_steady").value == Approx(0.25));
  const auto& sum = row(ds, "squeezed_sim");
  CHECK(std::abs(sum.value - 0.25) < 3.5 * sum.std_error);
  const auto& diff = row(ds, "antisqueezed_sim");
  CHECK(std::abs(diff.value - 0.5) < 4 * diff.std_error);
  CHECK(row(ds, "squeezed_sim").param("above_threshold") == 1.0);
}

TEST_CASE("phase diagram: equal-temperature substrate lifts the amplitude sum") {
  const auto cfg = config(
      "experiment = phase-diagram\nmu = 5\ntau_m = inf\nruns = 1500\ngamma_hz = 0.0955\n"
      "thermal_variance = 1e-4\nsubstrate_temp_ratio = 1\n");
  const auto ds = run_phase_diagram(cfg);
  const double expect = 1.0 / 8.0 + 0.5;
  CHECK(row(ds, "squeezed_steady").value == Approx(expect));
  const auto& sum = row(ds, "squeezed_sim");
  CHECK(std::abs(sum.value - expect) < 4 * sum.std_error);
}

TEST_CASE("phase diagram approaches 1/2 as mu -> 1 from below") {
  const auto cfg = config("experiment = phase-diagram\nmu = 0.99, 0.999, 0.9999\ntau_m = inf\nsimulate = false\nruns = 2\n");
  const auto ds = run_phase_diagram(cfg);
  double prev = 1.0;
  for (double mu : cfg.mu) {
    const double v = row(ds, "squeezed_steady", {{"mu", mu}}).value;
    CHECK(v < prev);
    CHECK(v > 0.5);
    prev = v;
  }
  CHECK(prev == Approx(0.5).epsilon(1e-4));
}

TEST_CASE("phase diagram with finite tau_m applies the truncation") {
  const auto cfg = config(
      "experiment = phase-diagram\nmu = 0.5, 2\ntau_m = 50\nn_windows = 60\ngamma_hz = 0.0955\n");
  const auto ds = run_phase_diagram(cfg);
  const double gamma = cfg.gamma_bar();
  for (double mu : cfg.mu) {
    const Params w{{"mu", mu}};
    const double lam_anti = mu < 1 ? 0.5 * gamma * (1 - mu) : gamma;
    CHECK(row(ds, "antisqueezed_analytic", w).value ==
          Approx(row(ds, "antisqueezed_steady", w).value * truncation_factor(lam_anti, 50.0)));
    const auto& sim = row(ds, "antisqueezed_sim", w);
    CHECK(sim.n == 60);
    CHECK(std::abs(sim.value - row(ds, "antisqueezed_analytic", w).value) < 4 * sim.std_error);
    const auto& sq = row(ds, "squeezed_sim", w);
    CHECK(std::abs(sq.value - row(ds, "squeezed_analytic", w).value) < 4 * sq.std_error);
  }
}

TEST_CASE("mu = 1 on the phase-diagram grid fails validation before any run") {
  CHECK_THROWS_AS(config("experiment = phase-diagram\nmu = 0.5, 1\n"), ValidationError);
  auto cfg = config("experiment = phase-diagram\nmu = 0.5\n");
  cfg.mu.push_back(1.0);
  CHECK_THROWS_AS(run_phase_diagram(cfg), ValidationError);
}

TEST_CASE("runner refuses a config for another experiment") {
  const auto cfg = config("experiment = growth-law\nruns = 2\n");
  CHECK_THROWS_AS(run_phase_diagram(cfg), ValidationError);
}

TEST_CASE("transient squeeze follows the closed form and relaxes at gamma") {
  const auto cfg = config(
      "experiment = transient-squeeze\nmu = 38\nmu_spread = 0\nruns = 2000\ngamma_hz = 0.0955\n"
      "time_samples = 12\n");
  const auto ds = run_transient_squeeze(cfg);
  const double gamma = cfg.gamma_bar();
  const double t_pa = 10.0 / (gamma * 39.0);
  auto sims = ds.select("var_squeezed_sim");
  REQUIRE(sims.size() == 25);
  for (const auto* r : sims) {
    const double t = *r->param("t");
    const double expect = transient_squeezed(38, gamma, t_pa, t);
    CHECK(row(ds, "var_squeezed_analytic", {{"t", t}}).value == Approx(expect));
    CHECK(std::abs(r->value - expect) < 4 * r->std_error);
    const auto& anti = row(ds, "var_antisqueezed_sim", {{"t", t}});
    CHECK(std::abs(anti.value - transient_antisqueezed(38, gamma, t_pa, t)) < 4 * anti.std_error);
  }
  CHECK(row(ds, "squeezing_floor_db").value == Approx(10 * std::log10(39.0)));
  CHECK(row(ds, "min_squeezing_db_analytic").value == Approx(15.91).margin(0.01));
  const auto& rate = row(ds, "decay_rate_sim");
  CHECK(rate.value == Approx(gamma).epsilon(0.15));
}

TEST_CASE("transient squeeze with mu spread brackets the nominal curve") {
  const auto cfg = config("experiment = transient-squeeze\nmu = 38\nmu_spread = 5\nruns = 30\ntime_samples = 6\n");
  const auto ds = run_transient_squeeze(cfg);
  for (const auto* r : ds.select("var_squeezed_analytic")) {
    const double t = *r->param("t");
    CHECK(row(ds, "var_squeezed_band_lo", {{"t", t}}).value <= r->value);
    CHECK(r->value <= row(ds, "var_squeezed_band_hi", {{"t", t}}).value);
  }
  CHECK(row(ds, "min_squeezing_db_band_lo").value < row(ds, "min_squeezing_db_analytic").value);
  CHECK(row(ds, "min_squeezing_db_analytic").value < row(ds, "min_squeezing_db_band_hi").value);
  CHECK(row(ds, "min_squeezing_db_mixture").value < row(ds, "min_squeezing_db_analytic").value);
}

TEST_CASE("transient squeeze at mu = 0 stays thermal") {
  const auto cfg = config("experiment = transient-squeeze\nmu = 0\nmu_spread = 0\nruns = 3000\ntime_samples = 5\npa_duration = 1\ndecay_duration = 1\n");
  const auto ds = run_transient_squeeze(cfg);
  for (const auto* r : ds.select("var_squeezed_sim")) CHECK(std::abs(r->value - 1.0) < 4 * r->std_error);
  for (const auto* r : ds.select("var_squeezed_analytic")) CHECK(r->value == Approx(1.0));
  for (const auto* r : ds.select("var_antisqueezed_analytic")) CHECK(r->value == Approx(1.0));
}

TEST_CASE("jittered drive is reproducible and centred") {
  std::vector<double> v;
  for (std::uint64_t s = 0; s < 4000; ++s) v.push_back(jittered_mu(38, 5, derive_seed(1, s)));
  const auto st = quadrature_stats(v);
  CHECK(st.mean == Approx(38).margin(0.3));
  CHECK(std::sqrt(st.variance) == Approx(5).epsilon(0.05));
  CHECK(jittered_mu(38, 5, 77) == jittered_mu(38, 5, 77));
  CHECK(jittered_mu(38, 0, 77) == 38);
}

TEST_CASE("Heisenberg scaling: alpha = 1 for SU(1,1), 1/2 for the conventional branch") {
  const auto cfg = config(
      "experiment = heisenberg-scaling\nk = 10\nmu = 5, 20, 80, 300\nruns = 300\n"
      "inset_mu = 38\ninset_windows = 0.01:0.05, 1:1.4\ninset_points = 3\n");
  const auto ds = run_heisenberg_scaling(cfg);
  CHECK(row(ds, "alpha_analytic").value == Approx(1.0).margin(1e-9));
  CHECK(row(ds, "alpha_sql").value == Approx(0.5).margin(1e-9));
  CHECK(row(ds, "alpha_sim").value == Approx(1.0).margin(0.08));
  CHECK(row(ds, "alpha_sql_sim").value == Approx(0.5).margin(0.05));
  CHECK(row(ds, "gain_sq_decades").value > 2.0);
  const double gamma = cfg.gamma_bar();
  for (double mu : cfg.mu) {
    const Params w{{"mu", mu}};
    const auto sp = phase_sensitivity(10.0, mu, gamma, 10.0);
    CHECK(row(ds, "delta_phi_analytic", w).value == Approx(sp.delta_phi));
    CHECK(row(ds, "delta_phi_sql", w).value == Approx(1.0 / std::sqrt(2.0 * sp.n_signal)));
    const auto& sim = row(ds, "delta_phi_sim", w);
    const double damped = row(ds, "delta_phi_damped", w).value;
    CHECK(std::abs(sim.value - damped) < 4 * sim.std_error);
    const auto& sql = row(ds, "delta_phi_sql_sim", w);
    CHECK(std::abs(sql.value - row(ds, "delta_phi_sql", w).value) < 4 * sql.std_error);
  }
  CHECK(row(ds, "alpha_inset_damped", {{"gamma_t_lo", 0.01}}).value > 0.9);
  CHECK(row(ds, "alpha_inset_damped", {{"gamma_t_lo", 1.0}}).value < 0.7);
  CHECK(row(ds, "alpha_inset_sim", {{"gamma_t_lo", 1.0}}).value < 0.7);
}

TEST_CASE("Heisenberg scaling without simulation emits only closed forms") {
  const auto ds = run_heisenberg_scaling(
      config("experiment = heisenberg-scaling\nmu = 5, 50, 500\nsimulate = false\ninset_windows = none\nruns = 2\n"));
  CHECK(ds.select("delta_phi_sim").empty());
  CHECK(ds.select("alpha_inset_damped").empty());
  CHECK(ds.select("delta_phi_analytic").size() == 3);
}

TEST_CASE("pump depletion: measured eta against the predictor") {
  const auto cfg = config("experiment = pump-depletion\nmu = 38\nseeds = 0, 0.003, 0.03\nruns = 8\ntime_samples = 4\n");
  const auto ds = run_pump_depletion(cfg);
  CHECK(row(ds, "eta_sim", {{"seed", 0.0}}).value == 0.0);
  const double eta3 = row(ds, "eta_sim", {{"seed", 0.03}}).value;
  CHECK(eta3 > 0.009 / 2);
  CHECK(eta3 < 0.009 * 2);
  CHECK(row(ds, "eta_predicted", {{"seed", 0.03}}).value == Approx(0.0066).margin(5e-5));
  CHECK(row(ds, "eta_asymptote", {{"seed", 0.03}}).value == Approx(0.009));
  // quadratic in the seed while depletion is small
  CHECK(eta3 / row(ds, "eta_sim", {{"seed", 0.003}}).value == Approx(100).epsilon(0.05));
  const auto mu_end = row(ds, "mu_eff_end", {{"seed", 0.03}}).value;
  CHECK(mu_end < 38);
  CHECK(mu_end > 37);
  CHECK(ds.select("var_squeezed_depleted_sim").size() == 3 * 5);
}

TEST_CASE("pump depletion: larger seeds degrade squeezing sooner") {
  const auto cfg = config(
      "experiment = pump-depletion\nmu = 38\nseeds = 0.01, 0.3\nruns = 400\ntime_samples = 8\ngamma_hz = 0.0955\n");
  const auto ds = run_pump_depletion(cfg);
  const auto small_seed = ds.select("var_squeezed_depleted_sim");
  double t_end = 0.0;
  for (const auto* r : small_seed) t_end = std::max(t_end, *r->param("t"));
  const auto& a = row(ds, "var_squeezed_depleted_sim", {{"seed", 0.01}, {"t", t_end}});
  const auto& b = row(ds, "var_squeezed_depleted_sim", {{"seed", 0.3}, {"t", t_end}});
  CHECK(b.value > a.value + 4 * std::hypot(a.std_error, b.std_error));
  const double undepleted = row(ds, "var_squeezed_undepleted", {{"seed", 0.01}, {"t", t_end}}).value;
  CHECK(std::abs(a.value - undepleted) < 4 * a.std_error + 0.1 * undepleted);
  CHECK(row(ds, "mu_eff_mean", {{"seed", 0.3}, {"t", t_end}}).value <
        row(ds, "mu_eff_mean", {{"seed", 0.01}, {"t", t_end}}).value);
}

TEST_CASE("growth law: square-root amplitude and linear growth rate") {
  const auto cfg = config("experiment = growth-law\nmu = 1.5, 3, 6\nruns = 40\ngamma_hz = 0.0955\n");
  const auto ds = run_growth_law(cfg);
  const double gamma = cfg.gamma_bar();
  CHECK(row(ds, "exponent_analytic").value == Approx(0.5).margin(1e-12));
  CHECK(row(ds, "exponent_sim").value == Approx(0.5).margin(0.05));
  for (double mu : cfg.mu) {
    CHECK(row(ds, "amplitude_sim", {{"mu", mu}}).value == Approx(std::sqrt(mu - 1)).epsilon(0.03));
    CHECK(row(ds, "growth_rate_sim", {{"mu", mu}}).value ==
          Approx(amplitude_growth_rate(mu, gamma)).epsilon(0.03));
  }
  CHECK(row(ds, "growth_slope_sim").value == Approx(gamma / 2).epsilon(0.05));
  CHECK(row(ds, "growth_slope_analytic").value == Approx(gamma / 2));
}

TEST_CASE("reruns are value-identical; a new seed changes the numbers") {
  const auto cfg = config("experiment = transient-squeeze\nruns = 12\ntime_samples = 3\nthreads = 3\n");
  const auto a = run_transient_squeeze(cfg);
  auto single = cfg;
  single.threads = 1;
  const auto b = run_transient_squeeze(single);
  CHECK(csv(a) == csv(b));
  auto other = cfg;
  other.base_seed += 1;
  CHECK(csv(run_transient_squeeze(other)) != csv(a));
  CHECK(a.provenance.config_hash == fnv1a64(cfg.canonical_text()));
  CHECK(a.provenance.base_seed == cfg.base_seed);
  CHECK(a.provenance.code_version == "su11 0.1.0");
}

TEST_CASE("run_experiment dispatches on the configured kind") {
  const auto ds = run_experiment(config("experiment = pump-depletion\nseeds = 0.01\nruns = 2\ntime_samples = 2\n"));
  CHECK(ds.provenance.experiment == "pump-depletion");
  CHECK_FALSE(ds.select("eta_sim").empty());
}
