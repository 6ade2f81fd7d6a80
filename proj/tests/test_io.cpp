#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "su11/dataset.hpp"
#include "su11/engine.hpp"
#include "su11/estimators.hpp"
#include "su11/svg.hpp"
#include "su11/trajectory_io.hpp"

using namespace su11;

namespace {

Trajectory two_mode_run() {
  auto modes = ModePair::matched(kTwoPi * 0.0955, {2.0, -1.0});
  PulseSequence seq;
  seq.pa(3.0, 0.2).dwell(0.1, 0.4);
  IntegratorOptions opt;
  opt.record_stride = 7;
  return integrate_two_mode(modes, seq, default_step(modes.gamma_bar(), 3.0), 99, opt);
}

Trajectory three_mode_run() {
  ThreeModeParams prm;
  prm.seed_s = prm.seed_i = 0.03;
  prm.thermal_variance = 1e-4;
  PulseSequence seq;
  seq.pa(38, 0.05);
  IntegratorOptions opt;
  opt.samples_per_segment = 20;
  return integrate_three_mode(prm, seq, default_step(prm.gamma_bar(), 38), 5, opt);
}

}  // namespace

TEST_CASE("trajectory CSV round trip is exact") {
  for (const Trajectory& tr : {two_mode_run(), three_mode_run()}) {
    std::stringstream ss;
    write_trajectory_csv(ss, tr);
    const Trajectory back = read_trajectory_csv(ss);
    REQUIRE(back.size() == tr.size());
    CHECK(back.seed == tr.seed);
    CHECK(back.dt == tr.dt);
    CHECK(back.has_pump() == tr.has_pump());
    for (std::size_t k = 0; k < tr.size(); ++k) {
      CHECK(back.times[k] == tr.times[k]);
      CHECK(back.signal[k] == tr.signal[k]);
      CHECK(back.idler[k] == tr.idler[k]);
      CHECK(back.drive[k] == tr.drive[k]);
      CHECK(back.mu_eff[k] == tr.mu_eff[k]);
      if (tr.has_pump()) CHECK(back.pump[k] == tr.pump[k]);
    }
  }
}

TEST_CASE("trajectory CSV header and column order are stable") {
  std::stringstream ss;
  write_trajectory_csv(ss, two_mode_run());
  std::string meta, header;
  std::getline(ss, meta);
  std::getline(ss, header);
  CHECK(meta.rfind("# su11-trajectory/1 seed=99 dt=", 0) == 0);
  CHECK(header == "time,re_s,im_s,re_i,im_i,re_pump,im_pump,drive,mu");
}

TEST_CASE("trajectory CSV reader rejects malformed input") {
  std::istringstream wrong_header("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(read_trajectory_csv(wrong_header), ValidationError);
  std::istringstream bad_number(std::string(kTrajectoryHeader) + "\n0,1,x,0,0,,,0,0\n");
  CHECK_THROWS_AS(read_trajectory_csv(bad_number), ValidationError);
  std::istringstream short_row(std::string(kTrajectoryHeader) + "\n0,1,2\n");
  CHECK_THROWS_AS(read_trajectory_csv(short_row), ValidationError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_trajectory_csv(empty), ValidationError);
  CHECK_THROWS_AS(load_trajectory_csv("/nonexistent/path.csv"), ValidationError);
}

TEST_CASE("estimators accept a reloaded trajectory dump") {
  const Trajectory tr = three_mode_run();
  std::stringstream ss;
  write_trajectory_csv(ss, tr);
  const Trajectory back = read_trajectory_csv(ss);
  CHECK(pump_depletion_factor(back) == pump_depletion_factor(tr));
}

TEST_CASE("DataSet CSV uses the union of parameter columns") {
  DataSet ds;
  ds.add({{"mu", 0.5}}, "a", 1.0, 0.1, 10);
  ds.add({{"mu", 2.0}, {"t", 0.25}}, "b", 2.0);
  ds.add({}, "c", 3.0);
  std::ostringstream os;
  ds.write_csv(os);
  CHECK(os.str() ==
        "mu,t,quantity,value,std_error,n\n"
        "0.5,,a,1,0.1,10\n"
        "2,0.25,b,2,0,0\n"
        ",,c,3,0,0\n");
}

TEST_CASE("DataSet refuses non-finite rows") {
  DataSet ds;
  CHECK_THROWS(ds.add({{"mu", 1.0}}, "x", std::nan("")));
  CHECK_THROWS(ds.add({}, "x", 1.0, INFINITY));
  CHECK(ds.size() == 0);
}

TEST_CASE("DataSet JSON keeps provenance and rows") {
  DataSet ds;
  ds.provenance.experiment = "growth-law";
  ds.provenance.config_hash = 0x0123456789abcdefull;
  ds.provenance.base_seed = 18446744073709551615ull;
  ds.provenance.config_text = "schema = su11-config/1\n";
  ds.provenance.aborted_seeds = {3, 4};
  ds.add({{"mu", 1.5}, {"mu_minus_1", 0.5}}, "amplitude_sim", 0.70710678118654757, 1e-3, 200);
  ds.add({}, "growth_slope_analytic", 0.3);

  std::stringstream ss;
  ds.write_json(ss);
  const std::string text = ss.str();
  CHECK(text.find("\"config_hash\": \"0123456789abcdef\"") != std::string::npos);
  CHECK(text.find("\"code_version\": \"su11 0.1.0\"") != std::string::npos);

  const DataSet back = DataSet::from_json(nlohmann::ordered_json::parse(text));
  CHECK(back.provenance.experiment == "growth-law");
  CHECK(back.provenance.config_hash == ds.provenance.config_hash);
  CHECK(back.provenance.base_seed == ds.provenance.base_seed);
  CHECK(back.provenance.config_text == ds.provenance.config_text);
  CHECK(back.provenance.aborted_seeds == ds.provenance.aborted_seeds);
  REQUIRE(back.size() == 2);
  CHECK(back.rows()[0].value == ds.rows()[0].value);
  CHECK(back.rows()[0].params == ds.rows()[0].params);
  CHECK(back.rows()[0].n == 200);

  std::ostringstream a, b;
  ds.write_csv(a);
  back.write_csv(b);
  CHECK(a.str() == b.str());

  CHECK_THROWS_AS(DataSet::from_json(nlohmann::ordered_json::parse("{\"rows\": []}")),
                  ValidationError);
}

TEST_CASE("DataSet lookup helpers") {
  DataSet ds;
  ds.add({{"k", 10.0}, {"mu", 5.0}}, "d", 1.0);
  ds.add({{"k", 10.0}, {"mu", 7.0}}, "d", 2.0);
  ds.add({{"k", 5.0}, {"mu", 7.0}}, "d", 3.0);
  CHECK(ds.select("d").size() == 3);
  CHECK(ds.find("d", {{"mu", 7.0}})->value == 2.0);
  CHECK(ds.find("d", {{"mu", 7.0}, {"k", 5.0}})->value == 3.0);
  CHECK(ds.find("d", {{"mu", 9.0}}) == nullptr);
  CHECK(ds.find("e") == nullptr);
}

TEST_CASE("SVG rendering is a deterministic function of its input") {
  Figure f{"t <&>", "x", "y", true, true, {}, {}};
  f.series.push_back({"line", {1, 10, 100}, {1, 0.1, 0.01}, {}, "#000", false, false});
  f.series.push_back({"pts", {1, 10, 100}, {1.1, 0.09, 0.011}, {0.1, 0.01, 0.001}, "#f00", true, false});
  f.series.push_back({"skip", {-1, 0}, {1, 1}, {}, "#0f0", false, true});
  const std::string a = render_svg(f);
  CHECK(a == render_svg(f));
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("</svg>") != std::string::npos);
  CHECK(a.find("t &lt;&amp;&gt;") != std::string::npos);
  CHECK(a.find("<polyline") != std::string::npos);
  CHECK(a.find("<circle") != std::string::npos);
  CHECK(a.find("nan") == std::string::npos);
}

TEST_CASE("figures_for picks figures by experiment kind") {
  DataSet ds;
  ds.provenance.experiment = "phase-diagram";
  ds.add({{"mu", 0.5}}, "squeezed_analytic", 0.6);
  ds.add({{"mu", 0.5}}, "squeezed_sim", 0.61, 0.02, 100);
  const auto figs = figures_for(ds);
  REQUIRE(figs.size() == 1);
  CHECK(figs[0].first == "fig_phase_diagram.svg");
  ds.provenance.experiment = "unknown";
  CHECK(figures_for(ds).empty());
}
