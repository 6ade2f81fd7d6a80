// su11: run an experiment from a config file, or redraw plots from a dataset.
//
//   su11 <experiment> --config <path> [--out <dir>] [--seed <u64>] [--runs <n>] [--dry-run]
//   su11 plot --dataset <dataset.json> [--out <dir>]
//
// Exit codes: 0 success, 2 validation failure, 3 numerical abort, 1 other errors.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "su11/su11.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitAbort = 3;

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

void write_plots(const su11::DataSet& ds, const fs::path& out) {
  for (const auto& [name, fig] : su11::figures_for(ds)) {
    write_file(out / name, su11::render_svg(fig));
    std::cout << "  " << (out / name).string() << '\n';
  }
}

struct RunOptions {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<unsigned> threads;
  bool dry_run = false;
};

int run(su11::ExperimentKind kind, const RunOptions& opt) {
  su11::ExperimentConfig cfg = su11::load_config(opt.config);
  if (cfg.kind != kind)
    throw su11::ValidationError(opt.config + " configures '" + su11::to_string(cfg.kind) +
                                "', not '" + su11::to_string(kind) + "'");
  if (opt.out) cfg.out_dir = *opt.out;
  if (opt.seed) cfg.base_seed = *opt.seed;
  if (opt.runs) cfg.runs = *opt.runs;
  if (opt.threads) cfg.threads = *opt.threads;
  cfg.validate();

  const std::string canonical = cfg.canonical_text();
  const auto hash = su11::DataSet::hex(su11::fnv1a64(canonical));
  if (opt.dry_run) {
    std::cout << "# config valid, hash " << hash << ", output " << cfg.out_dir << "\n" << canonical;
    return 0;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const su11::DataSet ds = su11::run_experiment(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  {
    std::ofstream csv(out / "dataset.csv");
    ds.write_csv(csv);
    std::ofstream json(out / "dataset.json");
    ds.write_json(json);
  }
  std::cout << su11::to_string(kind) << ": " << ds.size() << " rows in " << secs << " s, config "
            << hash << ", seed " << cfg.base_seed << '\n'
            << "  " << (out / "dataset.csv").string() << "\n  " << (out / "dataset.json").string()
            << '\n';
  write_plots(ds, out);

  const auto& aborted = ds.provenance.aborted_seeds;
  if (!aborted.empty()) {
    std::cerr << "error: " << aborted.size() << " run(s) diverged; replay seeds:";
    for (auto s : aborted) std::cerr << ' ' << s;
    std::cerr << '\n';
    return kExitAbort;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SU(1,1) two-mode interferometer simulations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", su11::kCodeVersion);

  RunOptions opt;
  std::optional<su11::ExperimentKind> chosen;
  for (auto kind : {su11::ExperimentKind::PhaseDiagram, su11::ExperimentKind::TransientSqueeze,
                    su11::ExperimentKind::HeisenbergScaling, su11::ExperimentKind::PumpDepletion,
                    su11::ExperimentKind::GrowthLaw}) {
    auto* sub = app.add_subcommand(su11::to_string(kind), std::string("run ") + su11::to_string(kind));
    sub->add_option("--config", opt.config, "configuration file")->required();
    sub->add_option("--out", opt.out, "output directory (overrides out_dir)");
    sub->add_option("--seed", opt.seed, "base seed (overrides base_seed)");
    sub->add_option("--runs", opt.runs, "ensemble size (overrides runs)");
    sub->add_option("--threads", opt.threads, "worker threads, 0 = all cores");
    sub->add_flag("--dry-run", opt.dry_run, "validate and print the resolved config only");
    sub->callback([&chosen, kind] { chosen = kind; });
  }

  std::string dataset;
  std::optional<std::string> plot_out;
  auto* plot = app.add_subcommand("plot", "redraw fig_*.svg from a dataset.json");
  plot->add_option("--dataset", dataset, "dataset.json written by a run")->required();
  plot->add_option("--out", plot_out, "output directory (default: the dataset's directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (plot->parsed()) {
      const auto ds = su11::DataSet::load_json(dataset);
      const fs::path out = plot_out ? fs::path(*plot_out) : fs::path(dataset).parent_path();
      if (!out.empty()) fs::create_directories(out);
      write_plots(ds, out.empty() ? fs::path(".") : out);
      return 0;
    }
    return run(*chosen, opt);
  } catch (const su11::ValidationError& e) {
    std::cerr << "validation failed:\n";
    for (const auto& p : e.problems()) std::cerr << "  - " << p << '\n';
    return kExitValidation;
  } catch (const su11::NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kExitAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
