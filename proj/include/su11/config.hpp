#pragma once

// Experiment configuration files: one `key = value` per line, `#` starts a
// comment. The first key must be `schema = su11-config/1`.
//
// Values are numbers, booleans (true/false), words, or lists. Lists are
// comma-separated or generated with linspace(a, b, n) / geomspace(a, b, n).
// Time windows are written `a:b`. Times are in seconds unless the key says
// otherwise; rates given in Hz are divided by 2 pi internally.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "su11/engine.hpp"
#include "su11/errors.hpp"
#include "su11/model.hpp"

namespace su11 {

inline constexpr const char* kConfigSchema = "su11-config/1";

enum class ExperimentKind { PhaseDiagram, TransientSqueeze, HeisenbergScaling, PumpDepletion, GrowthLaw };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::PhaseDiagram: return "phase-diagram";
    case ExperimentKind::TransientSqueeze: return "transient-squeeze";
    case ExperimentKind::HeisenbergScaling: return "heisenberg-scaling";
    case ExperimentKind::PumpDepletion: return "pump-depletion";
    case ExperimentKind::GrowthLaw: return "growth-law";
  }
  return "?";
}

inline std::optional<ExperimentKind> parse_experiment_kind(std::string_view s) {
  for (auto k : {ExperimentKind::PhaseDiagram, ExperimentKind::TransientSqueeze,
                 ExperimentKind::HeisenbergScaling, ExperimentKind::PumpDepletion,
                 ExperimentKind::GrowthLaw})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

struct TimeWindow {
  double lo = 0.0;
  double hi = 0.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::PhaseDiagram;

  // modes (Hz = rate / 2 pi)
  double omega_s_hz = 1.233e6;
  double omega_i_hz = 1.466e6;
  double gamma_s_hz = 0.083;
  double gamma_i_hz = 0.108;
  double alpha_s = 0.0;
  double alpha_i = 0.0;

  // drive grid
  std::vector<double> mu;
  double mu_spread = 0.0;  ///< standard deviation of mu across runs (absolute)
  std::vector<double> k{10.0};

  // ensembles and integration
  std::size_t runs = 236;
  std::uint64_t base_seed = 1;
  double dt = 0.0;  ///< 0 selects the largest step the precondition allows
  unsigned threads = 0;
  std::string out_dir = "out";

  // measurement
  double tau_m = std::numeric_limits<double>::infinity();
  std::size_t n_windows = 100;
  double readout_noise_var = 0.0;

  // three-mode model
  double thermal_variance = 1e-3;
  double substrate_temp_ratio = 0.0;
  std::vector<double> seeds{0.0, 0.003, 0.01, 0.03, 0.1, 0.3};
  double seed_amplitude = 1e-3;

  // pulse timing (0 = experiment default)
  double pa_duration = 0.0;
  double decay_duration = 0.0;
  std::size_t time_samples = 25;

  // Heisenberg-scaling inset: PA-duration windows in units of 1/gamma
  double inset_mu = 38.0;
  std::vector<TimeWindow> inset_windows;
  std::size_t inset_points = 5;
  bool simulate = true;

  /// Canonical key = value text of every setting, used for the provenance hash.
  std::string canonical_text() const;

  ModePair modes() const {
    ModePair m;
    m.omega_s = kTwoPi * omega_s_hz;
    m.omega_i = kTwoPi * omega_i_hz;
    m.gamma_s = kTwoPi * gamma_s_hz;
    m.gamma_i = kTwoPi * gamma_i_hz;
    m.alpha_s = alpha_s;
    m.alpha_i = alpha_i;
    return m;
  }

  double gamma_bar() const { return kTwoPi * 0.5 * (gamma_s_hz + gamma_i_hz); }

  double mu_max() const {
    double m = 0.0;
    for (double v : mu) m = std::max(m, v);
    if (kind == ExperimentKind::HeisenbergScaling && !inset_windows.empty()) m = std::max(m, inset_mu);
    return m + 6.0 * mu_spread;
  }

  /// dt for a run whose nominal drive is mu_run (spread included).
  double step_for(double mu_run) const {
    return dt > 0.0 ? dt : default_step(gamma_bar(), mu_run + 6.0 * mu_spread);
  }

  /// Checks every precondition and reports all violations at once.
  void validate() const;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline bool parse_number(const std::string& s, double& out) {
  if (s == "inf" || s == "+inf" || s == "-inf") {
    out = s[0] == '-' ? -std::numeric_limits<double>::infinity()
                      : std::numeric_limits<double>::infinity();
    return true;
  }
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(s);
  while (std::getline(is, cell, sep)) out.push_back(trim(cell));
  return out;
}

/// Shortest text that reads back as the same double.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Parses one list value; appends problems instead of throwing.
inline std::vector<double> parse_list(const std::string& key, const std::string& value,
                                      std::vector<std::string>& problems) {
  std::vector<double> out;
  auto bad = [&](const std::string& why) { problems.push_back(key + ": " + why + " in '" + value + "'"); };
  for (const char* fn : {"linspace", "geomspace"}) {
    const std::string head = std::string(fn) + "(";
    if (value.rfind(head, 0) == 0) {
      if (value.back() != ')') {
        bad("missing ')'");
        return out;
      }
      const auto args = split(value.substr(head.size(), value.size() - head.size() - 1), ',');
      double a, b, n;
      if (args.size() != 3 || !parse_number(args[0], a) || !parse_number(args[1], b) ||
          !parse_number(args[2], n)) {
        bad(std::string(fn) + " needs (start, stop, count)");
        return out;
      }
      if (n < 1 || n != std::floor(n)) {
        bad("count must be a positive integer");
        return out;
      }
      const bool geo = fn[0] == 'g';
      if (geo && (a <= 0 || b <= 0)) {
        bad("geomspace bounds must be > 0");
        return out;
      }
      const auto count = static_cast<std::size_t>(n);
      for (std::size_t j = 0; j < count; ++j) {
        const double f = count == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(count - 1);
        out.push_back(geo ? a * std::pow(b / a, f) : a + (b - a) * f);
      }
      if (count > 1) out.back() = b;
      return out;
    }
  }
  for (const auto& item : split(value, ',')) {
    double v;
    if (!parse_number(item, v)) {
      bad("not a number: '" + item + "'");
      continue;
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

inline std::string ExperimentConfig::canonical_text() const {
  using detail::format_double;
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t j = 0; j < v.size(); ++j) s += (j ? "," : "") + format_double(v[j]);
    return s;
  };
  std::string windows;
  for (std::size_t j = 0; j < inset_windows.size(); ++j)
    windows += (j ? "," : "") + format_double(inset_windows[j].lo) + ":" +
               format_double(inset_windows[j].hi);
  std::ostringstream os;
  os << "schema = " << kConfigSchema << '\n'
     << "experiment = " << to_string(kind) << '\n'
     << "omega_s_hz = " << format_double(omega_s_hz) << '\n'
     << "omega_i_hz = " << format_double(omega_i_hz) << '\n'
     << "gamma_s_hz = " << format_double(gamma_s_hz) << '\n'
     << "gamma_i_hz = " << format_double(gamma_i_hz) << '\n'
     << "alpha_s = " << format_double(alpha_s) << '\n'
     << "alpha_i = " << format_double(alpha_i) << '\n'
     << "mu = " << list(mu) << '\n'
     << "mu_spread = " << format_double(mu_spread) << '\n'
     << "k = " << list(k) << '\n'
     << "runs = " << runs << '\n'
     << "base_seed = " << base_seed << '\n'
     << "dt = " << format_double(dt) << '\n'
     << "tau_m = " << format_double(tau_m) << '\n'
     << "n_windows = " << n_windows << '\n'
     << "readout_noise_var = " << format_double(readout_noise_var) << '\n'
     << "thermal_variance = " << format_double(thermal_variance) << '\n'
     << "substrate_temp_ratio = " << format_double(substrate_temp_ratio) << '\n'
     << "seeds = " << list(seeds) << '\n'
     << "seed_amplitude = " << format_double(seed_amplitude) << '\n'
     << "pa_duration = " << format_double(pa_duration) << '\n'
     << "decay_duration = " << format_double(decay_duration) << '\n'
     << "time_samples = " << time_samples << '\n'
     << "inset_mu = " << format_double(inset_mu) << '\n'
     << "inset_windows = " << windows << '\n'
     << "inset_points = " << inset_points << '\n'
     << "simulate = " << (simulate ? "true" : "false") << '\n';
  return os.str();
}

inline void ExperimentConfig::validate() const {
  std::vector<std::string> p;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) p.push_back(msg);
  };
  check(gamma_s_hz > 0 && std::isfinite(gamma_s_hz), "gamma_s_hz must be > 0");
  check(gamma_i_hz > 0 && std::isfinite(gamma_i_hz), "gamma_i_hz must be > 0");
  check(omega_s_hz != omega_i_hz, "omega_s_hz and omega_i_hz must differ (nondegenerate modes)");
  check(runs >= 2, "runs must be >= 2");
  check(std::isfinite(dt) && dt >= 0.0, "dt must be >= 0 (0 selects the largest allowed step)");
  check(tau_m > 0.0, "tau_m must be > 0");
  check(n_windows >= 2, "n_windows must be >= 2");
  check(readout_noise_var >= 0.0, "readout_noise_var must be >= 0");
  check(thermal_variance > 0.0 && std::isfinite(thermal_variance), "thermal_variance must be > 0");
  check(substrate_temp_ratio >= 0.0, "substrate_temp_ratio must be >= 0");
  check(mu_spread >= 0.0 && std::isfinite(mu_spread), "mu_spread must be >= 0");
  check(pa_duration >= 0.0 && decay_duration >= 0.0, "pulse durations must be >= 0");
  check(time_samples >= 2, "time_samples must be >= 2");
  check(!mu.empty(), "mu grid must not be empty");
  for (double m : mu) {
    const auto s = detail::format_double(m);
    check(std::isfinite(m) && m >= 0.0, "mu = " + s + ": must be finite and >= 0");
    switch (kind) {
      case ExperimentKind::PhaseDiagram:
        check(m != 1.0, "mu = 1 is the critical point and cannot be on the phase-diagram grid");
        break;
      case ExperimentKind::GrowthLaw:
        check(m > 1.0, "mu = " + s + ": growth law needs mu > 1");
        break;
      case ExperimentKind::PumpDepletion:
        check(m > 0.0, "mu0 = " + s + ": pump depletion needs mu0 > 0");
        break;
      case ExperimentKind::HeisenbergScaling:
        for (double kk : k)
          check(kk * m > 1.0, "k = " + detail::format_double(kk) + ", mu = " + s + ": need k > 1/mu");
        break;
      case ExperimentKind::TransientSqueeze:
        break;
    }
  }
  if (kind == ExperimentKind::HeisenbergScaling) {
    check(!k.empty(), "k grid must not be empty");
    check(alpha_s != 0.0, "alpha_s must be nonzero for phase sensing");
    check(mu.size() >= 3, "heisenberg-scaling needs at least 3 mu values for a fit");
    check(inset_points >= 3, "inset_points must be >= 3");
    for (const auto& w : inset_windows)
      check(w.lo > 0.0 && w.hi > w.lo, "inset window " + detail::format_double(w.lo) + ":" +
                                           detail::format_double(w.hi) + " needs 0 < lo < hi");
    check(inset_windows.empty() || inset_mu > 0.0, "inset_mu must be > 0");
  }
  if (kind == ExperimentKind::GrowthLaw) {
    check(mu.size() >= 3, "growth-law needs at least 3 mu values for a fit");
    check(seed_amplitude > 0.0, "seed_amplitude must be > 0");
  }
  if (kind == ExperimentKind::PumpDepletion) {
    for (double s : seeds) check(std::isfinite(s) && s >= 0.0, "seeds must be >= 0");
    check(!seeds.empty(), "seeds grid must not be empty");
  }
  if (dt > 0.0 && p.empty()) {
    const double limit = default_step(gamma_bar(), mu_max());
    check(dt <= limit * (1.0 + 1e-9), "dt = " + detail::format_double(dt) +
                                          " too coarse: need dt <= " + detail::format_double(limit));
  }
  if (!p.empty()) throw ValidationError(std::move(p));
}

/// Parses configuration text. Every problem (unknown key, bad value,
/// violated precondition) is collected into one ValidationError.
inline ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::vector<std::string> problems;
  std::map<std::string, std::pair<std::string, std::size_t>> entries;
  std::vector<std::string> order;

  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    if (entries.count(key)) {
      problems.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
      continue;
    }
    entries[key] = {value, lineno};
    order.push_back(key);
  }

  if (order.empty() || order.front() != "schema") {
    problems.push_back("first key must be 'schema = " + std::string(kConfigSchema) + "'");
  } else if (entries["schema"].first != kConfigSchema) {
    problems.push_back("unsupported schema '" + entries["schema"].first + "' (expected " +
                       kConfigSchema + ")");
  }

  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    std::string v = it->second.first;
    entries.erase(it);
    return v;
  };
  auto number = [&](const std::string& key, double& out) {
    if (auto v = take(key)) {
      if (!detail::parse_number(*v, out)) problems.push_back(key + ": not a number: '" + *v + "'");
    }
  };
  auto count = [&](const std::string& key, std::size_t& out) {
    if (auto v = take(key)) {
      double d;
      if (!detail::parse_number(*v, d) || d < 0 || d != std::floor(d) || d > 1e15)
        problems.push_back(key + ": expected a non-negative integer, got '" + *v + "'");
      else
        out = static_cast<std::size_t>(d);
    }
  };
  auto list = [&](const std::string& key, std::vector<double>& out) {
    if (auto v = take(key)) out = detail::parse_list(key, *v, problems);
  };
  auto flag = [&](const std::string& key, bool& out) {
    if (auto v = take(key)) {
      if (*v == "true") out = true;
      else if (*v == "false") out = false;
      else problems.push_back(key + ": expected true or false, got '" + *v + "'");
    }
  };

  take("schema");
  if (auto v = take("experiment")) {
    if (auto kind = parse_experiment_kind(*v)) cfg.kind = *kind;
    else problems.push_back("experiment: unknown kind '" + *v + "'");
  } else {
    problems.push_back("experiment: missing");
  }

  // experiment-specific defaults, overridden below
  switch (cfg.kind) {
    case ExperimentKind::PhaseDiagram:
      cfg.mu = {0.0, 0.25, 0.5, 0.75, 0.9, 1.5, 2.0, 3.0, 5.0};
      cfg.tau_m = 100.0;
      cfg.runs = 1000;
      break;
    case ExperimentKind::TransientSqueeze:
      cfg.mu = {38.0};
      cfg.mu_spread = 5.0;
      break;
    case ExperimentKind::HeisenbergScaling:
      cfg.mu = detail::parse_list("mu", "geomspace(5, 300, 12)", problems);
      cfg.alpha_s = 10.0;
      cfg.runs = 1000;
      cfg.inset_windows = {{0.01, 0.05}, {0.05, 0.2}, {0.2, 0.5}, {0.5, 1.0}, {1.0, 1.4}};
      break;
    case ExperimentKind::PumpDepletion:
      cfg.mu = {38.0};
      cfg.thermal_variance = 1e-4;
      break;
    case ExperimentKind::GrowthLaw:
      cfg.mu = detail::parse_list("mu", "geomspace(1.1, 10, 10)", problems);
      cfg.runs = 200;
      cfg.thermal_variance = 1e-6;
      break;
  }

  number("omega_s_hz", cfg.omega_s_hz);
  number("omega_i_hz", cfg.omega_i_hz);
  number("gamma_s_hz", cfg.gamma_s_hz);
  number("gamma_i_hz", cfg.gamma_i_hz);
  if (auto v = take("gamma_hz")) {  // matched damping shorthand
    double g;
    if (detail::parse_number(*v, g)) cfg.gamma_s_hz = cfg.gamma_i_hz = g;
    else problems.push_back("gamma_hz: not a number: '" + *v + "'");
  }
  number("alpha_s", cfg.alpha_s);
  number("alpha_i", cfg.alpha_i);
  list("mu", cfg.mu);
  number("mu_spread", cfg.mu_spread);
  list("k", cfg.k);
  count("runs", cfg.runs);
  if (auto v = take("base_seed")) {
    try {
      std::size_t used = 0;
      cfg.base_seed = std::stoull(*v, &used, 0);
      if (used != v->size()) throw std::invalid_argument(*v);
    } catch (const std::exception&) {
      problems.push_back("base_seed: expected an unsigned 64-bit integer, got '" + *v + "'");
    }
  }
  number("dt", cfg.dt);
  if (auto v = take("threads")) {
    double d;
    if (detail::parse_number(*v, d) && d >= 0 && d == std::floor(d)) cfg.threads = static_cast<unsigned>(d);
    else problems.push_back("threads: expected a non-negative integer");
  }
  if (auto v = take("out_dir")) cfg.out_dir = *v;
  number("tau_m", cfg.tau_m);
  count("n_windows", cfg.n_windows);
  number("readout_noise_var", cfg.readout_noise_var);
  number("thermal_variance", cfg.thermal_variance);
  number("substrate_temp_ratio", cfg.substrate_temp_ratio);
  list("seeds", cfg.seeds);
  number("seed_amplitude", cfg.seed_amplitude);
  number("pa_duration", cfg.pa_duration);
  number("decay_duration", cfg.decay_duration);
  count("time_samples", cfg.time_samples);
  number("inset_mu", cfg.inset_mu);
  if (auto v = take("inset_windows")) {
    cfg.inset_windows.clear();
    if (!v->empty() && *v != "none") {
      for (const auto& item : detail::split(*v, ',')) {
        const auto parts = detail::split(item, ':');
        double lo, hi;
        if (parts.size() != 2 || !detail::parse_number(parts[0], lo) ||
            !detail::parse_number(parts[1], hi)) {
          problems.push_back("inset_windows: expected 'lo:hi' items, got '" + item + "'");
          continue;
        }
        cfg.inset_windows.push_back({lo, hi});
      }
    }
  }
  count("inset_points", cfg.inset_points);
  flag("simulate", cfg.simulate);

  for (const auto& [key, entry] : entries)
    problems.push_back("line " + std::to_string(entry.second) + ": unknown key '" + key + "'");

  // Values that failed to parse kept their defaults, so this adds only real violations.
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    for (const auto& m : e.problems()) problems.push_back(m);
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is.good()) throw ValidationError("cannot open config file '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return parse_config(os.str());
}

}  // namespace su11
