#pragma once

// Trajectory dump format (CSV, one row per sample):
//
//   # su11-trajectory/1 seed=<u64> dt=<s>
//   time,re_s,im_s,re_i,im_i,re_pump,im_pump,drive,mu
//
// Pump fields are empty for two-mode runs. Column order is stable.

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "su11/engine.hpp"
#include "su11/errors.hpp"

namespace su11 {

inline constexpr const char* kTrajectoryHeader =
    "time,re_s,im_s,re_i,im_i,re_pump,im_pump,drive,mu";

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "# su11-trajectory/1 seed=" << traj.seed << " dt=" << std::setprecision(17) << traj.dt
     << '\n'
     << kTrajectoryHeader << '\n';
  os << std::setprecision(17);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << traj.times[k] << ',' << traj.signal[k].real() << ',' << traj.signal[k].imag() << ','
       << traj.idler[k].real() << ',' << traj.idler[k].imag() << ',';
    if (traj.has_pump()) os << traj.pump[k].real() << ',' << traj.pump[k].imag();
    else os << ',';
    os << ',' << traj.drive[k] << ',' << traj.mu_eff[k] << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("trajectory csv line " + std::to_string(line) + ": bad number '" + s +
                          "'");
  }
}

}  // namespace detail

/// Inverse of write_trajectory_csv. Segment spans are not stored.
inline Trajectory read_trajectory_csv(std::istream& is) {
  Trajectory traj;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string tok;
      while (meta >> tok) {
        if (tok.rfind("seed=", 0) == 0) traj.seed = std::stoull(tok.substr(5));
        if (tok.rfind("dt=", 0) == 0) traj.dt = std::stod(tok.substr(3));
      }
      continue;
    }
    if (!header_seen) {
      require(line == kTrajectoryHeader, "trajectory csv: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto cells = detail::split_csv(line);
    require(cells.size() == 9, "trajectory csv line " + std::to_string(lineno) + ": need 9 fields");
    auto num = [&](std::size_t c) { return detail::parse_double(cells[c], lineno); };
    traj.times.push_back(num(0));
    traj.signal.emplace_back(num(1), num(2));
    traj.idler.emplace_back(num(3), num(4));
    const bool pump = !cells[5].empty();
    require(pump == traj.has_pump() || traj.size() == 1,
            "trajectory csv line " + std::to_string(lineno) + ": pump columns inconsistent");
    if (pump) traj.pump.emplace_back(num(5), num(6));
    traj.drive.push_back(num(7));
    traj.mu_eff.push_back(num(8));
  }
  require(header_seen, "trajectory csv: missing header");
  traj.validate();
  return traj;
}

inline void save_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  require(os.good(), "cannot open " + path + " for writing");
  write_trajectory_csv(os, traj);
}

inline Trajectory load_trajectory_csv(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "cannot open " + path);
  return read_trajectory_csv(is);
}

}  // namespace su11
