#pragma once

// Static SVG figures. Everything here is a pure function of a DataSet, so a
// plot can be regenerated from dataset.json without rerunning anything.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "su11/dataset.hpp"

namespace su11 {

struct Series {
  std::string label;
  std::vector<double> x, y, err;  ///< err empty or one per point
  std::string color = "#1f77b4";
  bool markers = false;           ///< points with error bars instead of a line
  bool dashed = false;
};

struct Figure {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
  /// Shaded band between two series (indices into `series`), drawn first.
  std::vector<std::pair<std::size_t, std::size_t>> bands;
};

namespace detail {

inline std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

struct Axis {
  double lo, hi;
  bool log;
  double px0, px1;

  double map(double v) const {
    const double a = log ? std::log10(lo) : lo;
    const double b = log ? std::log10(hi) : hi;
    const double u = log ? std::log10(v) : v;
    return px0 + (u - a) / (b - a) * (px1 - px0);
  }

  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      for (double e = std::floor(std::log10(lo)); e <= std::ceil(std::log10(hi)); e += 1.0) {
        const double v = std::pow(10.0, e);
        if (v >= lo * (1 - 1e-9) && v <= hi * (1 + 1e-9)) t.push_back(v);
      }
      return t;
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (raw <= m * mag) {
        step = m * mag;
        break;
      }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step)
      t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return t;
  }
};

inline std::pair<double, double> padded_range(std::vector<double> v, bool log) {
  v.erase(std::remove_if(v.begin(), v.end(),
                         [&](double x) { return !std::isfinite(x) || (log && x <= 0.0); }),
          v.end());
  if (v.empty()) return {log ? 1.0 : 0.0, log ? 10.0 : 1.0};
  double lo = *std::min_element(v.begin(), v.end());
  double hi = *std::max_element(v.begin(), v.end());
  if (log) {
    if (hi / lo < 10.0) {
      lo /= 1.5;
      hi *= 1.5;
    }
    return {std::pow(10.0, std::floor(std::log10(lo))), std::pow(10.0, std::ceil(std::log10(hi)))};
  }
  if (hi == lo) {
    lo -= 0.5 * std::max(1.0, std::abs(lo));
    hi += 0.5 * std::max(1.0, std::abs(hi));
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace detail

inline std::string render_svg(const Figure& fig) {
  constexpr double W = 640, H = 440, L = 80, R = 170, T = 40, B = 60;
  std::vector<double> xs, ys;
  for (const auto& s : fig.series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    for (std::size_t j = 0; j < s.y.size(); ++j) {
      const double e = j < s.err.size() ? s.err[j] : 0.0;
      ys.push_back(s.y[j] + e);
      ys.push_back(fig.log_y && s.y[j] - e <= 0.0 ? s.y[j] : s.y[j] - e);
    }
  }
  const auto [x0, x1] = detail::padded_range(xs, fig.log_x);
  const auto [y0, y1] = detail::padded_range(ys, fig.log_y);
  const detail::Axis ax{x0, x1, fig.log_x, L, W - R};
  const detail::Axis ay{y0, y1, fig.log_y, H - B, T};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << detail::esc(fig.title) << "</text>\n";

  for (double t : ax.ticks()) {
    const double px = ax.map(t);
    os << "<line x1=\"" << px << "\" y1=\"" << T << "\" x2=\"" << px << "\" y2=\"" << H - B
       << "\" stroke=\"#eee\"/>\n<text x=\"" << px << "\" y=\"" << H - B + 16
       << "\" text-anchor=\"middle\">" << detail::num(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double py = ay.map(t);
    os << "<line x1=\"" << L << "\" y1=\"" << py << "\" x2=\"" << W - R << "\" y2=\"" << py
       << "\" stroke=\"#eee\"/>\n<text x=\"" << L - 6 << "\" y=\"" << py + 4
       << "\" text-anchor=\"end\">" << detail::num(t) << "</text>\n";
  }
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - R - L << "\" height=\""
     << H - B - T << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">"
     << detail::esc(fig.x_label) << "</text>\n";
  os << "<text transform=\"translate(20," << (T + H - B) / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << detail::esc(fig.y_label) << "</text>\n";

  auto ok = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!fig.log_x || x > 0) && (!fig.log_y || y > 0);
  };
  for (const auto& [a, b] : fig.bands) {
    if (a >= fig.series.size() || b >= fig.series.size()) continue;
    const auto& lo = fig.series[a];
    const auto& hi = fig.series[b];
    os << "<polygon fill=\"" << lo.color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
    for (std::size_t j = 0; j < lo.x.size(); ++j)
      if (ok(lo.x[j], lo.y[j])) os << ax.map(lo.x[j]) << ',' << ay.map(lo.y[j]) << ' ';
    for (std::size_t j = hi.x.size(); j-- > 0;)
      if (ok(hi.x[j], hi.y[j])) os << ax.map(hi.x[j]) << ',' << ay.map(hi.y[j]) << ' ';
    os << "\"/>\n";
  }

  double ly = T + 10;
  for (std::size_t si = 0; si < fig.series.size(); ++si) {
    const auto& s = fig.series[si];
    const bool in_band = std::any_of(fig.bands.begin(), fig.bands.end(), [&](const auto& b) {
      return b.first == si || b.second == si;
    });
    if (in_band) continue;
    if (s.markers) {
      for (std::size_t j = 0; j < s.x.size(); ++j) {
        if (!ok(s.x[j], s.y[j])) continue;
        const double px = ax.map(s.x[j]);
        const double py = ay.map(s.y[j]);
        if (j < s.err.size() && s.err[j] > 0.0) {
          const double lo = fig.log_y ? std::max(s.y[j] - s.err[j], s.y[j] * 1e-3) : s.y[j] - s.err[j];
          os << "<line x1=\"" << px << "\" y1=\"" << ay.map(lo) << "\" x2=\"" << px << "\" y2=\""
             << ay.map(s.y[j] + s.err[j]) << "\" stroke=\"" << s.color << "\"/>\n";
        }
        os << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"3\" fill=\"" << s.color
           << "\"/>\n";
      }
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\""
         << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
      for (std::size_t j = 0; j < s.x.size(); ++j)
        if (ok(s.x[j], s.y[j])) os << ax.map(s.x[j]) << ',' << ay.map(s.y[j]) << ' ';
      os << "\"/>\n";
    }
    os << "<rect x=\"" << W - R + 12 << "\" y=\"" << ly - 8 << "\" width=\"12\" height=\"10\" fill=\""
       << s.color << "\"/>\n<text x=\"" << W - R + 30 << "\" y=\"" << ly << "\">"
       << detail::esc(s.label) << "</text>\n";
    ly += 18;
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Figures per experiment

namespace detail {

/// Series of `quantity` against parameter `x`, restricted to rows matching `where`.
inline Series series_of(const DataSet& ds, const std::string& quantity, const std::string& x,
                        const Params& where = {}) {
  Series s;
  s.label = quantity;
  for (const auto* r : ds.select(quantity)) {
    bool match = true;
    for (const auto& [k, v] : where) {
      auto p = r->param(k);
      if (!p || *p != v) match = false;
    }
    auto px = r->param(x);
    if (!match || !px) continue;
    s.x.push_back(*px);
    s.y.push_back(r->value);
    s.err.push_back(r->std_error);
  }
  return s;
}

inline Series styled(Series s, std::string label, std::string color, bool markers,
                     bool dashed = false) {
  s.label = std::move(label);
  s.color = std::move(color);
  s.markers = markers;
  s.dashed = dashed;
  return s;
}

inline std::vector<double> distinct(const DataSet& ds, const std::string& quantity,
                                    const std::string& param) {
  std::vector<double> out;
  for (const auto* r : ds.select(quantity))
    if (auto v = r->param(param); v && std::find(out.begin(), out.end(), *v) == out.end())
      out.push_back(*v);
  return out;
}

inline const char* palette(std::size_t k) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return colors[k % 8];
}

}  // namespace detail

/// (file name, figure) pairs for a dataset, chosen by its experiment kind.
inline std::vector<std::pair<std::string, Figure>> figures_for(const DataSet& ds) {
  using detail::series_of;
  using detail::styled;
  std::vector<std::pair<std::string, Figure>> out;
  const std::string& kind = ds.provenance.experiment;

  if (kind == "phase-diagram") {
    Figure f{"Phase diagram", "mu", "variance (thermal units)", false, true, {}, {}};
    f.series.push_back(styled(series_of(ds, "squeezed_analytic", "mu"), "squeezed (model)", "#1f77b4", false));
    f.series.push_back(styled(series_of(ds, "antisqueezed_analytic", "mu"), "antisqueezed (model)", "#d62728", false));
    f.series.push_back(styled(series_of(ds, "squeezed_steady", "mu"), "squeezed, tau_m = inf", "#1f77b4", false, true));
    f.series.push_back(styled(series_of(ds, "squeezed_sim", "mu"), "squeezed (sim)", "#1f77b4", true));
    f.series.push_back(styled(series_of(ds, "antisqueezed_sim", "mu"), "antisqueezed (sim)", "#d62728", true));
    out.emplace_back("fig_phase_diagram.svg", std::move(f));
  } else if (kind == "transient-squeeze") {
    for (double mu : detail::distinct(ds, "var_squeezed_sim", "mu")) {
      const Params w{{"mu", mu}};
      Figure f{"Transient two-mode squeezing, mu = " + detail::num(mu), "gamma t", "variance (thermal units)",
               false, true, {}, {{0, 1}, {2, 3}}};
      f.series.push_back(styled(series_of(ds, "var_squeezed_band_lo", "gamma_t", w), "", "#1f77b4", false));
      f.series.push_back(styled(series_of(ds, "var_squeezed_band_hi", "gamma_t", w), "", "#1f77b4", false));
      f.series.push_back(styled(series_of(ds, "var_antisqueezed_band_lo", "gamma_t", w), "", "#d62728", false));
      f.series.push_back(styled(series_of(ds, "var_antisqueezed_band_hi", "gamma_t", w), "", "#d62728", false));
      f.series.push_back(styled(series_of(ds, "var_squeezed_analytic", "gamma_t", w), "X_d- (model)", "#1f77b4", false));
      f.series.push_back(styled(series_of(ds, "var_antisqueezed_analytic", "gamma_t", w), "X_d+ (model)", "#d62728", false));
      f.series.push_back(styled(series_of(ds, "var_squeezed_sim", "gamma_t", w), "X_d- (sim)", "#1f77b4", true));
      f.series.push_back(styled(series_of(ds, "var_antisqueezed_sim", "gamma_t", w), "X_d+ (sim)", "#d62728", true));
      out.emplace_back("fig_transient_mu" + detail::num(mu) + ".svg", std::move(f));
    }
  } else if (kind == "heisenberg-scaling") {
    Figure f{"Phase sensitivity", "N_s", "delta phi (rad)", true, true, {}, {}};
    std::size_t c = 0;
    for (double k : detail::distinct(ds, "delta_phi_analytic", "k")) {
      const Params w{{"k", k}};
      const std::string tag = " k=" + detail::num(k);
      f.series.push_back(styled(series_of(ds, "delta_phi_analytic", "n_signal", w), "SU(1,1) model" + tag, detail::palette(c), false));
      f.series.push_back(styled(series_of(ds, "delta_phi_damped", "n_signal", w), "damped model" + tag, detail::palette(c), false, true));
      f.series.push_back(styled(series_of(ds, "delta_phi_sim", "n_signal", w), "SU(1,1) sim" + tag, detail::palette(c), true));
      f.series.push_back(styled(series_of(ds, "delta_phi_sql", "n_signal", w), "SQL" + tag, "#7f7f7f", false, true));
      f.series.push_back(styled(series_of(ds, "delta_phi_sql_sim", "n_signal", w), "SQL sim" + tag, "#7f7f7f", true));
      ++c;
    }
    out.emplace_back("fig_heisenberg.svg", std::move(f));
    if (!ds.select("alpha_inset_damped").empty()) {
      Figure g{"Scaling exponent vs PA duration", "gamma t_PA (window centre)", "alpha", false, false, {}, {}};
      Series dm = styled(Series{}, "damped model", "#1f77b4", false);
      Series sm = styled(Series{}, "sim", "#d62728", true);
      for (const auto* r : ds.select("alpha_inset_damped")) {
        dm.x.push_back(0.5 * (*r->param("gamma_t_lo") + *r->param("gamma_t_hi")));
        dm.y.push_back(r->value);
      }
      for (const auto* r : ds.select("alpha_inset_sim")) {
        sm.x.push_back(0.5 * (*r->param("gamma_t_lo") + *r->param("gamma_t_hi")));
        sm.y.push_back(r->value);
        sm.err.push_back(r->std_error);
      }
      g.series = {dm, sm};
      out.emplace_back("fig_heisenberg_inset.svg", std::move(g));
    }
  } else if (kind == "pump-depletion") {
    Figure f{"Pump depletion", "seed amplitude", "eta", true, true, {}, {}};
    std::size_t c = 0;
    for (double mu0 : detail::distinct(ds, "eta_predicted", "mu0")) {
      const Params w{{"mu0", mu0}};
      const std::string tag = " mu0=" + detail::num(mu0);
      f.series.push_back(styled(series_of(ds, "eta_predicted", "seed", w), "predicted" + tag, detail::palette(c), false));
      f.series.push_back(styled(series_of(ds, "eta_asymptote", "seed", w), "asymptote" + tag, detail::palette(c), false, true));
      f.series.push_back(styled(series_of(ds, "eta_sim", "seed", w), "simulated" + tag, detail::palette(c), true));
      ++c;
    }
    out.emplace_back("fig_pump_depletion.svg", std::move(f));
    Figure g{"Squeezing with pump depletion", "gamma t", "X_d- variance (thermal units)", false, true, {}, {}};
    const auto seeds = detail::distinct(ds, "var_squeezed_depleted_sim", "seed");
    for (std::size_t k = 0; k < seeds.size(); ++k)
      g.series.push_back(styled(series_of(ds, "var_squeezed_depleted_sim", "gamma_t", {{"seed", seeds[k]}}),
                                "seed " + detail::num(seeds[k]), detail::palette(k), true));
    if (!seeds.empty())
      g.series.push_back(styled(series_of(ds, "var_squeezed_undepleted", "gamma_t", {{"seed", seeds[0]}}),
                                "no depletion", "black", false, true));
    out.emplace_back("fig_depletion_squeezing.svg", std::move(g));
  } else if (kind == "growth-law") {
    Figure f{"Self-oscillation amplitude", "mu - 1", "amplitude", true, true, {}, {}};
    f.series.push_back(styled(series_of(ds, "amplitude_analytic", "mu_minus_1"), "sqrt(mu - 1)", "#1f77b4", false));
    f.series.push_back(styled(series_of(ds, "amplitude_sim", "mu_minus_1"), "simulated", "#d62728", true));
    out.emplace_back("fig_growth_amplitude.svg", std::move(f));
    Figure g{"Exponential growth rate", "mu", "rate (1/s)", false, false, {}, {}};
    g.series.push_back(styled(series_of(ds, "growth_rate_analytic", "mu"), "gamma (mu - 1)/2", "#1f77b4", false));
    g.series.push_back(styled(series_of(ds, "growth_rate_sim", "mu"), "simulated", "#d62728", true));
    out.emplace_back("fig_growth_rate.svg", std::move(g));
  }
  return out;
}

}  // namespace su11
