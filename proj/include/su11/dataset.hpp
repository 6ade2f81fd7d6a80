#pragma once

// Tidy result tables: each row is (parameters..., quantity, value, std_error, n).
// Analytic rows carry std_error 0 and n 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "su11/errors.hpp"

#ifndef SU11_VERSION
#define SU11_VERSION "0.1.0"
#endif

namespace su11 {

inline constexpr const char* kCodeVersion = "su11 " SU11_VERSION;

using Params = std::vector<std::pair<std::string, double>>;

struct DataRow {
  Params params;
  std::string quantity;
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;

  std::optional<double> param(const std::string& name) const {
    for (const auto& [k, v] : params)
      if (k == name) return v;
    return std::nullopt;
  }
};

struct Provenance {
  std::string experiment;
  std::uint64_t config_hash = 0;  ///< FNV-1a of the canonical config text
  std::uint64_t base_seed = 0;
  std::string code_version = kCodeVersion;
  std::string config_text;
  std::vector<std::uint64_t> aborted_seeds;  ///< seeds of runs that diverged, for replay
};

class DataSet {
 public:
  Provenance provenance;

  /// Appends a row. Non-finite values are refused so that a NaN never
  /// reaches an output file unnoticed.
  void add(Params params, std::string quantity, double value, double std_error = 0.0,
           std::size_t n = 0) {
    if (!std::isfinite(value) || !std::isfinite(std_error)) {
      std::ostringstream os;
      os << "DataSet: non-finite " << quantity << " (value " << value << ", std_error "
         << std_error << ")";
      for (const auto& [k, v] : params) os << ' ' << k << '=' << v;
      throw std::runtime_error(os.str());
    }
    rows_.push_back({std::move(params), std::move(quantity), value, std_error, n});
  }

  const std::vector<DataRow>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }

  std::vector<const DataRow*> select(const std::string& quantity) const {
    std::vector<const DataRow*> out;
    for (const auto& r : rows_)
      if (r.quantity == quantity) out.push_back(&r);
    return out;
  }

  /// First row with this quantity whose params include every `match` pair.
  const DataRow* find(const std::string& quantity, const Params& match = {}) const {
    for (const auto& r : rows_) {
      if (r.quantity != quantity) continue;
      bool ok = true;
      for (const auto& [k, v] : match) {
        auto p = r.param(k);
        if (!p || *p != v) ok = false;
      }
      if (ok) return &r;
    }
    return nullptr;
  }

  /// Union of parameter names in first-seen order.
  std::vector<std::string> param_names() const {
    std::vector<std::string> names;
    for (const auto& r : rows_)
      for (const auto& [k, v] : r.params)
        if (std::find(names.begin(), names.end(), k) == names.end()) names.push_back(k);
    return names;
  }

  /// CSV with one column per parameter name; absent parameters are empty cells.
  void write_csv(std::ostream& os) const {
    const auto names = param_names();
    for (const auto& n : names) os << n << ',';
    os << "quantity,value,std_error,n\n";
    os.precision(12);
    for (const auto& r : rows_) {
      for (const auto& n : names) {
        if (auto v = r.param(n)) os << *v;
        os << ',';
      }
      os << r.quantity << ',' << r.value << ',' << r.std_error << ',' << r.n << '\n';
    }
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["provenance"] = {{"experiment", provenance.experiment},
                       {"config_hash", hex(provenance.config_hash)},
                       {"base_seed", provenance.base_seed},
                       {"code_version", provenance.code_version},
                       {"aborted_seeds", provenance.aborted_seeds},
                       {"config", provenance.config_text}};
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : rows_) {
      nlohmann::ordered_json params = nlohmann::ordered_json::object();
      for (const auto& [k, v] : r.params) params[k] = v;
      rows.push_back({{"params", params},
                      {"quantity", r.quantity},
                      {"value", r.value},
                      {"std_error", r.std_error},
                      {"n", r.n}});
    }
    j["rows"] = std::move(rows);
    return j;
  }

  void write_json(std::ostream& os) const { os << to_json().dump(2) << '\n'; }

  static DataSet from_json(const nlohmann::ordered_json& j) {
    DataSet ds;
    try {
      const auto& p = j.at("provenance");
      ds.provenance.experiment = p.at("experiment").get<std::string>();
      ds.provenance.config_hash = std::stoull(p.at("config_hash").get<std::string>(), nullptr, 16);
      ds.provenance.base_seed = p.at("base_seed").get<std::uint64_t>();
      ds.provenance.code_version = p.at("code_version").get<std::string>();
      ds.provenance.aborted_seeds =
          p.value("aborted_seeds", std::vector<std::uint64_t>{});
      ds.provenance.config_text = p.value("config", std::string{});
      for (const auto& r : j.at("rows")) {
        Params params;
        for (const auto& [k, v] : r.at("params").items()) params.emplace_back(k, v.get<double>());
        ds.add(std::move(params), r.at("quantity").get<std::string>(), r.at("value").get<double>(),
               r.at("std_error").get<double>(), r.at("n").get<std::size_t>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("dataset.json: ") + e.what());
    }
    return ds;
  }

  static DataSet load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is.good()) throw ValidationError("cannot open dataset '" + path + "'");
    nlohmann::ordered_json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("dataset '" + path + "': " + e.what());
    }
    return from_json(j);
  }

  static std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
  }

 private:
  std::vector<DataRow> rows_;
};

}  // namespace su11
