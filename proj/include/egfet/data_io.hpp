#pragma once

// Sweep CSV files and JSON reports.
//
// Sweep files are plain CSV preceded by "# key=value" metadata lines:
//
//   # kind=gate_sweep
//   # v_ds=0.4
//   # label=DI water
//   # units=V,A
//   v_gs,i_ds
//   0,0
//   ...
//
// Drain sweeps use kind=drain_sweep and either one file per gate voltage
// ("# v_gs=2.5", columns v_ds,i_ds) or a long-format file with columns
// v_gs,v_ds,i_ds. Values are converted to SI on read; everything written is SI
// with 17 significant digits.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "egfet/errors.hpp"
#include "egfet/extraction.hpp"
#include "egfet/sweep.hpp"
#include "egfet/units.hpp"

namespace egfet::io {

namespace fs = std::filesystem;

/// A value read from disk plus the non-fatal problems found on the way.
template <class T>
struct Loaded {
  T value;
  std::vector<std::string> warnings;
};

enum class SweepKind { GateSweep, DrainSweep };

struct SweepFileHeader {
  SweepKind kind = SweepKind::GateSweep;
  std::optional<double> fixed_bias;  // v_ds for gate sweeps, v_gs for per-gate drain files
  std::string label;
  std::vector<std::string> units;
  std::map<std::string, std::string> extra;
};

// ---------------------------------------------------------------------------
// File helpers

/// Write-then-rename so readers never observe a partial file.
inline void write_file_atomic(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), Errc::IoError, "cannot open " + tmp.string() + " for writing");
    out << body;
    out.flush();
    require(static_cast<bool>(out), Errc::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, Errc::IoError, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline std::string trim(std::string s) {
  const auto issp = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && issp(s.back())) s.pop_back();
  std::size_t k = 0;
  while (k < s.size() && issp(s[k])) ++k;
  return s.substr(k);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

/// Parsed CSV body: header metadata, column names and raw rows with line numbers.
struct RawTable {
  SweepFileHeader header;
  std::vector<std::string> columns;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

inline RawTable parse_table(const std::string& text, const std::string& where) {
  RawTable t;
  std::optional<SweepKind> kind;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      if (!t.columns.empty()) continue;
      const std::string body = trim(s.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(body.substr(0, eq));
      const std::string value = trim(body.substr(eq + 1));
      if (key == "kind") {
        if (value == "gate_sweep")
          kind = SweepKind::GateSweep;
        else if (value == "drain_sweep")
          kind = SweepKind::DrainSweep;
        else
          fail(Errc::ParseError, where + ":" + std::to_string(lineno) + ": unknown kind '" + value + "'");
      } else if (key == "v_ds" || key == "v_gs") {
        const auto v = units::parse_double(value);
        require(v && std::isfinite(*v), Errc::ParseError,
                where + ":" + std::to_string(lineno) + ": bad value for " + key);
        t.header.fixed_bias = *v;
        t.header.extra[key] = value;
      } else if (key == "label") {
        t.header.label = value;
      } else if (key == "units") {
        t.header.units = split(value, ',');
      } else {
        t.header.extra[key] = value;
      }
      continue;
    }
    if (t.columns.empty()) {
      t.columns = split(s, ',');
      continue;
    }
    t.rows.emplace_back(lineno, split(s, ','));
  }
  require(kind.has_value(), Errc::MissingMetadata, where + ": missing '# kind=' metadata");
  require(!t.columns.empty(), Errc::ParseError, where + ": missing column header row");
  t.header.kind = *kind;
  return t;
}

inline std::vector<int> column_exponents(const RawTable& t, const std::vector<units::Quantity>& q,
                                         const std::string& where) {
  std::vector<std::string> names = t.header.units;
  if (names.empty())
    for (auto quantity : q) names.push_back(quantity == units::Quantity::Voltage ? "V" : "A");
  require(names.size() == q.size(), Errc::ParseError,
          where + ": units list has " + std::to_string(names.size()) + " entries, expected " +
              std::to_string(q.size()));
  std::vector<int> exps;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const auto e = units::decimal_exponent(q[k], names[k]);
    require(e.has_value(), Errc::ParseError, where + ": unsupported unit '" + names[k] + "'");
    exps.push_back(*e);
  }
  return exps;
}

inline void expect_columns(const RawTable& t, const std::vector<std::string>& want, const std::string& where) {
  std::string joined;
  for (const auto& w : want) joined += (joined.empty() ? "" : ",") + w;
  require(t.columns == want, Errc::ParseError, where + ": expected header row '" + joined + "'");
}

/// Converts rows to numbers in SI. Rows whose current (last column) is not a
/// finite non-negative number are dropped and counted.
inline std::vector<std::vector<double>> numeric_rows(const RawTable& t, const std::vector<int>& exps,
                                                     const std::string& where, std::vector<std::string>& warnings) {
  std::vector<std::vector<double>> out;
  std::size_t dropped = 0;
  for (const auto& [lineno, cells] : t.rows) {
    require(cells.size() == exps.size(), Errc::ParseError,
            where + ":" + std::to_string(lineno) + ": expected " + std::to_string(exps.size()) + " columns, found " +
                std::to_string(cells.size()));
    std::vector<double> row;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto v = units::parse_scaled(cells[k], exps[k]);
      require(v.has_value(), Errc::ParseError,
              where + ":" + std::to_string(lineno) + ": cannot parse '" + cells[k] + "'");
      row.push_back(*v);
    }
    for (std::size_t k = 0; k + 1 < row.size(); ++k)
      require(std::isfinite(row[k]), Errc::ParseError,
              where + ":" + std::to_string(lineno) + ": non-finite voltage");
    if (!std::isfinite(row.back()) || row.back() < 0.0) {
      ++dropped;
      continue;
    }
    out.push_back(std::move(row));
  }
  if (dropped > 0)
    warnings.push_back(where + ": dropped " + std::to_string(dropped) + " row(s) with non-finite or negative current");
  return out;
}

inline void check_increasing(const std::vector<IvPoint>& pts, const std::string& where) {
  for (std::size_t k = 1; k < pts.size(); ++k)
    require(pts[k].v > pts[k - 1].v, Errc::NonMonotoneGrid,
            where + ": voltage grid not strictly increasing at row " + std::to_string(k + 1));
}

inline std::string csv_line(std::initializer_list<double> values) {
  std::string s;
  for (double v : values) {
    if (!s.empty()) s += ',';
    s += units::format17(v);
  }
  return s + '\n';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Gate sweeps

inline Loaded<GateSweep> parse_gate_sweep(const std::string& text, const std::string& where = "<input>") {
  const auto t = detail::parse_table(text, where);
  require(t.header.kind == SweepKind::GateSweep, Errc::ParseError, where + ": kind is not gate_sweep");
  require(t.header.extra.count("v_ds") == 1, Errc::MissingMetadata, where + ": missing '# v_ds=' metadata");
  detail::expect_columns(t, {"v_gs", "i_ds"}, where);
  Loaded<GateSweep> out;
  const auto exps = detail::column_exponents(t, {units::Quantity::Voltage, units::Quantity::Current}, where);
  out.value.v_ds = *t.header.fixed_bias;
  out.value.label = t.header.label;
  for (const auto& row : detail::numeric_rows(t, exps, where, out.warnings))
    out.value.points.push_back({row[0], row[1]});
  detail::check_increasing(out.value.points, where);
  return out;
}

inline Loaded<GateSweep> read_gate_sweep(const fs::path& path) {
  return parse_gate_sweep(read_file(path), path.string());
}

inline std::string format_gate_sweep(const GateSweep& sweep) {
  std::string s = "# kind=gate_sweep\n# v_ds=" + units::format17(sweep.v_ds) + "\n# label=" + sweep.label +
                  "\n# units=V,A\n";
  for (const auto& d : sweep.diagnostics) s += "# note=" + d + "\n";
  s += "v_gs,i_ds\n";
  for (const auto& p : sweep.points) s += detail::csv_line({p.v, p.i});
  return s;
}

inline void write_gate_sweep(const GateSweep& sweep, const fs::path& path) {
  write_file_atomic(path, format_gate_sweep(sweep));
}

// ---------------------------------------------------------------------------
// Drain families

namespace detail {

inline void finish_family(DrainSweepFamily& family, const std::string& where) {
  std::sort(family.sweeps.begin(), family.sweeps.end(),
            [](const DrainSweep& a, const DrainSweep& b) { return a.v_gs < b.v_gs; });
  for (std::size_t k = 1; k < family.sweeps.size(); ++k)
    require(family.sweeps[k].v_gs != family.sweeps[k - 1].v_gs, Errc::InconsistentFamily,
            where + ": duplicate gate voltage " + units::format17(family.sweeps[k].v_gs));
  for (auto& s : family.sweeps) {
    std::sort(s.points.begin(), s.points.end(), [](const IvPoint& a, const IvPoint& b) { return a.v < b.v; });
    check_increasing(s.points, where);
  }
}

}  // namespace detail

/// One drain file: long format (v_gs,v_ds,i_ds) or a single gate voltage.
inline Loaded<DrainSweepFamily> parse_drain_family(const std::string& text, const std::string& where = "<input>") {
  const auto t = detail::parse_table(text, where);
  require(t.header.kind == SweepKind::DrainSweep, Errc::ParseError, where + ": kind is not drain_sweep");
  Loaded<DrainSweepFamily> out;
  out.value.label = t.header.label;
  if (t.columns.size() == 3) {
    detail::expect_columns(t, {"v_gs", "v_ds", "i_ds"}, where);
    const auto exps = detail::column_exponents(
        t, {units::Quantity::Voltage, units::Quantity::Voltage, units::Quantity::Current}, where);
    std::vector<double> seen;
    for (const auto& row : detail::numeric_rows(t, exps, where, out.warnings)) {
      if (out.value.sweeps.empty() || out.value.sweeps.back().v_gs != row[0]) {
        require(std::find(seen.begin(), seen.end(), row[0]) == seen.end(), Errc::InconsistentFamily,
                where + ": gate voltage " + units::format17(row[0]) + " appears in two separate blocks");
        seen.push_back(row[0]);
        out.value.sweeps.push_back({row[0], {}});
      }
      out.value.sweeps.back().points.push_back({row[1], row[2]});
    }
  } else {
    detail::expect_columns(t, {"v_ds", "i_ds"}, where);
    require(t.header.extra.count("v_gs") == 1, Errc::MissingMetadata, where + ": missing '# v_gs=' metadata");
    const auto exps = detail::column_exponents(t, {units::Quantity::Voltage, units::Quantity::Current}, where);
    DrainSweep sweep{*t.header.fixed_bias, {}};
    for (const auto& row : detail::numeric_rows(t, exps, where, out.warnings)) sweep.points.push_back({row[0], row[1]});
    out.value.sweeps.push_back(std::move(sweep));
  }
  detail::finish_family(out.value, where);
  return out;
}

/// A long-format file, a per-gate file, or a directory of per-gate files.
inline Loaded<DrainSweepFamily> read_drain_family(const fs::path& path) {
  if (!fs::is_directory(path)) return parse_drain_family(read_file(path), path.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  require(!files.empty(), Errc::IoError, path.string() + ": no .csv files");
  Loaded<DrainSweepFamily> out;
  for (const auto& f : files) {
    auto part = parse_drain_family(read_file(f), f.string());
    if (out.value.label.empty()) out.value.label = part.value.label;
    for (auto& s : part.value.sweeps) out.value.sweeps.push_back(std::move(s));
    out.warnings.insert(out.warnings.end(), part.warnings.begin(), part.warnings.end());
  }
  detail::finish_family(out.value, path.string());
  return out;
}

inline std::string format_drain_family(const DrainSweepFamily& family) {
  std::string s = "# kind=drain_sweep\n# label=" + family.label + "\n# units=V,V,A\n";
  for (const auto& d : family.diagnostics) s += "# note=" + d + "\n";
  s += "v_gs,v_ds,i_ds\n";
  for (const auto& sweep : family.sweeps)
    for (const auto& p : sweep.points) s += detail::csv_line({sweep.v_gs, p.v, p.i});
  return s;
}

inline void write_drain_family(const DrainSweepFamily& family, const fs::path& path) {
  write_file_atomic(path, format_drain_family(family));
}

inline std::string format_drain_sweep(const DrainSweep& sweep, const std::string& label) {
  std::string s = "# kind=drain_sweep\n# v_gs=" + units::format17(sweep.v_gs) + "\n# label=" + label +
                  "\n# units=V,A\nv_ds,i_ds\n";
  for (const auto& p : sweep.points) s += detail::csv_line({p.v, p.i});
  return s;
}

// ---------------------------------------------------------------------------
// JSON

using Json = nlohmann::ordered_json;

/// Pretty JSON with every floating-point number at 17 significant digits and
/// non-finite numbers as null. Arrays of scalars stay on one line.
inline std::string dump_json(const Json& j, int indent = 0) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string inner(static_cast<std::size_t>(indent + 2), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) return "{}";
      std::string s = "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) s += ",\n";
        first = false;
        s += inner + Json(it.key()).dump() + ": " + dump_json(it.value(), indent + 2);
      }
      return s + "\n" + pad + "}";
    }
    case Json::value_t::array: {
      if (j.empty()) return "[]";
      const bool flat = std::none_of(j.begin(), j.end(), [](const Json& e) { return e.is_structured(); });
      std::string s = flat ? "[" : "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) s += flat ? ", " : ",\n";
        first = false;
        s += flat ? dump_json(e, indent + 2) : inner + dump_json(e, indent + 2);
      }
      return s + (flat ? "]" : "\n" + pad + "]");
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      return std::isfinite(v) ? units::format17(v) : "null";
    }
    default:
      return j.dump();
  }
}

namespace detail {

inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double number_or_nan(const Json& j) {
  return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

inline Json curve_json(const std::optional<SampledCurve>& c, double scale, const char* unit) {
  if (!c) return nullptr;
  Json out;
  Json xs = Json::array();
  Json ys = Json::array();
  for (std::size_t k = 0; k < c->size(); ++k) {
    xs.push_back(c->x(k));
    ys.push_back(c->y(k) * scale);
  }
  out["v_gs"] = std::move(xs);
  out["value"] = std::move(ys);
  if (unit) out["unit"] = unit;
  return out;
}

inline std::optional<SampledCurve> curve_from_json(const Json& j, double scale) {
  if (j.is_null()) return std::nullopt;
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& v : j.at("v_gs")) x.push_back(v.get<double>());
  for (const auto& v : j.at("value")) y.push_back(v.get<double>() / scale);
  return SampledCurve(std::move(x), std::move(y));
}

}  // namespace detail

inline Json report_to_json(const ExtractionReport& r) {
  Json j;
  j["method"] = std::string(method_name(r.method));
  j["v_t"] = {{"value", detail::number(r.v_t.value)}, {"sigma", detail::number(r.v_t.sigma)}, {"unit", "V"}};
  if (r.mu_0)
    j["mu_0"] = {{"value", detail::number(units::mobility_to_cm2(r.mu_0->value))},
                 {"sigma", detail::number(units::mobility_to_cm2(r.mu_0->sigma))},
                 {"unit", "cm2/Vs"}};
  else
    j["mu_0"] = nullptr;
  if (r.theta_range)
    j["theta_range"] = {{"min", r.theta_range->min}, {"max", r.theta_range->max}, {"unit", "1/V"}};
  else
    j["theta_range"] = nullptr;
  j["r_sd"] = {{"value", r.r_sd_used}, {"unit", "ohm"}};
  if (r.fit) {
    const auto& f = *r.fit;
    Json fit;
    fit["slope"] = detail::number(f.slope);
    fit["intercept"] = detail::number(f.intercept);
    fit["r_squared"] = detail::number(f.r_squared);
    fit["window"] = Json::array({f.window.begin, f.window.end - 1});
    fit["x_intercept"] = detail::number(f.x_intercept);
    fit["sigma_slope"] = detail::number(f.sigma_slope);
    fit["sigma_intercept"] = detail::number(f.sigma_intercept);
    fit["sigma_x_intercept"] = detail::number(f.sigma_x_intercept);
    fit["cov_slope_intercept"] = detail::number(f.cov_slope_intercept);
    if (r.linearized && f.window.end <= r.linearized->size())
      fit["v_gs_window"] = Json::array({r.linearized->x(f.window.begin), r.linearized->x(f.window.end - 1)});
    j["fit"] = std::move(fit);
  } else {
    j["fit"] = nullptr;
  }
  j["curves"] = {{"linearized", detail::curve_json(r.linearized, 1.0, nullptr)},
                 {"theta", detail::curve_json(r.theta_curve, 1.0, "1/V")},
                 {"mu_eff", detail::curve_json(r.mu_eff_curve, units::kCm2PerM2, "cm2/Vs")}};
  j["diagnostics"] = r.diagnostics;
  j["label"] = r.label;
  j["v_ds"] = r.v_ds;
  j["v_t_alt"] = r.v_t_alt ? detail::number(*r.v_t_alt) : Json(nullptr);
  return j;
}

inline ExtractionReport report_from_json(const Json& j) {
  try {
    ExtractionReport r;
    const auto m = parse_method(j.at("method").get<std::string>());
    require(m.has_value(), Errc::ParseError, "unknown method '" + j.at("method").get<std::string>() + "'");
    r.method = *m;
    r.v_t = {detail::number_or_nan(j.at("v_t").at("value")), detail::number_or_nan(j.at("v_t").at("sigma"))};
    if (!j.at("mu_0").is_null())
      r.mu_0 = Estimate{units::mobility_from_cm2(detail::number_or_nan(j["mu_0"].at("value"))),
                        units::mobility_from_cm2(detail::number_or_nan(j["mu_0"].at("sigma")))};
    if (!j.at("theta_range").is_null())
      r.theta_range = ThetaRange{j["theta_range"].at("min").get<double>(), j["theta_range"].at("max").get<double>()};
    r.r_sd_used = j.at("r_sd").at("value").get<double>();
    if (!j.at("fit").is_null()) {
      const auto& f = j["fit"];
      LineFit fit;
      fit.slope = detail::number_or_nan(f.at("slope"));
      fit.intercept = detail::number_or_nan(f.at("intercept"));
      fit.r_squared = detail::number_or_nan(f.at("r_squared"));
      fit.window = {f.at("window").at(0).get<std::size_t>(), f.at("window").at(1).get<std::size_t>() + 1};
      fit.x_intercept = f.contains("x_intercept") ? detail::number_or_nan(f["x_intercept"]) : -fit.intercept / fit.slope;
      if (f.contains("sigma_slope")) fit.sigma_slope = detail::number_or_nan(f["sigma_slope"]);
      if (f.contains("sigma_intercept")) fit.sigma_intercept = detail::number_or_nan(f["sigma_intercept"]);
      if (f.contains("sigma_x_intercept")) fit.sigma_x_intercept = detail::number_or_nan(f["sigma_x_intercept"]);
      if (f.contains("cov_slope_intercept")) fit.cov_slope_intercept = detail::number_or_nan(f["cov_slope_intercept"]);
      r.fit = fit;
    }
    if (j.contains("curves")) {
      const auto& c = j["curves"];
      if (c.contains("linearized")) r.linearized = detail::curve_from_json(c["linearized"], 1.0);
      if (c.contains("theta")) r.theta_curve = detail::curve_from_json(c["theta"], 1.0);
      if (c.contains("mu_eff")) r.mu_eff_curve = detail::curve_from_json(c["mu_eff"], units::kCm2PerM2);
    }
    if (j.contains("diagnostics")) r.diagnostics = j["diagnostics"].get<std::vector<std::string>>();
    if (j.contains("label")) r.label = j["label"].get<std::string>();
    if (j.contains("v_ds")) r.v_ds = j["v_ds"].get<double>();
    if (j.contains("v_t_alt") && j["v_t_alt"].is_number()) r.v_t_alt = j["v_t_alt"].get<double>();
    return r;
  } catch (const Json::exception& e) {
    fail(Errc::ParseError, std::string("malformed report JSON: ") + e.what());
  }
}

inline std::string format_report(const ExtractionReport& r) { return dump_json(report_to_json(r)) + "\n"; }

inline void write_report(const ExtractionReport& r, const fs::path& path) { write_file_atomic(path, format_report(r)); }

inline ExtractionReport read_report(const fs::path& path) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    fail(Errc::ParseError, path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

inline Json shift_table_to_json(const ShiftTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"label", r.label},
                    {"method", std::string(method_name(r.method))},
                    {"v_t", r.v_t},
                    {"reference_v_t", r.reference_v_t},
                    {"delta_v_t", r.delta_v_t},
                    {"unit", "V"}});
  return {{"reference", t.reference_label}, {"rows", std::move(rows)}, {"diagnostics", t.diagnostics}};
}

}  // namespace egfet::io
