// egfet: synthesize sweeps, extract V_T / mobility / theta / R_sd, compare
// conditions and plot the straight-line fits.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "egfet/egfet.hpp"

namespace fs = std::filesystem;
using namespace egfet;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitErrorBase = 10;  // exit status = 10 + error code index

constexpr const char* kUnitsNote =
    "Units: voltages in V, mobility in cm2/Vs, C_ox in F/cm2, W and L in um, resistance in ohm.\n"
    "Files are written to --out, else $EGFET_OUT_DIR, else the current directory.";

int exit_code(Errc code) { return kExitErrorBase + static_cast<int>(code); }

std::string exit_code_table() {
  std::string s = "Exit status: 0 success, 1 unexpected failure, 2 usage error, otherwise 10 + code:\n";
  for (int k = 0; k <= static_cast<int>(Errc::EmptyPlot); ++k)
    s += "  " + std::to_string(kExitErrorBase + k) + " " + std::string(to_string(static_cast<Errc>(k))) + "\n";
  return s;
}

struct DeviceFlags {
  std::optional<double> width_um;
  std::optional<double> length_um;
  std::optional<double> cox_f_cm2;
  bool reference_device = false;

  void add_to(CLI::App* app) {
    app->add_option("--width", width_um, "Channel width W in um");
    app->add_option("--length", length_um, "Channel length L in um");
    app->add_option("--cox", cox_f_cm2, "Gate oxide capacitance C_ox in F/cm2 (e.g. 57.8e-9)");
    app->add_flag("--reference-device", reference_device, "Use W = 4.5 um, L = 1.5 um, C_ox = 57.8e-9 F/cm2");
  }

  // Reference device with any explicit flag applied on top.
  DeviceSpec with_defaults() const {
    DeviceSpec d = DeviceSpec::reference_egfet();
    if (width_um) d.width = units::um_to_m(*width_um);
    if (length_um) d.length = units::um_to_m(*length_um);
    if (cox_f_cm2) d.c_ox = units::cox_from_f_per_cm2(*cox_f_cm2);
    d.validate();
    return d;
  }

  std::optional<DeviceSpec> resolve() const {
    if (reference_device) return with_defaults();
    const int given = (width_um ? 1 : 0) + (length_um ? 1 : 0) + (cox_f_cm2 ? 1 : 0);
    if (given == 0) return std::nullopt;
    require(given == 3, Errc::InvalidArgument, "device spec needs all of --width, --length and --cox (or --reference-device)");
    return with_defaults();
  }
};

std::vector<double> parse_grid(const std::string& text) {
  const auto parts = io::detail::split(text, ':');
  require(parts.size() == 3, Errc::InvalidArgument, "grid must be start:stop:step, got '" + text + "'");
  std::vector<double> v;
  for (const auto& p : parts) {
    const auto d = units::parse_double(p);
    require(d && std::isfinite(*d), Errc::InvalidArgument, "bad number '" + p + "' in grid");
    v.push_back(*d);
  }
  return linear_grid(v[0], v[1], v[2]);
}

std::pair<double, double> parse_window(const std::string& text) {
  const auto parts = io::detail::split(text, ':');
  require(parts.size() == 2, Errc::InvalidArgument, "window must be lo:hi in V, got '" + text + "'");
  const auto lo = units::parse_double(parts[0]);
  const auto hi = units::parse_double(parts[1]);
  require(lo && hi && *lo < *hi, Errc::InvalidArgument, "bad window '" + text + "'");
  return {*lo, *hi};
}

fs::path default_out_dir() {
  if (const char* env = std::getenv("EGFET_OUT_DIR"); env && *env) return env;
  return ".";
}

std::string fmt(const char* f, double v) {
  if (!std::isfinite(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void print_warnings(const std::vector<std::string>& w) {
  for (const auto& s : w) std::cerr << "warning: " << s << "\n";
}

void print_summary(const std::vector<ExtractionReport>& reports) {
  std::printf("%-8s | %-9s | %-13s | %-17s | %s\n", "method", "V_T (V)", "mu_0 (cm2/Vs)", "theta range (1/V)", "r2");
  for (const auto& r : reports) {
    const std::string mu = r.mu_0 ? fmt("%.1f", units::mobility_to_cm2(r.mu_0->value)) : "-";
    const std::string th =
        r.theta_range ? fmt("%.4f", r.theta_range->min) + " .. " + fmt("%.4f", r.theta_range->max) : "-";
    const std::string r2 = r.fit ? fmt("%.6f", r.fit->r_squared) : "-";
    std::printf("%-8s | %-9s | %-13s | %-17s | %s\n", std::string(method_name(r.method)).c_str(),
                fmt("%.4f", r.v_t.value).c_str(), mu.c_str(), th.c_str(), r2.c_str());
  }
}

// ---------------------------------------------------------------------------
// extraction shared by extract, compare and plot

struct ExtractInputs {
  std::optional<GateSweep> gate;
  std::optional<DrainSweepFamily> family;
  std::optional<DeviceSpec> device;
  std::string rsd = "0";
  std::vector<std::string> methods;
  ExtractionOptions options;
  std::optional<double> gds_slice_vds;
  std::optional<double> vt_hint;
};

struct ExtractOutcome {
  std::vector<ExtractionReport> reports;
  std::vector<std::string> notes;
  std::optional<Errc> first_error;
  double r_sd = 0.0;
};

std::vector<Method> selected_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) {
    if (n == "all") return {Method::PeakGm, Method::IdsOverSqrtGm, Method::InvIds, Method::GdsMethod};
    const auto m = parse_method(n);
    require(m.has_value(), Errc::InvalidArgument, "unknown method '" + n + "'");
    if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
  }
  return out;
}

double gds_vt_estimate(const DrainSweepFamily& family, const DeviceSpec& spec, double v_ds) {
  const auto slices = gds_method_extract(family, spec, 0.0, {});
  return nearest_slice(slices, v_ds).v_t.value;
}

double resolve_rsd(const ExtractInputs& in, std::vector<std::string>& notes) {
  if (in.rsd != "auto") {
    const auto v = units::parse_double(in.rsd);
    require(v && std::isfinite(*v) && *v >= 0.0, Errc::InvalidArgument, "--rsd must be a number >= 0 or 'auto'");
    return *v;
  }
  require(in.family.has_value(), Errc::InvalidArgument, "--rsd auto requires a drain family (--family)");
  double hint = 0.0;
  if (in.vt_hint) {
    hint = *in.vt_hint;
  } else if (in.gate) {
    hint = peak_gm_extract(*in.gate).v_t.value;
    notes.push_back("R_sd auto: V_T hint " + fmt("%.4f", hint) + " V from peak g_m");
  } else {
    const double vds = in.family->sweeps.front().points.back().v;
    hint = gds_vt_estimate(*in.family, in.device.value_or(DeviceSpec::reference_egfet()), vds);
    notes.push_back("R_sd auto: V_T hint " + fmt("%.4f", hint) + " V from the g_ds method");
  }
  const auto est = rsd_output_resistance(*in.family, hint);
  notes.push_back("R_sd auto: output-resistance intercept " + fmt("%.3f", est.r_sd.value) +
                  " ohm (upper bound: includes theta/beta0)");
  return est.r_sd.value;
}

ExtractOutcome run_extraction(const ExtractInputs& in) {
  ExtractOutcome out;
  const auto methods = selected_methods(in.methods);
  const bool needs_device = std::any_of(methods.begin(), methods.end(), [](Method m) { return m != Method::PeakGm; });
  require(!needs_device || in.device.has_value(), Errc::InvalidArgument,
          "mobility-producing methods need a device spec (--width/--length/--cox or --reference-device)");
  out.r_sd = resolve_rsd(in, out.notes);

  const auto record = [&](Errc code, const std::string& what) {
    std::cerr << "error: " << what << "\n";
    if (!out.first_error) out.first_error = code;
  };
  for (Method m : methods) {
    try {
      if (m == Method::GdsMethod) {
        if (!in.family) {
          out.notes.push_back("gds skipped: needs a drain family (--family)");
          continue;
        }
        const auto slices = gds_method_extract(*in.family, *in.device, out.r_sd, in.options);
        const double want = in.gds_slice_vds ? *in.gds_slice_vds
                            : in.gate        ? in.gate->v_ds
                                             : slices.back().v_ds;
        auto r = nearest_slice(slices, want);
        if (r.label.empty()) r.label = in.gate ? in.gate->label : in.family->label;
        out.reports.push_back(std::move(r));
        continue;
      }
      if (!in.gate) {
        out.notes.push_back(std::string(method_name(m)) + " skipped: needs a gate sweep (--gate)");
        continue;
      }
      switch (m) {
        case Method::PeakGm: out.reports.push_back(peak_gm_extract(*in.gate)); break;
        case Method::IdsOverSqrtGm:
          out.reports.push_back(ids_over_sqrt_gm_extract(*in.gate, *in.device, out.r_sd, in.options));
          break;
        case Method::InvIds: out.reports.push_back(inv_ids_extract(*in.gate, *in.device, out.r_sd, in.options)); break;
        case Method::GdsMethod: break;
      }
    } catch (const Error& e) {
      record(e.code(), std::string(method_name(m)) + ": " + e.what());
    }
  }
  for (auto& r : out.reports) r.diagnostics.insert(r.diagnostics.end(), out.notes.begin(), out.notes.end());
  return out;
}

std::vector<plot::Panel> report_panels(const ExtractionReport& r, const GateSweep* gate) {
  std::vector<plot::Panel> panels{plot::linearized_panel(r, gate)};
  for (auto& p : plot::theta_mu_panels(r)) panels.push_back(std::move(p));
  return panels;
}

void write_report_plot(const ExtractionReport& r, const GateSweep* gate, const fs::path& dir) {
  if (r.method == Method::PeakGm && gate == nullptr) return;
  plot::Figure fig;
  fig.panels = report_panels(r, gate);
  plot::emit_plot(fig, dir / (std::string(method_name(r.method)) + ".svg"));
}

void write_iv_plot(const GateSweep& gate, const fs::path& dir) {
  plot::Figure fig;
  fig.panels = plot::iv_panels(gate);
  if (fig.panels.back().series.empty()) fig.panels.pop_back();
  plot::emit_plot(fig, dir / "iv.svg");
}

// ---------------------------------------------------------------------------
// subcommands

struct SimulateArgs {
  double v_t = 1.6;
  double mu0_cm2 = 500.0;
  double theta = 0.12;
  double r_sd = 50.0;
  double v_ds = 0.4;
  std::string grid = "0:4:0.1";
  std::string family_vgs;
  std::string family_vds = "0:0.4:0.05";
  double noise = 0.0;
  std::uint64_t seed = 1;
  std::string model = "implicit";
  std::string label;
  DeviceFlags device;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  const DeviceSpec spec = a.device.with_defaults();
  const ModelParams params{a.v_t, units::mobility_from_cm2(a.mu0_cm2), a.theta, a.r_sd};
  params.validate();
  require(a.noise >= 0.0, Errc::InvalidArgument, "--noise must be >= 0");
  require(a.model == "implicit" || a.model == "simplified", Errc::InvalidArgument,
          "--model must be implicit or simplified");
  const CurrentModel model = a.model == "implicit" ? CurrentModel::Implicit : CurrentModel::Simplified;
  const NoiseSpec noise{a.noise, a.seed};
  const fs::path dir = a.out.empty() ? default_out_dir() : fs::path(a.out);

  std::printf("device: W = %s um, L = %s um, C_ox = %s F/cm2\n", units::format17(units::m_to_um(spec.width)).c_str(),
              units::format17(units::m_to_um(spec.length)).c_str(),
              units::format17(units::cox_to_f_per_cm2(spec.c_ox)).c_str());
  std::printf("params: V_T = %s V, mu_0 = %s cm2/Vs, theta = %s 1/V, R_sd = %s ohm, beta0 = %s A/V2\n",
              units::format17(params.v_t).c_str(), units::format17(a.mu0_cm2).c_str(),
              units::format17(params.theta).c_str(), units::format17(params.r_sd).c_str(),
              units::format17(beta0(spec, params).value()).c_str());
  std::printf("model: %s, noise = %s, seed = %llu\n", a.model.c_str(), units::format17(a.noise).c_str(),
              static_cast<unsigned long long>(a.seed));

  const auto grid = parse_grid(a.grid);
  auto sweep = synth_gate_sweep(spec, params, a.v_ds, grid, noise, model);
  sweep.label = a.label;
  io::write_gate_sweep(sweep, dir / "gate_sweep.csv");
  std::printf("wrote %s (%zu points)\n", (dir / "gate_sweep.csv").string().c_str(), sweep.size());
  print_warnings(sweep.diagnostics);

  if (!a.family_vgs.empty()) {
    const auto vgs = parse_grid(a.family_vgs);
    const auto vds = parse_grid(a.family_vds);
    auto family = synth_drain_sweep_family(spec, params, vgs, vds, NoiseSpec{a.noise, a.seed + 1}, model);
    family.label = a.label;
    io::write_drain_family(family, dir / "drain_family.csv");
    std::printf("wrote %s (%zu gate values x %zu points)\n", (dir / "drain_family.csv").string().c_str(),
                family.size(), vds.size());
    print_warnings(family.diagnostics);
  }
  return 0;
}

struct ExtractArgs {
  std::string gate;
  std::string family;
  DeviceFlags device;
  std::string rsd = "0";
  std::vector<std::string> methods{"all"};
  std::string window;
  std::optional<int> smoothing;
  int min_window = 6;
  std::optional<double> gds_vds;
  std::optional<double> vt_hint;
  std::string label;
  bool plot = false;
  std::string out;
};

ExtractInputs load_inputs(const ExtractArgs& a) {
  ExtractInputs in;
  require(!a.gate.empty() || !a.family.empty(), Errc::InvalidArgument, "give --gate and/or --family");
  if (!a.gate.empty()) {
    auto loaded = io::read_gate_sweep(a.gate);
    print_warnings(loaded.warnings);
    in.gate = std::move(loaded.value);
    if (!a.label.empty()) in.gate->label = a.label;
  }
  if (!a.family.empty()) {
    auto loaded = io::read_drain_family(a.family);
    print_warnings(loaded.warnings);
    in.family = std::move(loaded.value);
    if (!a.label.empty()) in.family->label = a.label;
  }
  in.device = a.device.resolve();
  in.rsd = a.rsd;
  in.methods = a.methods;
  if (!a.window.empty()) in.options.v_gs_window = parse_window(a.window);
  in.options.smoothing_points = a.smoothing;
  in.options.min_window_points = a.min_window;
  in.gds_slice_vds = a.gds_vds;
  in.vt_hint = a.vt_hint;
  return in;
}

int cmd_extract(const ExtractArgs& a) {
  const auto in = load_inputs(a);
  const auto outcome = run_extraction(in);
  const fs::path dir = a.out.empty() ? default_out_dir() : fs::path(a.out);
  for (const auto& r : outcome.reports) {
    io::write_report(r, dir / (std::string(method_name(r.method)) + ".json"));
    if (a.plot) write_report_plot(r, in.gate ? &*in.gate : nullptr, dir);
  }
  if (a.plot && in.gate) write_iv_plot(*in.gate, dir);
  std::printf("R_sd used: %s ohm\n", units::format17(outcome.r_sd).c_str());
  print_summary(outcome.reports);
  for (const auto& n : outcome.notes) std::printf("note: %s\n", n.c_str());
  return outcome.first_error ? exit_code(*outcome.first_error) : 0;
}

struct RsdArgs {
  std::string family;
  std::optional<double> vt_hint;
  std::string gate;
  std::vector<std::string> devices;
  std::string out;
};

int cmd_rsd(const RsdArgs& a) {
  require(!a.family.empty() || !a.devices.empty(), Errc::InvalidArgument,
          "give --family (output resistance) and/or --device-sweep (channel-length intersection)");
  io::Json j;
  if (!a.family.empty()) {
    auto loaded = io::read_drain_family(a.family);
    print_warnings(loaded.warnings);
    const auto& family = loaded.value;
    double hint = 0.0;
    std::string source = "--vt-hint";
    if (a.vt_hint) {
      hint = *a.vt_hint;
    } else if (!a.gate.empty()) {
      hint = peak_gm_extract(io::read_gate_sweep(a.gate).value).v_t.value;
      source = "peak g_m of --gate";
    } else {
      hint = gds_vt_estimate(family, DeviceSpec::reference_egfet(), family.sweeps.front().points.back().v);
      source = "g_ds method";
    }
    const auto est = rsd_output_resistance(family, hint);
    std::printf("output resistance: R_sd <= %s +/- %s ohm (V_T hint %s V from %s); min R_tot = %s ohm\n",
                fmt("%.3f", est.r_sd.value).c_str(), fmt("%.3f", est.r_sd.sigma).c_str(), fmt("%.4f", hint).c_str(),
                source.c_str(), fmt("%.3f", est.min_r_tot).c_str());
    for (const auto& d : est.diagnostics) std::printf("note: %s\n", d.c_str());
    j["output_resistance"] = {{"r_sd", {{"value", est.r_sd.value}, {"sigma", est.r_sd.sigma}, {"unit", "ohm"}}},
                              {"min_r_tot", {{"value", est.min_r_tot}, {"unit", "ohm"}}},
                              {"v_t_hint", {{"value", hint}, {"unit", "V"}}},
                              {"fit",
                               {{"slope", est.fit.slope},
                                {"intercept", est.fit.intercept},
                                {"r_squared", est.fit.r_squared}}},
                              {"diagnostics", est.diagnostics}};
  }
  if (!a.devices.empty()) {
    std::vector<DeviceSweep> devs;
    for (const auto& spec : a.devices) {
      const auto eq = spec.find('=');
      require(eq != std::string::npos, Errc::InvalidArgument, "--device-sweep expects L_um=path, got '" + spec + "'");
      const auto l = units::parse_double(spec.substr(0, eq));
      require(l && *l > 0.0, Errc::InvalidArgument, "bad mask length in '" + spec + "'");
      auto loaded = io::read_gate_sweep(spec.substr(eq + 1));
      print_warnings(loaded.warnings);
      devs.push_back({units::um_to_m(*l), std::move(loaded.value)});
    }
    const auto x = rsd_channel_length_intersection(devs);
    std::printf("channel-length intersection: R_sd = %s ohm, delta_L = %s um (%zu gate values, rms miss %s ohm)\n",
                fmt("%.3f", x.r_sd).c_str(), fmt("%.4f", units::m_to_um(x.delta_l)).c_str(), x.lines.size(),
                fmt("%.3g", x.rms_miss).c_str());
    io::Json lines = io::Json::array();
    for (const auto& ln : x.lines)
      lines.push_back({{"v_gs", ln.v_gs}, {"slope_ohm_per_um", ln.slope / 1e6}, {"intercept_ohm", ln.intercept}});
    j["intersection"] = {{"r_sd", {{"value", x.r_sd}, {"unit", "ohm"}}},
                         {"delta_l", {{"value", units::m_to_um(x.delta_l)}, {"unit", "um"}}},
                         {"rms_miss", {{"value", x.rms_miss}, {"unit", "ohm"}}},
                         {"lines", std::move(lines)}};
  }
  const fs::path dir = a.out.empty() ? default_out_dir() : fs::path(a.out);
  io::write_file_atomic(dir / "rsd.json", io::dump_json(j) + "\n");
  return 0;
}

struct CompareArgs {
  std::vector<std::string> inputs;
  std::string reference;
  DeviceFlags device;
  std::string rsd = "0";
  std::string out;
};

int cmd_compare(const CompareArgs& a) {
  std::vector<ExtractionReport> reports;
  std::optional<Errc> first_error;
  const auto device = a.device.resolve();
  for (const auto& path : a.inputs) {
    if (fs::path(path).extension() == ".json") {
      reports.push_back(io::read_report(path));
      continue;
    }
    // raw gate sweep: run the gate-sweep methods the device spec allows
    ExtractInputs in;
    auto loaded = io::read_gate_sweep(path);
    print_warnings(loaded.warnings);
    in.gate = std::move(loaded.value);
    if (in.gate->label.empty()) in.gate->label = fs::path(path).stem().string();
    in.device = device;
    in.rsd = a.rsd;
    in.methods = device ? std::vector<std::string>{"peak_gm", "ids_gm", "inv_ids"} : std::vector<std::string>{"peak_gm"};
    auto outcome = run_extraction(in);
    if (outcome.first_error && !first_error) first_error = outcome.first_error;
    for (auto& r : outcome.reports) reports.push_back(std::move(r));
  }
  const auto table = compare_reports(reports, a.reference);
  std::printf("reference: %s\n", table.reference_label.c_str());
  std::printf("%-24s | %-8s | %-9s | %-9s | %s\n", "label", "method", "V_T (V)", "ref (V)", "dV_T (V)");
  for (const auto& r : table.rows)
    std::printf("%-24s | %-8s | %-9s | %-9s | %s\n", r.label.c_str(), std::string(method_name(r.method)).c_str(),
                fmt("%.4f", r.v_t).c_str(), fmt("%.4f", r.reference_v_t).c_str(), fmt("%+.4f", r.delta_v_t).c_str());
  for (const auto& d : table.diagnostics) std::printf("note: %s\n", d.c_str());
  const fs::path dir = a.out.empty() ? default_out_dir() : fs::path(a.out);
  io::write_file_atomic(dir / "shift_table.json", io::dump_json(io::shift_table_to_json(table)) + "\n");
  return first_error ? exit_code(*first_error) : 0;
}

struct PlotArgs {
  std::vector<std::string> reports;
  std::string gate;
  std::string out;
};

int cmd_plot(const PlotArgs& a) {
  require(!a.reports.empty() || !a.gate.empty(), Errc::EmptyPlot, "nothing to plot: give report JSONs and/or --gate");
  const fs::path dir = a.out.empty() ? default_out_dir() : fs::path(a.out);
  std::optional<GateSweep> gate;
  if (!a.gate.empty()) {
    auto loaded = io::read_gate_sweep(a.gate);
    print_warnings(loaded.warnings);
    gate = std::move(loaded.value);
    write_iv_plot(*gate, dir);
  }
  for (const auto& path : a.reports) {
    const auto r = io::read_report(path);
    if (r.method == Method::PeakGm && !gate) {
      std::cerr << "warning: " << path << ": peak_gm plot needs --gate, skipped\n";
      continue;
    }
    plot::Figure fig;
    fig.panels = report_panels(r, gate ? &*gate : nullptr);
    const auto name = fs::path(path).stem().string() + ".svg";
    plot::emit_plot(fig, dir / name);
    std::printf("wrote %s\n", (dir / name).string().c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EGFET/MOSFET linear-region parameter extraction.\n"
               "Units at the command line: voltages in V, mobility in cm2/Vs, C_ox in F/cm2, W and L in um,\n"
               "resistance in ohm. Output directory defaults to $EGFET_OUT_DIR, else the current directory."};
  app.footer(exit_code_table());
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Synthesize a gate sweep (and optionally a drain family) as CSV");
  s->add_option("--vt", sim.v_t, "Threshold voltage V_T in V")->capture_default_str();
  s->add_option("--mu0", sim.mu0_cm2, "Low-field mobility in cm2/Vs")->capture_default_str();
  s->add_option("--theta", sim.theta, "Surface roughness parameter in 1/V")->capture_default_str();
  s->add_option("--rsd", sim.r_sd, "Total series resistance R_sd in ohm")->capture_default_str();
  s->add_option("--vds", sim.v_ds, "Drain bias of the gate sweep in V")->capture_default_str();
  s->add_option("--grid", sim.grid, "Gate grid start:stop:step in V")->capture_default_str();
  s->add_option("--family-vgs", sim.family_vgs, "Also write a drain family at these gates, start:stop:step in V");
  s->add_option("--family-vds", sim.family_vds, "Drain grid of the family, start:stop:step in V")->capture_default_str();
  s->add_option("--noise", sim.noise, "Relative Gaussian current noise (0.01 = 1%)")->capture_default_str();
  s->add_option("--seed", sim.seed, "Noise seed")->capture_default_str();
  s->add_option("--model", sim.model, "Current model: implicit (exact) or simplified (first order)")
      ->capture_default_str();
  s->add_option("--label", sim.label, "Label stored in the CSV metadata");
  s->add_option("--out", sim.out, "Output directory");
  sim.device.add_to(s);
  s->footer(std::string(kUnitsNote) +
            "\nDevice defaults to W = 4.5 um, L = 1.5 um, C_ox = 57.8e-9 F/cm2; any flag overrides one value.");

  ExtractArgs ext;
  auto* e = app.add_subcommand("extract", "Extract V_T, mu_0, theta and mu_eff from sweep CSVs");
  e->add_option("--gate", ext.gate, "Gate sweep CSV (I_ds vs V_gs)");
  e->add_option("--family", ext.family, "Drain family CSV or directory of per-gate CSVs");
  e->add_option("--method", ext.methods, "peak_gm, ids_gm, inv_ids, gds or all (repeatable)")
      ->capture_default_str();
  e->add_option("--rsd", ext.rsd, "Series resistance in ohm, or 'auto' (output resistance of --family)")
      ->capture_default_str();
  e->add_option("--window", ext.window, "Fit window lo:hi in V (default: automatic)");
  e->add_option("--smoothing", ext.smoothing, "Smoothing window in points (odd; 1 disables)");
  e->add_option("--min-window", ext.min_window, "Minimum automatic fit window in points")->capture_default_str();
  e->add_option("--gds-vds", ext.gds_vds, "Drain bias in V of the reported g_ds slice (default: gate sweep V_ds)");
  e->add_option("--vt-hint", ext.vt_hint, "V_T hint in V for --rsd auto");
  e->add_option("--label", ext.label, "Override the label read from the CSV");
  e->add_flag("--plot", ext.plot, "Also write SVG plots");
  e->add_option("--out", ext.out, "Output directory");
  ext.device.add_to(e);
  e->footer(kUnitsNote);

  RsdArgs rsd;
  auto* r = app.add_subcommand("rsd", "Estimate the series resistance R_sd in ohm");
  r->add_option("--family", rsd.family, "Drain family for the output-resistance estimate");
  r->add_option("--vt-hint", rsd.vt_hint, "V_T in V used to linearize R_tot");
  r->add_option("--gate", rsd.gate, "Gate sweep whose peak-g_m V_T is the hint");
  r->add_option("--device-sweep", rsd.devices, "L_um=path gate sweep of one device (repeat per mask length)");
  r->add_option("--out", rsd.out, "Output directory");
  r->footer(kUnitsNote);

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Threshold shift per method relative to a reference condition");
  c->add_option("inputs", cmp.inputs, "Report JSONs and/or gate sweep CSVs")->required();
  c->add_option("--reference", cmp.reference, "Label of the reference condition")->required();
  c->add_option("--rsd", cmp.rsd, "Series resistance in ohm for CSV inputs")->capture_default_str();
  c->add_option("--out", cmp.out, "Output directory");
  cmp.device.add_to(c);
  c->footer(kUnitsNote);

  PlotArgs pl;
  auto* p = app.add_subcommand("plot", "Render SVG plots of reports and sweeps");
  p->add_option("reports", pl.reports, "Report JSONs");
  p->add_option("--gate", pl.gate, "Gate sweep CSV (I-V and g_m panels, needed for peak_gm)");
  p->add_option("--out", pl.out, "Output directory");
  p->footer(kUnitsNote);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_simulate(sim);
    if (e->parsed()) return cmd_extract(ext);
    if (r->parsed()) return cmd_rsd(rsd);
    if (c->parsed()) return cmd_compare(cmp);
    if (p->parsed()) return cmd_plot(pl);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code(err.code());
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
