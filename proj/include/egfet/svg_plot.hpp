#pragma once

// Minimal deterministic SVG line/scatter plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "egfet/data_io.hpp"
#include "egfet/errors.hpp"
#include "egfet/extraction.hpp"
#include "egfet/numerics.hpp"

namespace egfet::plot {

enum class SeriesStyle { Markers, Line };

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  SeriesStyle style = SeriesStyle::Markers;
};

/// Straight line y = slope*x + intercept drawn from x_from to x_to, usually
/// extended back to the x-intercept, which is annotated when `annotate` is set.
struct FitOverlay {
  double slope = 0.0;
  double intercept = 0.0;
  double x_from = 0.0;
  double x_to = 0.0;
  bool annotate = true;

  double x_intercept() const { return -intercept / slope; }
};

struct Panel {
  std::string title;
  std::string x_label = "V_gs (V)";
  std::string y_label;
  std::vector<Series> series;
  std::optional<FitOverlay> fit;
};

struct Figure {
  std::vector<Panel> panels;
  int panel_width = 520;
  int panel_height = 380;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-300 ? 0.0 : v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* color(std::size_t k) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return palette[k % 6];
}

struct Bounds {
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return;
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  void pad() {
    if (x1 <= x0) {
      x0 -= 0.5;
      x1 += 0.5;
    }
    if (y1 <= y0) {
      const double d = y0 == 0.0 ? 1.0 : std::abs(y0) * 0.1;
      y0 -= d;
      y1 += d;
    }
    const double dy = (y1 - y0) * 0.05;
    y0 -= dy;
    y1 += dy;
  }
};

inline std::string render_panel(const Panel& p, double ox, double oy, double w, double h) {
  const double ml = 70, mr = 20, mt = 30, mb = 45;
  const double pw = w - ml - mr;
  const double ph = h - mt - mb;

  Bounds b;
  for (const auto& s : p.series)
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) b.add(s.x[k], s.y[k]);
  std::optional<double> vt;
  if (p.fit && p.fit->slope != 0.0) {
    b.add(p.fit->x_from, p.fit->slope * p.fit->x_from + p.fit->intercept);
    b.add(p.fit->x_to, p.fit->slope * p.fit->x_to + p.fit->intercept);
    if (p.fit->annotate && std::isfinite(p.fit->x_intercept())) {
      vt = p.fit->x_intercept();
      b.add(*vt, 0.0);
    }
  }
  require(std::isfinite(b.x0), Errc::EmptyPlot, "panel '" + p.title + "' has no finite data");
  b.pad();

  const auto sx = [&](double x) { return ox + ml + (x - b.x0) / (b.x1 - b.x0) * pw; };
  const auto sy = [&](double y) { return oy + mt + (b.y1 - y) / (b.y1 - b.y0) * ph; };

  std::string s;
  s += "<g>\n";
  s += "<rect x=\"" + num(ox + ml) + "\" y=\"" + num(oy + mt) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"#000\"/>\n";
  s += "<text x=\"" + num(ox + ml + pw / 2) + "\" y=\"" + num(oy + 18) + "\" text-anchor=\"middle\">" +
       escape(p.title) + "</text>\n";
  s += "<text x=\"" + num(ox + ml + pw / 2) + "\" y=\"" + num(oy + h - 8) + "\" text-anchor=\"middle\">" +
       escape(p.x_label) + "</text>\n";
  s += "<text transform=\"translate(" + num(ox + 14) + "," + num(oy + mt + ph / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + escape(p.y_label) + "</text>\n";

  for (int k = 0; k <= 4; ++k) {
    const double xv = b.x0 + (b.x1 - b.x0) * k / 4.0;
    const double yv = b.y0 + (b.y1 - b.y0) * k / 4.0;
    s += "<text x=\"" + num(sx(xv)) + "\" y=\"" + num(oy + mt + ph + 16) + "\" text-anchor=\"middle\" font-size=\"10\">" +
         tick(xv) + "</text>\n";
    s += "<text x=\"" + num(ox + ml - 4) + "\" y=\"" + num(sy(yv) + 3) + "\" text-anchor=\"end\" font-size=\"10\">" +
         tick(yv) + "</text>\n";
  }
  if (b.y0 < 0.0 && b.y1 > 0.0)
    s += "<line x1=\"" + num(ox + ml) + "\" y1=\"" + num(sy(0)) + "\" x2=\"" + num(ox + ml + pw) + "\" y2=\"" +
         num(sy(0)) + "\" stroke=\"#999\" stroke-dasharray=\"3,3\"/>\n";

  for (std::size_t k = 0; k < p.series.size(); ++k) {
    const auto& ser = p.series[k];
    const std::size_t n = std::min(ser.x.size(), ser.y.size());
    if (ser.style == SeriesStyle::Line) {
      std::string pts;
      for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(ser.x[j]) || !std::isfinite(ser.y[j])) continue;
        pts += (pts.empty() ? "" : " ") + num(sx(ser.x[j])) + "," + num(sy(ser.y[j]));
      }
      s += "<polyline fill=\"none\" stroke=\"" + std::string(color(k)) + "\" points=\"" + pts + "\"/>\n";
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(ser.x[j]) || !std::isfinite(ser.y[j])) continue;
        s += "<circle cx=\"" + num(sx(ser.x[j])) + "\" cy=\"" + num(sy(ser.y[j])) + "\" r=\"2.5\" fill=\"" +
             color(k) + "\"/>\n";
      }
    }
    s += "<text x=\"" + num(ox + ml + 8) + "\" y=\"" + num(oy + mt + 14 + 14.0 * static_cast<double>(k)) +
         "\" font-size=\"11\" fill=\"" + color(k) + "\">" + escape(ser.name) + "</text>\n";
  }

  if (p.fit && p.fit->slope != 0.0) {
    const auto& f = *p.fit;
    double a = f.x_from;
    double c = f.x_to;
    if (vt) {
      a = std::min(a, *vt);
      c = std::max(c, *vt);
    }
    s += "<line x1=\"" + num(sx(a)) + "\" y1=\"" + num(sy(f.slope * a + f.intercept)) + "\" x2=\"" + num(sx(c)) +
         "\" y2=\"" + num(sy(f.slope * c + f.intercept)) + "\" stroke=\"#000\" stroke-width=\"1.2\"/>\n";
    if (vt) {
      char label[64];
      std::snprintf(label, sizeof label, "V_T = %.3f V", *vt);
      s += "<circle cx=\"" + num(sx(*vt)) + "\" cy=\"" + num(sy(0.0)) + "\" r=\"4\" fill=\"none\" stroke=\"#000\"/>\n";
      s += "<text x=\"" + num(sx(*vt) + 6) + "\" y=\"" + num(sy(0.0) - 8) + "\" font-size=\"12\">" + label +
           "</text>\n";
    }
  }
  s += "</g>\n";
  return s;
}

}  // namespace detail

/// Panels are stacked vertically.
inline std::string render_svg(const Figure& fig) {
  require(!fig.panels.empty(), Errc::EmptyPlot, "figure has no panels");
  for (const auto& p : fig.panels) {
    const bool any = std::any_of(p.series.begin(), p.series.end(), [](const Series& s) { return !s.x.empty(); });
    require(any, Errc::EmptyPlot, "panel '" + p.title + "' has no data");
  }
  const double w = fig.panel_width;
  const double h = fig.panel_height;
  const double total = h * static_cast<double>(fig.panels.size());
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(w) + "\" height=\"" + detail::num(total) +
       "\" viewBox=\"0 0 " + detail::num(w) + " " + detail::num(total) +
       "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  for (std::size_t k = 0; k < fig.panels.size(); ++k)
    s += detail::render_panel(fig.panels[k], 0.0, h * static_cast<double>(k), w, h);
  s += "</svg>\n";
  return s;
}

inline void emit_plot(const Figure& fig, const std::filesystem::path& path) {
  io::write_file_atomic(path, render_svg(fig));
}

inline Series series_from(const SampledCurve& c, std::string name, SeriesStyle style = SeriesStyle::Markers,
                          double y_scale = 1.0) {
  Series s{std::move(name), {c.x().begin(), c.x().end()}, {c.y().begin(), c.y().end()}, style};
  for (auto& y : s.y) y *= y_scale;
  return s;
}

inline FitOverlay overlay_from(const LineFit& f, const SampledCurve& c) {
  const std::size_t last = std::min(f.window.end, c.size()) - 1;
  return {f.slope, f.intercept, c.x(f.window.begin), c.x(last), true};
}

inline std::string linearized_axis_label(Method m) {
  switch (m) {
    case Method::PeakGm: return "g_m (A/V)";
    case Method::IdsOverSqrtGm: return "I_ds / sqrt(g_m) (sqrt(A V))";
    case Method::InvIds: return "(d2(1/I_ds)/dV_gs2)^(-1/3) (A^(1/3) V)";
    case Method::GdsMethod: return "g_ds / sqrt(dg_ds/dV_gs) (sqrt(A/V) V)";
  }
  return "";
}

/// Straight-line panel of a report: its linearizing function with the fit.
/// For peak_gm the tangent to I_ds at peak g_m is drawn over the I-V data.
inline Panel linearized_panel(const ExtractionReport& r, const GateSweep* sweep = nullptr) {
  Panel p;
  p.title = std::string(method_name(r.method)) + (r.label.empty() ? "" : " - " + r.label);
  if (r.method == Method::PeakGm) {
    require(sweep != nullptr, Errc::EmptyPlot, "peak_gm panel needs the gate sweep");
    p.y_label = "I_ds (A)";
    p.series.push_back({"I_ds", sweep->v_gs(), sweep->i_ds(), SeriesStyle::Markers});
    if (r.fit && r.linearized) {
      const auto& f = *r.fit;
      const double x_peak = r.linearized->x(f.window.begin + 1);
      p.fit = FitOverlay{f.slope, f.intercept, r.v_t.value, x_peak + 0.5, true};
    }
    return p;
  }
  p.y_label = linearized_axis_label(r.method);
  require(r.linearized.has_value(), Errc::EmptyPlot, "report has no linearized curve");
  p.series.push_back(series_from(*r.linearized, p.y_label));
  if (r.fit) p.fit = overlay_from(*r.fit, *r.linearized);
  return p;
}

/// I-V and transconductance of a gate sweep.
inline std::vector<Panel> iv_panels(const GateSweep& sweep) {
  Panel iv;
  iv.title = "I_ds" + (sweep.label.empty() ? std::string() : " - " + sweep.label);
  iv.y_label = "I_ds (A)";
  iv.series.push_back({"I_ds", sweep.v_gs(), sweep.i_ds(), SeriesStyle::Markers});
  Panel gm;
  gm.title = "g_m";
  gm.y_label = "g_m (A/V)";
  if (sweep.size() >= 3) {
    const auto d = first_derivative(SampledCurve(sweep.v_gs(), sweep.i_ds()));
    gm.series.push_back(series_from(d, "g_m", SeriesStyle::Line));
  }
  return {iv, gm};
}

/// θ and μ_eff (cm²/Vs) curves of a report.
inline std::vector<Panel> theta_mu_panels(const ExtractionReport& r) {
  std::vector<Panel> out;
  if (r.theta_curve) {
    Panel p;
    p.title = std::string(method_name(r.method)) + " theta";
    p.y_label = "theta (1/V)";
    p.series.push_back(series_from(*r.theta_curve, "theta", SeriesStyle::Markers));
    out.push_back(std::move(p));
  }
  if (r.mu_eff_curve) {
    Panel p;
    p.title = std::string(method_name(r.method)) + " mu_eff";
    p.y_label = "mu_eff (cm2/Vs)";
    p.series.push_back(series_from(*r.mu_eff_curve, "mu_eff", SeriesStyle::Markers, units::kCm2PerM2));
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace egfet::plot
