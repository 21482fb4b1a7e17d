#pragma once

// Parameter extraction from transfer (I_ds-V_gs) and output (I_ds-V_ds)
// characteristics. Each gate-sweep method linearizes the first-order drain
// current model in V_gs and reads V_T from the x-intercept and beta0 from the
// slope of a least-squares line:
//
//   ids_gm   F = I_ds / sqrt(g_m)           = sqrt(beta0 V_ds) (V_gs - V_T)
//   inv_ids  G = [d2(1/I_ds)/dV_gs2]^(-1/3) = (beta0 V_ds / 2)^(1/3) (V_gs - V_T)
//   gds      H = g_ds / sqrt(dg_ds/dV_gs)   = sqrt(beta0) (V_gs - V_T)
//
// The peak-transconductance method extrapolates the I-V tangent at max g_m.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "egfet/errors.hpp"
#include "egfet/model.hpp"
#include "egfet/numerics.hpp"
#include "egfet/sweep.hpp"

namespace egfet {

enum class Method { PeakGm, IdsOverSqrtGm, InvIds, GdsMethod };

constexpr std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::PeakGm: return "peak_gm";
    case Method::IdsOverSqrtGm: return "ids_gm";
    case Method::InvIds: return "inv_ids";
    case Method::GdsMethod: return "gds";
  }
  return "unknown";
}

inline std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::PeakGm, Method::IdsOverSqrtGm, Method::InvIds, Method::GdsMethod})
    if (method_name(m) == name) return m;
  return std::nullopt;
}

/// A value with its one-sigma uncertainty (NaN when the method gives none).
struct Estimate {
  double value = 0.0;
  double sigma = std::numeric_limits<double>::quiet_NaN();
};

struct ThetaRange {
  double min = 0.0;
  double max = 0.0;
};

struct ExtractionReport {
  Method method = Method::PeakGm;
  Estimate v_t;                               // V
  std::optional<Estimate> mu_0;               // m^2/(V s)
  std::optional<ThetaRange> theta_range;      // 1/V
  double r_sd_used = 0.0;                     // ohm
  std::optional<LineFit> fit;                 // indices refer to `linearized`
  std::optional<SampledCurve> linearized;     // F, G, H (or g_m for peak_gm) vs V_gs
  std::optional<SampledCurve> theta_curve;    // 1/V vs V_gs over the fit window
  std::optional<SampledCurve> mu_eff_curve;   // m^2/(V s) vs V_gs over the fit window
  std::optional<double> v_t_alt;              // peak_gm only: argmax of dg_m/dV_gs
  std::string label;
  double v_ds = 0.0;                          // drain bias of the data (slice value for gds)
  std::vector<std::string> diagnostics;
};

struct ExtractionOptions {
  /// Explicit fit range in V_gs (inclusive); disables the automatic window.
  std::optional<std::pair<double, double>> v_gs_window;
  std::size_t min_window_points = 6;
  /// The automatic window starts this far above the peak-g_m threshold estimate.
  double window_margin = 0.2;
  /// Odd smoothing width applied before differentiating; nullopt = method default
  /// (5 for inv_ids, off for the others).
  std::optional<int> smoothing_points;
};

inline constexpr std::size_t kMinSweepPoints = 8;
/// Relative tolerance under which two g_m samples count as equal maxima.
inline constexpr double kPeakTieTolerance = 1e-9;

namespace detail {

inline std::string fmt_v(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline void check_gate_sweep(const GateSweep& sweep) {
  sweep.validate();
  require(sweep.size() >= kMinSweepPoints, Errc::TooFewPoints,
          "gate sweep has " + std::to_string(sweep.size()) + " points, extraction needs " +
              std::to_string(kMinSweepPoints));
}

inline void check_rsd(double r_sd) {
  require(std::isfinite(r_sd) && r_sd >= 0.0, Errc::InvalidArgument, "r_sd must be >= 0");
}

inline SampledCurve maybe_smooth(const SampledCurve& c, int points) {
  return points > 1 ? smooth(c, points) : c;
}

/// Index of the largest value; among values within the tie tolerance of the
/// maximum the lowest index wins.
inline std::size_t argmax_lowest(std::span<const double> y) {
  const double top = *std::max_element(y.begin(), y.end());
  const double tol = kPeakTieTolerance * std::abs(top);
  for (std::size_t k = 0; k < y.size(); ++k)
    if (y[k] >= top - tol) return k;
  return 0;
}

inline ThetaRange range_of(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {*lo, *hi};
}

/// Lower V_gs bound of the automatic fit window.
inline double auto_window_floor(const GateSweep& sweep, const ExtractionOptions& opts,
                                std::vector<std::string>& diagnostics);

inline bool in_range(double v, const std::pair<double, double>& r) { return v >= r.first && v <= r.second; }

inline SampledCurve subset_curve(std::span<const double> x, std::span<const double> y,
                                 std::span<const std::size_t> idx) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (auto k : idx) {
    xs.push_back(x[k]);
    ys.push_back(y[k]);
  }
  return SampledCurve(std::move(xs), std::move(ys));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Peak transconductance

inline ExtractionReport peak_gm_extract(const GateSweep& sweep) {
  detail::check_gate_sweep(sweep);
  const SampledCurve iv(sweep.v_gs(), sweep.i_ds());
  const SampledCurve gm = first_derivative(iv);
  const std::size_t peak = detail::argmax_lowest(gm.y());
  require(peak > 0 && peak + 1 < gm.size(), Errc::NoInteriorMax,
          "g_m is largest at the sweep edge (V_gs = " + detail::fmt_v(gm.x(peak)) +
              " V); the sweep does not reach peak transconductance");

  const double v_star = iv.x(peak);
  const double i_star = iv.y(peak);
  const double gm_star = gm.y(peak);

  ExtractionReport report;
  report.method = Method::PeakGm;
  report.label = sweep.label;
  report.v_ds = sweep.v_ds;
  report.v_t = {v_star - i_star / gm_star, std::numeric_limits<double>::quiet_NaN()};
  report.linearized = gm;

  LineFit tangent;
  tangent.slope = gm_star;
  tangent.intercept = i_star - gm_star * v_star;
  tangent.x_intercept = report.v_t.value;
  tangent.r_squared = std::numeric_limits<double>::quiet_NaN();
  tangent.window = {peak - 1, peak + 2};
  tangent.sigma_slope = tangent.sigma_intercept = tangent.sigma_x_intercept =
      std::numeric_limits<double>::quiet_NaN();
  report.fit = tangent;

  const SampledCurve dgm = first_derivative(gm);
  report.v_t_alt = dgm.x(detail::argmax_lowest(dgm.y()));
  report.diagnostics.push_back("g_m peak at V_gs = " + detail::fmt_v(v_star) + " V; argmax dg_m/dV_gs at " +
                               detail::fmt_v(*report.v_t_alt) + " V");
  return report;
}

namespace detail {

inline double auto_window_floor(const GateSweep& sweep, const ExtractionOptions& opts,
                                std::vector<std::string>& diagnostics) {
  try {
    const double vt = peak_gm_extract(sweep).v_t.value;
    return vt + opts.window_margin;
  } catch (const Error& e) {
    for (const auto& p : sweep.points)
      if (p.i > 0.0) {
        diagnostics.push_back(std::string("peak-g_m estimate unavailable (") + e.what() +
                              "); fit window starts at the first conducting point");
        return p.v;
      }
    throw;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// theta from I_ds and g_m

/// Pointwise theta = [I/(g_m (V_gs - V_T)) - 1] / (V_gs - V_T) - beta0 R_sd at
/// the sweep indices in `window`.
inline SampledCurve theta_from_eq12(std::span<const double> v_gs, std::span<const double> ids,
                                    std::span<const double> gm, double v_t, Beta0 b0, double r_sd,
                                    IndexRange window) {
  detail::check_rsd(r_sd);
  require(window.end <= v_gs.size() && window.size() >= 2, Errc::BadWindow, "theta window outside the sweep");
  std::vector<double> xs;
  std::vector<double> th;
  for (std::size_t k = window.begin; k < window.end; ++k) {
    const double vov = v_gs[k] - v_t;
    require(vov > 0.0, Errc::WindowBelowThreshold,
            "theta window reaches V_gs = " + detail::fmt_v(v_gs[k]) + " V <= V_T");
    require(gm[k] > 0.0, Errc::NonpositiveGm, "g_m <= 0 at V_gs = " + detail::fmt_v(v_gs[k]) + " V");
    xs.push_back(v_gs[k]);
    th.push_back((ids[k] / (gm[k] * vov) - 1.0) / vov - b0.value() * r_sd);
  }
  return SampledCurve(std::move(xs), std::move(th));
}

/// Sweep-level form: g_m from the raw sweep; default window is every point
/// above v_t.
inline SampledCurve theta_from_eq12(const GateSweep& sweep, double v_t, Beta0 b0, double r_sd,
                                    std::optional<IndexRange> window = std::nullopt) {
  sweep.validate();
  const SampledCurve iv(sweep.v_gs(), sweep.i_ds());
  const SampledCurve gm = first_derivative(iv);
  if (!window) {
    std::size_t first = 0;
    while (first < iv.size() && iv.x(first) <= v_t) ++first;
    window = IndexRange{first, iv.size()};
  }
  return theta_from_eq12(iv.x(), iv.y(), gm.y(), v_t, b0, r_sd, *window);
}

namespace detail {

inline SampledCurve mu_eff_curve(std::span<const double> v_gs, std::span<const double> ids,
                                 std::span<const double> theta, double mu_0, double v_t, double r_sd) {
  std::vector<double> xs(v_gs.begin(), v_gs.end());
  std::vector<double> mu(v_gs.size());
  for (std::size_t k = 0; k < v_gs.size(); ++k)
    mu[k] = mu_0 / (1.0 + theta[k] * (v_gs[k] - ids[k] * r_sd / 2.0 - v_t));
  return SampledCurve(std::move(xs), std::move(mu));
}

/// Indices of sweep points inside the fit region. In automatic mode the run is
/// cut at the first point failing `usable`; with a user window such a point is
/// an error.
template <class Usable>
std::vector<std::size_t> region_indices(std::span<const double> v, const std::optional<std::pair<double, double>>& user,
                                        double floor, Usable usable, Errc failure, const char* what,
                                        std::vector<std::string>& diagnostics) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const bool inside = user ? in_range(v[k], *user) : v[k] >= floor;
    if (!inside) continue;
    if (!usable(k)) {
      if (user) fail(failure, std::string(what) + " at V_gs = " + fmt_v(v[k]) + " V inside the fit window");
      if (!idx.empty()) {
        diagnostics.push_back(std::string("automatic window truncated at V_gs = ") + fmt_v(v[k]) + " V (" + what + ")");
        break;
      }
      continue;
    }
    idx.push_back(k);
  }
  return idx;
}

inline IndexRange choose_window(const SampledCurve& c, const ExtractionOptions& opts) {
  if (opts.v_gs_window) return {0, c.size()};
  return auto_window(c, opts.min_window_points);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// I_ds / sqrt(g_m)

inline ExtractionReport ids_over_sqrt_gm_extract(const GateSweep& sweep, const DeviceSpec& spec, double r_sd,
                                                 const ExtractionOptions& opts = {}) {
  detail::check_gate_sweep(sweep);
  spec.validate();
  detail::check_rsd(r_sd);
  require(sweep.v_ds > 0.0, Errc::InvalidArgument, "ids_gm needs v_ds > 0");

  ExtractionReport report;
  report.method = Method::IdsOverSqrtGm;
  report.label = sweep.label;
  report.v_ds = sweep.v_ds;
  report.r_sd_used = r_sd;

  const SampledCurve iv(sweep.v_gs(), sweep.i_ds());
  const SampledCurve gm = first_derivative(detail::maybe_smooth(iv, opts.smoothing_points.value_or(1)));
  const double floor = opts.v_gs_window ? 0.0 : detail::auto_window_floor(sweep, opts, report.diagnostics);

  const auto usable = [&](std::size_t k) { return gm.y(k) > 0.0 && iv.y(k) > 0.0; };
  const auto idx = detail::region_indices(iv.x(), opts.v_gs_window, floor, usable, Errc::NonpositiveGm,
                                          "g_m <= 0", report.diagnostics);
  const std::size_t needed = opts.v_gs_window ? 3 : opts.min_window_points;
  require(idx.size() >= needed, Errc::NonpositiveGm,
          "only " + std::to_string(idx.size()) + " points with g_m > 0 in the fit region");

  std::vector<double> fx;
  std::vector<double> fy;
  for (auto k : idx) {
    fx.push_back(iv.x(k));
    fy.push_back(iv.y(k) / std::sqrt(gm.y(k)));
  }
  const SampledCurve f(std::move(fx), std::move(fy));
  const LineFit fit = fit_line(f, detail::choose_window(f, opts));

  const double ar_cox = spec.c_ox * spec.aspect_ratio();
  const double b0 = fit.slope * fit.slope / sweep.v_ds;
  report.v_t = {fit.x_intercept, fit.sigma_x_intercept};
  report.mu_0 = Estimate{b0 / ar_cox, 2.0 * std::abs(fit.slope) * fit.sigma_slope / (sweep.v_ds * ar_cox)};
  report.fit = fit;
  report.linearized = f;

  const auto win = std::span<const std::size_t>(idx).subspan(fit.window.begin, fit.window.size());
  const SampledCurve theta =
      theta_from_eq12(iv.x(), iv.y(), gm.y(), fit.x_intercept, Beta0(b0), r_sd, {win.front(), win.back() + 1});
  report.theta_curve = theta;
  report.theta_range = detail::range_of(theta.y());
  report.mu_eff_curve = detail::mu_eff_curve(theta.x(), iv.y().subspan(win.front(), win.size()), theta.y(),
                                             report.mu_0->value, fit.x_intercept, r_sd);
  return report;
}

// ---------------------------------------------------------------------------
// 1 / I_ds

inline constexpr int kInvIdsDefaultSmoothing = 5;

inline ExtractionReport inv_ids_extract(const GateSweep& sweep, const DeviceSpec& spec, double r_sd,
                                        const ExtractionOptions& opts = {}) {
  detail::check_gate_sweep(sweep);
  spec.validate();
  detail::check_rsd(r_sd);
  require(sweep.v_ds > 0.0, Errc::InvalidArgument, "inv_ids needs v_ds > 0");

  ExtractionReport report;
  report.method = Method::InvIds;
  report.label = sweep.label;
  report.v_ds = sweep.v_ds;
  report.r_sd_used = r_sd;

  const auto v = sweep.v_gs();
  const auto i = sweep.i_ds();
  if (opts.v_gs_window) {
    for (std::size_t k = 0; k < v.size(); ++k)
      require(!detail::in_range(v[k], *opts.v_gs_window) || i[k] > 0.0, Errc::NonpositiveCurrent,
              "I_ds <= 0 at V_gs = " + detail::fmt_v(v[k]) + " V inside the fit window");
  }

  // 1/I_ds only exists where current flows.
  std::vector<std::size_t> conducting;
  for (std::size_t k = 0; k < i.size(); ++k)
    if (i[k] > 0.0) conducting.push_back(k);
  const int smoothing = opts.smoothing_points.value_or(kInvIdsDefaultSmoothing);
  require(conducting.size() >= std::max<std::size_t>(5, static_cast<std::size_t>(std::max(smoothing, 1))),
          Errc::NonpositiveCurrent, "too few points with I_ds > 0");
  std::vector<double> cx;
  std::vector<double> cy;
  for (auto k : conducting) {
    cx.push_back(v[k]);
    cy.push_back(1.0 / i[k]);
  }
  const SampledCurve inv(std::move(cx), std::move(cy));
  const SampledCurve d2 = second_derivative(detail::maybe_smooth(inv, smoothing));
  // d2 sample j sits at conducting[j + 1]

  const double floor = opts.v_gs_window ? 0.0 : detail::auto_window_floor(sweep, opts, report.diagnostics);
  std::vector<std::size_t> sweep_idx;
  std::vector<double> gx;
  std::vector<double> gy;
  std::size_t negative = 0;
  for (std::size_t j = 0; j < d2.size(); ++j) {
    const double vg = d2.x(j);
    const bool inside = opts.v_gs_window ? detail::in_range(vg, *opts.v_gs_window) : vg >= floor;
    if (!inside) continue;
    if (!(d2.y(j) > 0.0)) {
      ++negative;
      continue;
    }
    sweep_idx.push_back(conducting[j + 1]);
    gx.push_back(vg);
    gy.push_back(1.0 / std::cbrt(d2.y(j)));
  }
  if (negative > 0)
    report.diagnostics.push_back(std::to_string(negative) +
                                 " point(s) with d2(1/I_ds)/dV_gs2 <= 0 excluded from the fit");
  const std::size_t needed = opts.v_gs_window ? 3 : opts.min_window_points;
  require(gx.size() >= needed, Errc::NegativeSecondDerivative,
          "only " + std::to_string(gx.size()) + " points with a positive second derivative of 1/I_ds");

  const SampledCurve g(std::move(gx), std::move(gy));
  const LineFit fit = fit_line(g, detail::choose_window(g, opts));

  const double ar_cox = spec.c_ox * spec.aspect_ratio();
  const double s = fit.slope;
  const double b0 = 2.0 * s * s * s / sweep.v_ds;
  require(b0 > 0.0, Errc::NegativeSecondDerivative, "fitted slope of [d2(1/I)/dV2]^(-1/3) is not positive");
  report.v_t = {fit.x_intercept, fit.sigma_x_intercept};
  report.mu_0 = Estimate{b0 / ar_cox, 6.0 * s * s * fit.sigma_slope / (sweep.v_ds * ar_cox)};
  report.fit = fit;
  report.linearized = g;

  // theta from the reciprocal current: theta = beta0 V_ds / I - 1/(V_gs - V_T) - beta0 R_sd
  std::vector<double> tx;
  std::vector<double> ty;
  std::vector<double> ti;
  for (std::size_t w = fit.window.begin; w < fit.window.end; ++w) {
    const std::size_t k = sweep_idx[w];
    const double vov = v[k] - fit.x_intercept;
    require(vov > 0.0, Errc::WindowBelowThreshold, "theta window reaches V_gs <= V_T");
    tx.push_back(v[k]);
    ti.push_back(i[k]);
    ty.push_back(b0 * sweep.v_ds / i[k] - 1.0 / vov - b0 * r_sd);
  }
  report.theta_curve = SampledCurve(tx, ty);
  report.theta_range = detail::range_of(ty);
  report.mu_eff_curve = detail::mu_eff_curve(tx, ti, ty, report.mu_0->value, fit.x_intercept, r_sd);
  return report;
}

// ---------------------------------------------------------------------------
// g_ds / sqrt(dg_ds/dV_gs)

namespace detail {

inline double interpolate(std::span<const double> x, std::span<const double> y, double at) {
  auto it = std::upper_bound(x.begin(), x.end(), at);
  if (it == x.begin()) return y.front();
  if (it == x.end()) return y.back();
  const std::size_t k = static_cast<std::size_t>(it - x.begin());
  const double t = (at - x[k - 1]) / (x[k] - x[k - 1]);
  return y[k - 1] + t * (y[k] - y[k - 1]);
}

/// Drain currents of every sweep on one shared V_ds grid. Rows follow the
/// family's gate order.
struct CommonGrid {
  std::vector<double> v_ds;
  std::vector<std::vector<double>> ids;
};

inline CommonGrid common_drain_grid(const DrainSweepFamily& family, std::vector<std::string>& diagnostics) {
  CommonGrid grid;
  grid.v_ds = family.sweeps.front().v_ds();
  bool same = true;
  for (const auto& s : family.sweeps) same = same && s.v_ds() == grid.v_ds;
  if (same) {
    for (const auto& s : family.sweeps) grid.ids.push_back(s.i_ds());
    return grid;
  }
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& s : family.sweeps) {
    require(!s.points.empty(), Errc::InconsistentFamily, "empty drain sweep");
    lo = std::max(lo, s.points.front().v);
    hi = std::min(hi, s.points.back().v);
  }
  std::erase_if(grid.v_ds, [&](double x) { return x < lo || x > hi; });
  require(grid.v_ds.size() >= 3, Errc::InconsistentFamily, "drain sweeps share fewer than 3 V_ds points");
  for (const auto& s : family.sweeps) {
    const auto x = s.v_ds();
    const auto y = s.i_ds();
    std::vector<double> row;
    for (double at : grid.v_ds) row.push_back(interpolate(x, y, at));
    grid.ids.push_back(std::move(row));
  }
  diagnostics.push_back("drain sweeps resampled onto a common V_ds grid by linear interpolation");
  return grid;
}

}  // namespace detail

/// One report per V_ds sample of the family's common drain grid.
inline std::vector<ExtractionReport> gds_method_extract(const DrainSweepFamily& family, const DeviceSpec& spec,
                                                        double r_sd, const ExtractionOptions& opts = {}) {
  family.validate();
  spec.validate();
  detail::check_rsd(r_sd);
  require(family.size() >= 3, Errc::InsufficientGateValues, "g_ds method needs at least 3 gate voltages");

  std::vector<std::string> shared;
  const auto grid = detail::common_drain_grid(family, shared);
  require(grid.v_ds.size() >= 3, Errc::TooFewPoints, "drain sweeps need at least 3 V_ds points");

  const int smoothing = opts.smoothing_points.value_or(1);
  const auto gates = family.gate_voltages();
  std::vector<std::vector<double>> gds;  // [gate][v_ds]
  for (const auto& row : grid.ids) {
    const SampledCurve c(grid.v_ds, row);
    const SampledCurve d = first_derivative(detail::maybe_smooth(c, smoothing));
    gds.emplace_back(d.y().begin(), d.y().end());
  }

  const double ar_cox = spec.c_ox * spec.aspect_ratio();
  std::vector<ExtractionReport> reports;
  std::vector<std::string> skipped;
  std::optional<Error> first_error;
  for (std::size_t j = 0; j < grid.v_ds.size(); ++j) {
    try {
      std::vector<double> gx;
      std::vector<double> gy;
      std::vector<double> iy;
      for (std::size_t k = 0; k < gates.size(); ++k) {
        if (opts.v_gs_window && !detail::in_range(gates[k], *opts.v_gs_window)) continue;
        gx.push_back(gates[k]);
        gy.push_back(gds[k][j]);
        iy.push_back(grid.ids[k][j]);
      }
      require(gx.size() >= 3, Errc::InsufficientGateValues, "fewer than 3 gate voltages in the fit window");
      for (std::size_t k = 0; k < gy.size(); ++k)
        require(gy[k] > 0.0, Errc::NonpositiveDerivative, "g_ds <= 0 at V_gs = " + detail::fmt_v(gx[k]) + " V");
      const SampledCurve g(gx, gy);
      const SampledCurve dg = first_derivative(g);
      std::vector<double> hy;
      for (std::size_t k = 0; k < gy.size(); ++k) {
        require(dg.y(k) > 0.0, Errc::NonpositiveDerivative,
                "dg_ds/dV_gs <= 0 at V_gs = " + detail::fmt_v(gx[k]) + " V");
        hy.push_back(gy[k] / std::sqrt(dg.y(k)));
      }
      const SampledCurve h(gx, std::move(hy));
      const LineFit fit = fit_line(h);

      ExtractionReport report;
      report.method = Method::GdsMethod;
      report.label = family.label;
      report.v_ds = grid.v_ds[j];
      report.r_sd_used = r_sd;
      report.diagnostics = shared;
      const double b0 = fit.slope * fit.slope;
      report.v_t = {fit.x_intercept, fit.sigma_x_intercept};
      report.mu_0 = Estimate{b0 / ar_cox, 2.0 * std::abs(fit.slope) * fit.sigma_slope / ar_cox};
      report.fit = fit;
      report.linearized = h;

      // theta from 1/g_ds = 1/(beta0 (V_gs - V_T)) + (theta + beta0 R_sd)/beta0
      std::vector<double> tx;
      std::vector<double> ty;
      std::vector<double> ti;
      for (std::size_t k = 0; k < gx.size(); ++k) {
        const double vov = gx[k] - fit.x_intercept;
        if (vov <= 0.0) continue;
        tx.push_back(gx[k]);
        ty.push_back(b0 / gy[k] - 1.0 / vov - b0 * r_sd);
        ti.push_back(iy[k]);
      }
      if (tx.size() < gx.size())
        report.diagnostics.push_back(std::to_string(gx.size() - tx.size()) +
                                     " gate value(s) at or below the extracted V_T left out of the theta curve");
      if (tx.size() >= 2) {
        report.theta_curve = SampledCurve(tx, ty);
        report.theta_range = detail::range_of(ty);
        report.mu_eff_curve = detail::mu_eff_curve(tx, ti, ty, report.mu_0->value, fit.x_intercept, r_sd);
      }
      reports.push_back(std::move(report));
    } catch (const Error& e) {
      if (!first_error) first_error = e;
      skipped.push_back("V_ds = " + detail::fmt_v(grid.v_ds[j]) + " V slice skipped: " + e.what());
    }
  }
  if (reports.empty()) throw *first_error;

  double vt_lo = reports.front().v_t.value;
  double vt_hi = vt_lo;
  for (const auto& r : reports) {
    vt_lo = std::min(vt_lo, r.v_t.value);
    vt_hi = std::max(vt_hi, r.v_t.value);
  }
  for (auto& r : reports) {
    r.diagnostics.insert(r.diagnostics.end(), skipped.begin(), skipped.end());
    if (reports.size() > 1)
      r.diagnostics.push_back("V_T across " + std::to_string(reports.size()) + " V_ds slices: " +
                              detail::fmt_v(vt_lo) + " .. " + detail::fmt_v(vt_hi) + " V");
  }
  return reports;
}

/// The slice whose drain bias is closest to `v_ds`.
inline const ExtractionReport& nearest_slice(const std::vector<ExtractionReport>& slices, double v_ds) {
  require(!slices.empty(), Errc::InvalidArgument, "no g_ds slices");
  return *std::min_element(slices.begin(), slices.end(), [&](const auto& a, const auto& b) {
    return std::abs(a.v_ds - v_ds) < std::abs(b.v_ds - v_ds);
  });
}

// ---------------------------------------------------------------------------
// Series resistance

struct RsdOutputResistance {
  Estimate r_sd;            // ohm, intercept of R_tot vs 1/(V_gs - V_T)
  double min_r_tot = 0.0;   // ohm, smallest measured total resistance
  LineFit fit;
  SampledCurve r_tot;       // ohm vs 1/(V_gs - v_t_hint), ascending
  std::vector<std::string> diagnostics;
};

/// Total resistance 1/g_ds at the lowest V_ds of each sweep, extrapolated to
/// infinite gate overdrive. The intercept is R_sd + theta/beta0, an upper bound on R_sd.
inline RsdOutputResistance rsd_output_resistance(const DrainSweepFamily& family, double v_t_hint) {
  family.validate();
  require(std::isfinite(v_t_hint), Errc::InvalidArgument, "v_t hint must be finite");
  std::vector<std::pair<double, double>> pts;  // (1/(V_gs - V_T), R_tot)
  std::vector<std::string> diagnostics;
  for (const auto& s : family.sweeps) {
    if (s.v_gs <= v_t_hint) continue;
    if (s.points.size() < 3) {
      diagnostics.push_back("sweep at V_gs = " + detail::fmt_v(s.v_gs) + " V has fewer than 3 points, skipped");
      continue;
    }
    const SampledCurve c(s.v_ds(), s.i_ds());
    const double g0 = first_derivative(c).y(0);
    if (!(g0 > 0.0)) {
      diagnostics.push_back("g_ds <= 0 at V_gs = " + detail::fmt_v(s.v_gs) + " V, skipped");
      continue;
    }
    pts.emplace_back(1.0 / (s.v_gs - v_t_hint), 1.0 / g0);
  }
  require(pts.size() >= 3, Errc::InsufficientGateValues,
          "need at least 3 gate voltages above the V_T hint, have " + std::to_string(pts.size()));
  std::sort(pts.begin(), pts.end());
  std::vector<double> u;
  std::vector<double> r;
  for (const auto& [a, b] : pts) {
    u.push_back(a);
    r.push_back(b);
  }
  RsdOutputResistance out{.r_sd = {},
                          .min_r_tot = *std::min_element(r.begin(), r.end()),
                          .fit = {},
                          .r_tot = SampledCurve(u, r),
                          .diagnostics = std::move(diagnostics)};
  out.fit = fit_line(out.r_tot);
  out.r_sd = {out.fit.intercept, out.fit.sigma_intercept};
  out.diagnostics.push_back("intercept equals R_sd + theta/beta0 and upper-bounds R_sd");
  return out;
}

struct DeviceSweep {
  double l_mask = 0.0;  // m
  GateSweep sweep;
};

struct ChannelResistanceLine {
  double v_gs = 0.0;
  double slope = 0.0;      // ohm/m
  double intercept = 0.0;  // ohm
};

struct RsdIntersection {
  double r_sd = 0.0;     // ohm
  double delta_l = 0.0;  // m
  double rms_miss = 0.0; // ohm, RMS vertical distance of the lines from the point
  std::vector<ChannelResistanceLine> lines;
};

/// R_ch = V_ds / I_ds is linear in the mask length at each gate voltage; all
/// lines pass through (delta_L, R_sd). The common point is found by least
/// squares on the vertical distances.
inline RsdIntersection rsd_channel_length_intersection(const std::vector<DeviceSweep>& devices) {
  std::vector<double> lengths;
  for (const auto& d : devices) {
    require(std::isfinite(d.l_mask) && d.l_mask > 0.0, Errc::InvalidArgument, "mask length must be > 0");
    d.sweep.validate();
    require(d.sweep.v_ds > 0.0, Errc::InvalidArgument, "channel resistance needs v_ds > 0");
    lengths.push_back(d.l_mask);
  }
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
  require(lengths.size() >= 2, Errc::InsufficientDevices, "need at least 2 distinct mask lengths");

  // gate voltages conducting in every device
  constexpr double kSameGate = 1e-9;
  std::vector<double> common;
  for (const auto& p : devices.front().sweep.points) {
    bool everywhere = p.i > 0.0;
    for (std::size_t d = 1; d < devices.size() && everywhere; ++d) {
      const auto& pts = devices[d].sweep.points;
      everywhere = std::any_of(pts.begin(), pts.end(),
                               [&](const IvPoint& q) { return std::abs(q.v - p.v) <= kSameGate && q.i > 0.0; });
    }
    if (everywhere) common.push_back(p.v);
  }
  require(common.size() >= 2, Errc::InsufficientGateValues, "need at least 2 conducting gate voltages shared by all devices");

  RsdIntersection out;
  const double l_scale = lengths.back();
  for (double vg : common) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(devices.size());
    for (const auto& d : devices) {
      const auto it = std::find_if(d.sweep.points.begin(), d.sweep.points.end(),
                                   [&](const IvPoint& q) { return std::abs(q.v - vg) <= kSameGate; });
      const double x = d.l_mask / l_scale;
      const double y = d.sweep.v_ds / it->i;
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.lines.push_back({vg, slope / l_scale, (sy - slope * sx) / n});
  }

  // minimize sum_i (m_i x + b_i - y)^2 over (x, y), x in units of l_scale
  double smm = 0, sm = 0, smb = 0, sb = 0;
  for (const auto& ln : out.lines) {
    const double m = ln.slope * l_scale;
    smm += m * m;
    sm += m;
    smb += m * ln.intercept;
    sb += ln.intercept;
  }
  const auto n = static_cast<double>(out.lines.size());
  const double det = n * smm - sm * sm;
  require(det > 1e-12 * n * smm, Errc::ParallelLines,
          "channel-resistance lines are parallel; use gate voltages further apart");
  const double x = (sm * sb - n * smb) / det;
  const double y = (smm * sb - sm * smb) / det;
  out.delta_l = x * l_scale;
  out.r_sd = y;
  double miss = 0;
  for (const auto& ln : out.lines) {
    const double r = ln.slope * out.delta_l + ln.intercept - out.r_sd;
    miss += r * r;
  }
  out.rms_miss = std::sqrt(miss / n);
  return out;
}

// ---------------------------------------------------------------------------
// Threshold shifts between conditions

struct ShiftRow {
  std::string label;
  Method method = Method::PeakGm;
  double v_t = 0.0;
  double reference_v_t = 0.0;
  double delta_v_t = 0.0;  // positive = threshold increased relative to the reference
};

struct ShiftTable {
  std::string reference_label;
  std::vector<ShiftRow> rows;
  std::vector<std::string> diagnostics;
};

inline ShiftTable compare_reports(const std::vector<ExtractionReport>& reports, const std::string& reference_label) {
  require(reports.size() >= 2, Errc::InvalidArgument, "comparison needs at least 2 reports");
  ShiftTable table;
  table.reference_label = reference_label;
  const auto is_ref = [&](const ExtractionReport& r) { return r.label == reference_label; };
  require(std::any_of(reports.begin(), reports.end(), is_ref), Errc::MissingReference,
          "no report labelled '" + reference_label + "'");
  for (const auto& r : reports) {
    const auto ref = std::find_if(reports.begin(), reports.end(),
                                  [&](const ExtractionReport& c) { return is_ref(c) && c.method == r.method; });
    if (ref == reports.end()) {
      table.diagnostics.push_back("no " + std::string(method_name(r.method)) + " reference for '" + r.label + "'");
      continue;
    }
    table.rows.push_back({r.label, r.method, r.v_t.value, ref->v_t.value, r.v_t.value - ref->v_t.value});
  }
  return table;
}

}  // namespace egfet
