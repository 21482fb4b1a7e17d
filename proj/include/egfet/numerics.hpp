#pragma once

// Grid differentiation, local quadratic smoothing and windowed least-squares
// line fits. Stencils use the actual grid spacing, so dropped points in an
// otherwise uniform sweep are handled without resampling.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "egfet/errors.hpp"

namespace egfet {

/// y sampled on a strictly increasing x grid.
class SampledCurve {
 public:
  SampledCurve() = default;

  SampledCurve(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    require(x_.size() == y_.size(), Errc::InvalidArgument, "curve x and y lengths differ");
    require(x_.size() >= 2, Errc::TooFewPoints, "curve needs at least 2 points");
    for (std::size_t k = 0; k < x_.size(); ++k) {
      require(std::isfinite(x_[k]) && std::isfinite(y_[k]), Errc::InvalidArgument,
              "curve has a non-finite value at index " + std::to_string(k));
      if (k > 0)
        require(x_[k] > x_[k - 1], Errc::NonMonotoneGrid,
                "curve grid not strictly increasing at index " + std::to_string(k));
    }
  }

  std::size_t size() const { return x_.size(); }
  std::span<const double> x() const { return x_; }
  std::span<const double> y() const { return y_; }
  double x(std::size_t k) const { return x_[k]; }
  double y(std::size_t k) const { return y_[k]; }

  friend bool operator==(const SampledCurve&, const SampledCurve&) = default;

 private:
  std::vector<double> x_;
  std::vector<double> y_;
};

/// Half-open index range [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool contains(const IndexRange& other) const { return other.begin >= begin && other.end <= end; }

  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Ordinary least-squares straight line with its covariance.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double x_intercept = 0.0;
  double r_squared = 0.0;
  IndexRange window;
  double sigma_slope = 0.0;
  double sigma_intercept = 0.0;
  double sigma_x_intercept = 0.0;
  double cov_slope_intercept = 0.0;

  double operator()(double x) const { return slope * x + intercept; }
};

// ---------------------------------------------------------------------------
// Differentiation

/// dy/dx: three-point interior stencil, one-sided three-point stencils at the
/// ends (second order on uniform grids). Output grid equals the input grid.
inline SampledCurve first_derivative(const SampledCurve& curve) {
  const std::size_t n = curve.size();
  require(n >= 3, Errc::TooFewPoints, "first derivative needs at least 3 points");
  const auto x = curve.x();
  const auto y = curve.y();
  // written on divided differences so constant data differentiates to exactly zero
  const auto slope = [&](std::size_t i) { return (y[i + 1] - y[i]) / (x[i + 1] - x[i]); };
  std::vector<double> d(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = x[i] - x[i - 1];
    const double h2 = x[i + 1] - x[i];
    d[i] = (h2 * slope(i - 1) + h1 * slope(i)) / (h1 + h2);
  }
  {
    const double h1 = x[1] - x[0];
    const double h2 = x[2] - x[1];
    d[0] = slope(0) - h1 * (slope(1) - slope(0)) / (h1 + h2);
  }
  {
    const double h1 = x[n - 2] - x[n - 3];
    const double h2 = x[n - 1] - x[n - 2];
    d[n - 1] = slope(n - 2) + h2 * (slope(n - 2) - slope(n - 3)) / (h1 + h2);
  }
  return SampledCurve(std::vector<double>(x.begin(), x.end()), std::move(d));
}

/// d2y/dx2 at interior points only; the first and last grid points are dropped.
inline SampledCurve second_derivative(const SampledCurve& curve) {
  const std::size_t n = curve.size();
  require(n >= 5, Errc::TooFewPoints, "second derivative needs at least 5 points");
  const auto x = curve.x();
  const auto y = curve.y();
  std::vector<double> xs;
  std::vector<double> d;
  xs.reserve(n - 2);
  d.reserve(n - 2);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = x[i] - x[i - 1];
    const double h2 = x[i + 1] - x[i];
    xs.push_back(x[i]);
    d.push_back(2.0 * ((y[i + 1] - y[i]) / h2 - (y[i] - y[i - 1]) / h1) / (h1 + h2));
  }
  return SampledCurve(std::move(xs), std::move(d));
}

// ---------------------------------------------------------------------------
// Smoothing

namespace detail {

/// Value at t = 0 of the least-squares quadratic through (t_k, y_k).
inline double quadratic_value_at_origin(std::span<const double> t, std::span<const double> y) {
  std::array<double, 5> m{};  // sum t^0 .. t^4
  std::array<double, 3> r{};  // sum y t^0 .. y t^2
  for (std::size_t k = 0; k < t.size(); ++k) {
    double p = 1.0;
    for (int j = 0; j < 5; ++j) {
      if (j < 3) r[j] += y[k] * p;
      m[j] += p;
      p *= t[k];
    }
  }
  // Normal equations [m0 m1 m2; m1 m2 m3; m2 m3 m4] c = r, solved for c0 by Cramer's rule.
  const auto det3 = [](double a, double b, double c, double d, double e, double f, double g, double h, double i) {
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
  };
  const double det = det3(m[0], m[1], m[2], m[1], m[2], m[3], m[2], m[3], m[4]);
  const double num = det3(r[0], m[1], m[2], r[1], m[2], m[3], r[2], m[3], m[4]);
  return num / det;
}

}  // namespace detail

/// Moving least-squares quadratic: each point is replaced by the value at that
/// point of a quadratic fitted over `window_points` neighbours (the window is
/// shifted inward near the ends). Reproduces quadratics exactly; 1 = identity.
inline SampledCurve smooth(const SampledCurve& curve, int window_points) {
  const std::size_t n = curve.size();
  require(window_points >= 1 && window_points % 2 == 1, Errc::BadWindow,
          "smoothing window must be an odd integer >= 1");
  require(static_cast<std::size_t>(window_points) <= n, Errc::BadWindow, "smoothing window longer than the curve");
  if (window_points <= 3) return curve;  // a quadratic through 3 points interpolates them

  const auto w = static_cast<std::size_t>(window_points);
  const std::size_t half = w / 2;
  const auto x = curve.x();
  const auto y = curve.y();
  std::vector<double> out(n);
  std::vector<double> t(w);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i >= half ? i - half : 0;
    lo = std::min(lo, n - w);
    double scale = 0.0;
    for (std::size_t k = 0; k < w; ++k) scale = std::max(scale, std::abs(x[lo + k] - x[i]));
    for (std::size_t k = 0; k < w; ++k) t[k] = (x[lo + k] - x[i]) / scale;
    out[i] = detail::quadratic_value_at_origin(t, y.subspan(lo, w));
  }
  return SampledCurve(std::vector<double>(x.begin(), x.end()), std::move(out));
}

// ---------------------------------------------------------------------------
// Line fitting

inline LineFit fit_line(const SampledCurve& curve, IndexRange window) {
  require(window.end <= curve.size() && window.begin < window.end, Errc::BadWindow,
          "fit window outside the curve");
  require(window.size() >= 3, Errc::BadWindow, "fit window needs at least 3 points");
  const auto x = curve.x().subspan(window.begin, window.size());
  const auto y = curve.y().subspan(window.begin, window.size());
  const auto n = static_cast<double>(window.size());

  double xm = 0.0;
  double ym = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    xm += x[k];
    ym += y[k];
  }
  xm /= n;
  ym /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = x[k] - xm;
    const double dy = y[k] - ym;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  require(sxx > 0.0, Errc::DegenerateWindow, "zero x-variance in fit window");
  require(syy > 0.0 && sxy != 0.0, Errc::DegenerateWindow, "flat data in fit window has no x-intercept");

  LineFit fit;
  fit.window = window;
  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;
  double ssr = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - (fit.slope * x[k] + fit.intercept);
    ssr += r * r;
  }
  fit.r_squared = std::clamp(1.0 - ssr / syy, 0.0, 1.0);
  fit.x_intercept = -fit.intercept / fit.slope;

  const double s2 = ssr / (n - 2.0);
  const double var_slope = s2 / sxx;
  const double var_intercept = s2 * (1.0 / n + xm * xm / sxx);
  fit.cov_slope_intercept = -xm * s2 / sxx;
  fit.sigma_slope = std::sqrt(var_slope);
  fit.sigma_intercept = std::sqrt(var_intercept);
  const double m = fit.slope;
  const double b = fit.intercept;
  const double var_x0 = var_intercept / (m * m) + b * b / (m * m * m * m) * var_slope -
                        2.0 * b / (m * m * m) * fit.cov_slope_intercept;
  fit.sigma_x_intercept = std::sqrt(std::max(var_x0, 0.0));
  return fit;
}

inline LineFit fit_line(const SampledCurve& curve) { return fit_line(curve, {0, curve.size()}); }

/// r^2 values closer than this are treated as ties.
inline constexpr double kRSquaredTieTolerance = 1e-12;

/// Contiguous window of at least `min_points` inside `search` that maximizes
/// the fit r^2; ties go to the longer window, then to the one further along x.
inline IndexRange auto_window(const SampledCurve& curve, std::size_t min_points, IndexRange search) {
  require(min_points >= 6, Errc::InvalidArgument, "auto window needs min_points >= 6");
  require(search.end <= curve.size(), Errc::BadWindow, "search range outside the curve");
  require(search.size() >= min_points, Errc::TooFewPoints,
          "only " + std::to_string(search.size()) + " points available, need " + std::to_string(min_points));

  bool found = false;
  IndexRange best;
  double best_r2 = -1.0;
  for (std::size_t b = search.begin; b + min_points <= search.end; ++b) {
    for (std::size_t e = b + min_points; e <= search.end; ++e) {
      double r2 = 0.0;
      try {
        r2 = fit_line(curve, {b, e}).r_squared;
      } catch (const Error& err) {
        if (err.code() == Errc::DegenerateWindow) continue;
        throw;
      }
      const IndexRange cand{b, e};
      bool better = false;
      if (!found || r2 > best_r2 + kRSquaredTieTolerance) {
        better = true;
      } else if (std::abs(r2 - best_r2) <= kRSquaredTieTolerance) {
        better = cand.size() > best.size() || (cand.size() == best.size() && cand.begin > best.begin);
      }
      if (better) {
        // keep the reference r^2 at the true maximum so tolerance bands do not drift
        best_r2 = found ? std::max(best_r2, r2) : r2;
        best = cand;
        found = true;
      }
    }
  }
  require(found, Errc::DegenerateWindow, "every candidate window is degenerate");
  return best;
}

inline IndexRange auto_window(const SampledCurve& curve, std::size_t min_points) {
  return auto_window(curve, min_points, {0, curve.size()});
}

}  // namespace egfet
