#pragma once

// Measured or synthesized I-V records.

#include <cmath>
#include <string>
#include <vector>

#include "egfet/errors.hpp"

namespace egfet {

/// One sample of a sweep: the swept voltage and the drain current.
struct IvPoint {
  double v = 0.0;
  double i = 0.0;

  friend bool operator==(const IvPoint&, const IvPoint&) = default;
};

namespace detail {

inline void validate_points(const std::vector<IvPoint>& points, const char* what) {
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    require(std::isfinite(p.v) && std::isfinite(p.i), Errc::InvalidArgument,
            std::string(what) + ": non-finite sample at index " + std::to_string(k));
    require(p.i >= 0.0, Errc::InvalidArgument,
            std::string(what) + ": negative current at index " + std::to_string(k));
    if (k > 0)
      require(p.v > points[k - 1].v, Errc::NonMonotoneGrid,
              std::string(what) + ": voltage grid not strictly increasing at index " +
                  std::to_string(k));
  }
}

inline std::vector<double> column(const std::vector<IvPoint>& points, bool current) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(current ? p.i : p.v);
  return out;
}

}  // namespace detail

/// I_ds versus V_gs at a fixed drain bias.
struct GateSweep {
  double v_ds = 0.0;
  std::vector<IvPoint> points;  // v = V_gs
  std::string label;
  std::vector<std::string> diagnostics;

  std::size_t size() const { return points.size(); }
  std::vector<double> v_gs() const { return detail::column(points, false); }
  std::vector<double> i_ds() const { return detail::column(points, true); }

  void validate() const {
    require(std::isfinite(v_ds) && v_ds >= 0.0, Errc::InvalidArgument, "gate sweep: v_ds must be >= 0");
    detail::validate_points(points, "gate sweep");
  }
};

/// I_ds versus V_ds at one gate voltage.
struct DrainSweep {
  double v_gs = 0.0;
  std::vector<IvPoint> points;  // v = V_ds

  std::vector<double> v_ds() const { return detail::column(points, false); }
  std::vector<double> i_ds() const { return detail::column(points, true); }
};

/// Output characteristics at several gate voltages, sorted by v_gs.
struct DrainSweepFamily {
  std::vector<DrainSweep> sweeps;
  std::string label;
  std::vector<std::string> diagnostics;

  std::size_t size() const { return sweeps.size(); }

  std::vector<double> gate_voltages() const {
    std::vector<double> out;
    for (const auto& s : sweeps) out.push_back(s.v_gs);
    return out;
  }

  void validate() const {
    for (std::size_t k = 0; k < sweeps.size(); ++k) {
      detail::validate_points(sweeps[k].points, "drain sweep");
      if (k > 0)
        require(sweeps[k].v_gs > sweeps[k - 1].v_gs, Errc::InconsistentFamily,
                "drain family: gate voltages must be distinct and sorted");
    }
  }
};

}  // namespace egfet
