#pragma once

// Forward linear-region FET model with mobility degradation (theta) and a
// symmetric source/drain series resistance (R_s = R_d = R_sd / 2).

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "egfet/errors.hpp"
#include "egfet/sweep.hpp"

namespace egfet {

/// Geometry and oxide capacitance, SI units (m, m, F/m^2).
struct DeviceSpec {
  double width = 0.0;
  double length = 0.0;
  double c_ox = 0.0;

  double aspect_ratio() const { return width / length; }

  void validate() const {
    require(std::isfinite(width) && width > 0.0, Errc::InvalidArgument, "device width must be > 0");
    require(std::isfinite(length) && length > 0.0, Errc::InvalidArgument, "device length must be > 0");
    require(std::isfinite(c_ox) && c_ox > 0.0, Errc::InvalidArgument, "oxide capacitance must be > 0");
    require(std::isfinite(aspect_ratio()), Errc::InvalidArgument, "aspect ratio must be finite");
  }

  /// 4.5 um / 1.5 um dual-poly device with 57.8 nF/cm^2 coupling capacitance.
  static DeviceSpec reference_egfet() { return {4.5e-6, 1.5e-6, 57.8e-9 * 1e4}; }
};

/// The extractable parameters of one device in one solution.
struct ModelParams {
  double v_t = 0.0;    // V
  double mu_0 = 0.0;   // m^2/(V s)
  double theta = 0.0;  // 1/V
  double r_sd = 0.0;   // ohm

  double r_s() const { return r_sd / 2.0; }
  double r_d() const { return r_sd - r_s(); }

  void validate() const {
    require(std::isfinite(v_t), Errc::InvalidArgument, "v_t must be finite");
    require(std::isfinite(mu_0) && mu_0 > 0.0, Errc::InvalidArgument, "mu_0 must be > 0");
    require(std::isfinite(theta) && theta >= 0.0, Errc::InvalidArgument, "theta must be >= 0");
    require(std::isfinite(r_sd) && r_sd >= 0.0, Errc::InvalidArgument, "r_sd must be >= 0");
  }
};

/// Extrinsic terminal voltages.
struct BiasPoint {
  double v_gs = 0.0;
  double v_ds = 0.0;

  void validate() const {
    require(std::isfinite(v_gs) && std::isfinite(v_ds), Errc::InvalidArgument, "bias must be finite");
    require(v_ds >= 0.0, Errc::InvalidArgument, "v_ds must be >= 0 (n-channel linear region)");
  }
};

/// Conductance factor mu_0 * C_ox * W / L in A/V^2.
class Beta0 {
 public:
  explicit Beta0(double value) : value_(value) {
    require(std::isfinite(value) && value > 0.0, Errc::InvalidArgument, "beta0 must be > 0");
  }
  double value() const { return value_; }

 private:
  double value_;
};

inline Beta0 beta0(const DeviceSpec& spec, const ModelParams& params) {
  spec.validate();
  params.validate();
  return Beta0(params.mu_0 * spec.c_ox * spec.aspect_ratio());
}

/// mu_0 implied by a conductance factor on a given device.
inline double mobility_from_beta0(double beta0_value, const DeviceSpec& spec) {
  return beta0_value / (spec.c_ox * spec.aspect_ratio());
}

namespace detail {

inline double overdrive(const ModelParams& params, const BiasPoint& bias) {
  params.validate();
  bias.validate();
  const double vov = bias.v_gs - params.v_t;
  require(vov > 0.0, Errc::BelowThreshold,
          "v_gs = " + std::to_string(bias.v_gs) + " V is not above v_t = " + std::to_string(params.v_t) + " V");
  return vov;
}

}  // namespace detail

/// Coefficients of a*I^2 - b*I + c = 0, obtained by clearing the denominator
/// of the implicit drain-current equation.
struct DrainCurrentQuadratic {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

inline DrainCurrentQuadratic drain_current_quadratic(const DeviceSpec& spec, const ModelParams& params,
                                                     const BiasPoint& bias) {
  const double vov = detail::overdrive(params, bias);
  const double b0 = beta0(spec, params).value();
  const double rs = params.r_s();
  const double k = params.theta + b0 * params.r_sd;
  return {rs * k, 1.0 + k * vov + b0 * rs * bias.v_ds, b0 * vov * bias.v_ds};
}

/// Right-hand side of the implicit equation I = f(I): drain current produced by
/// the intrinsic voltages left after the I*R_s and I*R_sd drops.
inline double implicit_current_map(const DeviceSpec& spec, const ModelParams& params, const BiasPoint& bias,
                                   double ids) {
  const double b0 = beta0(spec, params).value();
  const double v_gs_int = bias.v_gs - ids * params.r_s() - params.v_t;
  const double v_ds_int = bias.v_ds - ids * params.r_sd;
  return b0 * v_gs_int * v_ds_int / (1.0 + params.theta * v_gs_int);
}

/// Exact drain current: the root of the quadratic that vanishes with V_ds.
/// Evaluated as 2c / (b + sqrt(b^2 - 4ac)), which stays accurate when R_s -> 0.
inline double ids_implicit(const DeviceSpec& spec, const ModelParams& params, const BiasPoint& bias) {
  const auto q = drain_current_quadratic(spec, params, bias);
  const double disc = q.b * q.b - 4.0 * q.a * q.c;
  require(disc >= 0.0, Errc::NegativeDiscriminant, "bias outside model validity (negative discriminant)");
  return 2.0 * q.c / (q.b + std::sqrt(disc));
}

/// Closed-form root with the small-drain assumption (V_gs - V_T) R_sd >> R_s V_ds
/// applied, i.e. the beta0*R_s*V_ds term dropped from the linear coefficient.
inline double ids_closed_form(const DeviceSpec& spec, const ModelParams& params, const BiasPoint& bias) {
  const double vov = detail::overdrive(params, bias);
  const double b0 = beta0(spec, params).value();
  const double k = params.theta + b0 * params.r_sd;
  const double lin = 1.0 + k * vov;
  const double prod = params.r_s() * k * b0 * bias.v_ds * vov;
  const double disc = lin * lin - 4.0 * prod;
  require(disc >= 0.0, Errc::NegativeDiscriminant, "bias outside model validity (negative discriminant)");
  return 2.0 * b0 * bias.v_ds * vov / (lin + std::sqrt(disc));
}

/// First-order drain current: beta0 V_ds (V_gs - V_T) / (1 + (theta + beta0 R_sd)(V_gs - V_T)).
inline double ids_simplified(const DeviceSpec& spec, const ModelParams& params, const BiasPoint& bias) {
  const double vov = detail::overdrive(params, bias);
  const double b0 = beta0(spec, params).value();
  return b0 * bias.v_ds * vov / (1.0 + (params.theta + b0 * params.r_sd) * vov);
}

inline double gm_analytic(const DeviceSpec& spec, const ModelParams& params, const BiasPoint& bias) {
  const double vov = detail::overdrive(params, bias);
  const double b0 = beta0(spec, params).value();
  const double denom = 1.0 + (params.theta + b0 * params.r_sd) * vov;
  return b0 * bias.v_ds / (denom * denom);
}

/// Drain conductance of the first-order model; independent of V_ds.
inline double gds_analytic(const DeviceSpec& spec, const ModelParams& params, const BiasPoint& bias) {
  const double vov = detail::overdrive(params, bias);
  const double b0 = beta0(spec, params).value();
  return b0 * vov / (1.0 + (params.theta + b0 * params.r_sd) * vov);
}

/// Effective mobility at the intrinsic gate overdrive V_gs - I_ds R_s - V_T.
inline double mu_eff(const ModelParams& params, const BiasPoint& bias, double ids) {
  params.validate();
  return params.mu_0 / (1.0 + params.theta * (bias.v_gs - ids * params.r_s() - params.v_t));
}

// ---------------------------------------------------------------------------
// Synthetic measurements

enum class CurrentModel { Implicit, Simplified };

struct NoiseSpec {
  double relative_sigma = 0.0;  // multiplicative: I * (1 + sigma * z)
  std::uint64_t seed = 0;
};

namespace detail {

inline void validate_grid(std::span<const double> grid) {
  require(!grid.empty(), Errc::EmptyGrid, "voltage grid is empty");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    require(std::isfinite(grid[k]), Errc::InvalidArgument, "voltage grid has non-finite value");
    if (k > 0) require(grid[k] > grid[k - 1], Errc::InvalidArgument, "voltage grid must be strictly increasing");
  }
}

inline double model_current(CurrentModel model, const DeviceSpec& spec, const ModelParams& params,
                            const BiasPoint& bias) {
  if (bias.v_gs <= params.v_t) return 0.0;
  return model == CurrentModel::Implicit ? ids_implicit(spec, params, bias) : ids_simplified(spec, params, bias);
}

/// True when (V_gs - V_T) beta0 R_sd > beta0 R_s V_ds fails at an above-threshold bias.
inline bool small_drain_assumption_violated(const ModelParams& params, const BiasPoint& bias) {
  if (params.r_sd == 0.0 || bias.v_gs <= params.v_t) return false;
  return !((bias.v_gs - params.v_t) * params.r_sd > params.r_s() * bias.v_ds);
}

class NoiseSource {
 public:
  explicit NoiseSource(const NoiseSpec& noise) : sigma_(noise.relative_sigma), rng_(noise.seed) {
    require(std::isfinite(sigma_) && sigma_ >= 0.0, Errc::InvalidArgument, "noise must be >= 0");
  }

  double apply(double current) {
    if (sigma_ == 0.0) return current;
    const double z = normal_(rng_);
    const double noisy = current * (1.0 + sigma_ * z);
    return noisy > 0.0 ? noisy : 0.0;
  }

 private:
  double sigma_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace detail

/// Transfer characteristic on the given gate grid. Points at or below
/// threshold carry zero current (the model has no subthreshold branch).
inline GateSweep synth_gate_sweep(const DeviceSpec& spec, const ModelParams& params, double v_ds,
                                  std::span<const double> v_gs_grid, const NoiseSpec& noise = {},
                                  CurrentModel model = CurrentModel::Implicit) {
  spec.validate();
  params.validate();
  detail::validate_grid(v_gs_grid);
  BiasPoint{0.0, v_ds}.validate();

  detail::NoiseSource source(noise);
  GateSweep sweep;
  sweep.v_ds = v_ds;
  std::size_t violations = 0;
  for (double v_gs : v_gs_grid) {
    const BiasPoint bias{v_gs, v_ds};
    if (detail::small_drain_assumption_violated(params, bias)) ++violations;
    sweep.points.push_back({v_gs, source.apply(detail::model_current(model, spec, params, bias))});
  }
  if (violations > 0)
    sweep.diagnostics.push_back("small-drain assumption (V_gs - V_T) R_sd > R_s V_ds violated at " +
                                std::to_string(violations) + " point(s)");
  return sweep;
}

/// Output characteristics, one sweep per gate voltage; the noise stream runs
/// through the sweeps in gate order.
inline DrainSweepFamily synth_drain_sweep_family(const DeviceSpec& spec, const ModelParams& params,
                                                 std::span<const double> v_gs_list,
                                                 std::span<const double> v_ds_grid, const NoiseSpec& noise = {},
                                                 CurrentModel model = CurrentModel::Implicit) {
  spec.validate();
  params.validate();
  detail::validate_grid(v_gs_list);
  detail::validate_grid(v_ds_grid);
  require(v_ds_grid.front() >= 0.0, Errc::InvalidArgument, "v_ds grid must be >= 0");

  detail::NoiseSource source(noise);
  DrainSweepFamily family;
  std::size_t violations = 0;
  for (double v_gs : v_gs_list) {
    DrainSweep sweep;
    sweep.v_gs = v_gs;
    for (double v_ds : v_ds_grid) {
      const BiasPoint bias{v_gs, v_ds};
      if (detail::small_drain_assumption_violated(params, bias)) ++violations;
      sweep.points.push_back({v_ds, source.apply(detail::model_current(model, spec, params, bias))});
    }
    family.sweeps.push_back(std::move(sweep));
  }
  if (violations > 0)
    family.diagnostics.push_back("small-drain assumption (V_gs - V_T) R_sd > R_s V_ds violated at " +
                                 std::to_string(violations) + " point(s)");
  return family;
}

/// Inclusive arithmetic grid start, start+step, ..., up to stop (with a small
/// tolerance so that 0:4:0.1 has 41 points). Points are start + k*step.
inline std::vector<double> linear_grid(double start, double stop, double step) {
  require(std::isfinite(start) && std::isfinite(stop) && std::isfinite(step) && step > 0.0,
          Errc::InvalidArgument, "grid needs finite start/stop and step > 0");
  require(stop >= start, Errc::InvalidArgument, "grid stop must be >= start");
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> grid(n);
  for (std::size_t k = 0; k < n; ++k) grid[k] = start + static_cast<double>(k) * step;
  return grid;
}

}  // namespace egfet
