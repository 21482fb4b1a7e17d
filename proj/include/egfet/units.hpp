#pragma once

// Unit handling at the I/O boundary. Everything inside the library is SI
// (V, A, m, F/m^2, m^2/(V s), ohm); files and flags use the lab conventions
// cm^2/(V s) for mobility and F/cm^2 for oxide capacitance.

#include <charconv>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

#include "egfet/errors.hpp"

namespace egfet::units {

inline constexpr double kCm2PerM2 = 1e4;

inline double mobility_to_cm2(double mu_si) { return mu_si * kCm2PerM2; }
inline double mobility_from_cm2(double mu_cm2) { return mu_cm2 / kCm2PerM2; }
inline double cox_to_f_per_cm2(double cox_si) { return cox_si / kCm2PerM2; }
inline double cox_from_f_per_cm2(double cox_cm2) { return cox_cm2 * kCm2PerM2; }
inline double um_to_m(double um) { return um / 1e6; }
inline double m_to_um(double m) { return m * 1e6; }

enum class Quantity { Voltage, Current };

/// Decimal exponent of a column unit, or nullopt when the unit is not in the
/// accepted set for that quantity.
inline std::optional<int> decimal_exponent(Quantity q, std::string_view unit) {
  if (q == Quantity::Voltage) {
    if (unit == "V") return 0;
    if (unit == "mV") return -3;
    return std::nullopt;
  }
  if (unit == "A") return 0;
  if (unit == "mA") return -3;
  if (unit == "uA") return -6;
  if (unit == "nA") return -9;
  return std::nullopt;
}

inline std::optional<double> parse_double(std::string_view token) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r'))
    token.remove_suffix(1);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

/// Parses a decimal literal and multiplies it by 10^shift without an extra
/// rounding step: the exponent is adjusted textually, so "0.0314" with shift -3
/// yields exactly the double nearest to 3.14e-5.
inline std::optional<double> parse_scaled(std::string_view token, int shift) {
  if (shift == 0) return parse_double(token);
  std::string text(token);
  while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.pop_back();
  std::size_t e = text.find_first_of("eE");
  long exponent = 0;
  std::string mantissa = text;
  if (e != std::string::npos) {
    mantissa = text.substr(0, e);
    auto exp_value = parse_double(std::string_view(text).substr(e + 1));
    if (!exp_value || *exp_value != static_cast<long>(*exp_value)) return std::nullopt;
    exponent = static_cast<long>(*exp_value);
  }
  auto mant = parse_double(mantissa);
  if (!mant) return std::nullopt;
  if (mantissa.find_first_not_of(" +-0123456789.") != std::string::npos) {
    // nan / inf: scaling is meaningless, keep the special value
    return mant;
  }
  return parse_double(mantissa + "e" + std::to_string(exponent + shift));
}

/// 17 significant digits: enough to round-trip any double.
inline std::string format17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace egfet::units
