#pragma once

#include <cmath>

namespace impedancemetry {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// SI prefixes used throughout; all internal quantities are SI base units.
inline constexpr double kMilli = 1e-3;
inline constexpr double kMicro = 1e-6;
inline constexpr double kNano = 1e-9;
inline constexpr double kPico = 1e-12;
inline constexpr double kFemto = 1e-15;
inline constexpr double kAtto = 1e-18;
inline constexpr double kKilo = 1e3;
inline constexpr double kMega = 1e6;
inline constexpr double kGiga = 1e9;

inline double db_to_linear(double db) { return std::pow(10.0, db / 20.0); }
inline double linear_to_db(double g) { return 20.0 * std::log10(g); }
inline double power_to_db(double p) { return 10.0 * std::log10(p); }

inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

}  // namespace impedancemetry
