#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

// Unit conventions used throughout the library:
//  * every stored frequency, linewidth, detuning and coupling rate is
//    angular [rad/s]; file and CLI interfaces speak Hz and convert here
//  * spectra are symmetrized and vacuum-normalized so that shot noise
//    sits at 1/2 in linear units
//  * dB values are relative to shot noise: db = 10 log10(S / (1/2))

namespace cqnc {

inline constexpr double pi = 3.1415926535897932384626433832795;
inline constexpr double two_pi = 6.283185307179586476925286766559;

// Shot-noise floor of a vacuum-normalized symmetrized spectrum.
inline constexpr double vacuum_variance = 0.5;

[[nodiscard]] inline double rad_from_hz(double f_hz) { return two_pi * f_hz; }
[[nodiscard]] inline double hz_from_rad(double w) { return w / two_pi; }

// Linear spectrum value (vacuum = 1/2) from dB relative to shot noise.
[[nodiscard]] inline double linear_from_db_rel_shot(double db) {
  return vacuum_variance * std::pow(10.0, db / 10.0);
}

// dB relative to shot noise from a linear value (vacuum = 1/2).
[[nodiscard]] inline double db_rel_shot_from_linear(double s) {
  if (!(s > 0.0)) {
    throw std::domain_error("db_rel_shot_from_linear: value must be > 0, got " +
                            std::to_string(s));
  }
  return 10.0 * std::log10(s / vacuum_variance);
}

inline void require_finite(double x, const char* name) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument(std::string(name) + " must be finite, got " +
                                std::to_string(x));
  }
}

inline void require_positive(double x, const char* name) {
  require_finite(x, name);
  if (!(x > 0.0)) {
    throw std::invalid_argument(std::string(name) + " must be > 0, got " +
                                std::to_string(x));
  }
}

inline void require_nonnegative(double x, const char* name) {
  require_finite(x, name);
  if (x < 0.0) {
    throw std::invalid_argument(std::string(name) + " must be >= 0, got " +
                                std::to_string(x));
  }
}

}  // namespace cqnc
