#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cqnc/units.hpp"

namespace cqnc {

// Single-mode squeezer seen through detection efficiency eta:
//   V+- = eta e^{+-2r} + (1 - eta)
// in vacuum-normalized units (V = S / (1/2), vacuum = 1).
struct SqueezerEfficiency {
  double eta = 0.0;  // detection efficiency in (0, 1]
  double r = 0.0;    // squeezing parameter, r > 0
};

struct SqueezerVariances {
  double v_plus = 0.0;   // anti-squeezed quadrature, > 1
  double v_minus = 0.0;  // squeezed quadrature, < 1
};

[[nodiscard]] inline SqueezerVariances squeezer_variances(double eta,
                                                          double r) {
  require_finite(eta, "eta");
  require_finite(r, "r");
  if (eta <= 0.0 || eta > 1.0)
    throw std::invalid_argument("squeezer_variances: eta must be in (0, 1]");
  return {eta * std::exp(2.0 * r) + (1.0 - eta),
          eta * std::exp(-2.0 * r) + (1.0 - eta)};
}

// Inverts the two-variance model for (eta, r) in closed form.  With
// u = 1 - eta, the model gives (V+ - u)(V- - u) = (1 - u)^2, linear in u:
//   u = (V+ V- - 1) / (V+ + V- - 2).
// A pair with V+ V- < 1 (more squeezing than anti-squeezing) would need
// eta > 1 and is rejected; V+ V- = 1 is the lossless pure state.
[[nodiscard]] inline SqueezerEfficiency infer_efficiency_from_squeezing(
    double sqz_db, double antisqz_db) {
  require_finite(sqz_db, "sqz_db");
  require_finite(antisqz_db, "antisqz_db");
  if (!(sqz_db < 0.0) || !(antisqz_db > 0.0))
    throw std::invalid_argument(
        "infer_efficiency_from_squeezing: need sqz_db < 0 and antisqz_db > 0 "
        "(got " + std::to_string(sqz_db) + " dB, " +
        std::to_string(antisqz_db) + " dB); the input is not a squeezer");
  const double v_plus = std::pow(10.0, antisqz_db / 10.0);
  const double v_minus = std::pow(10.0, sqz_db / 10.0);
  // A pure state sits exactly on V+ V- = 1; the two pow() calls can land a
  // few ulps below it, so reject only violations beyond rounding.
  if (v_plus * v_minus < 1.0 - 1e-12)
    throw std::invalid_argument(
        "infer_efficiency_from_squeezing: squeezing exceeds anti-squeezing "
        "(V+ V- = " + std::to_string(v_plus * v_minus) +
        " < 1), which would require efficiency above 1");
  // V+ > 1 > V- makes the denominator strictly positive; the clamp keeps
  // the boundary case at eta = 1 instead of a hair above.
  const double u =
      std::max(0.0, (v_plus * v_minus - 1.0) / (v_plus + v_minus - 2.0));
  const double eta = 1.0 - u;
  return {eta, 0.5 * std::log((v_plus - u) / eta)};
}

}  // namespace cqnc
