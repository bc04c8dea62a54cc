#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cqnc/params.hpp"

namespace cqnc {

// Equality is judged against |lhs - rhs| <= rel * max(|lhs|, |rhs|) + abs,
// tight by default because the matched quantities are engineered to be
// identical rather than merely close.  The hierarchy condition has no
// printed quantitative form; "much larger" defaults to a factor of 3.
struct MatchingTolerances {
  double rel = 1e-9;
  double abs = 1e-9;  // [rad/s]
  double hierarchy_threshold = 3.0;
};

struct MatchingCondition {
  std::string name;
  double lhs = 0.0;       // [rad/s], or a ratio for the hierarchy condition
  double rhs = 0.0;
  double residual = 0.0;  // signed lhs - rhs
  bool passed = false;
};

struct MatchingReport {
  std::vector<MatchingCondition> conditions;
  bool all_matched = false;
};

// Checks the cancellation conditions linking the oscillator to the sensor:
// the ancilla must sit at the mirrored mechanical frequency with the
// mechanical linewidth, be well resolved from its own linewidth, and the
// meter cavities and couplings must agree, with the coupling split balanced.
// Mismatches are findings, never errors.
[[nodiscard]] inline MatchingReport matching_report(
    const EnmoParams& enmo, const OmsParams& oms,
    const MatchingTolerances& tol = {}) {
  enmo.validate();
  oms.validate();

  const auto equal = [&tol](std::string name, double lhs,
                            double rhs) -> MatchingCondition {
    const double resid = lhs - rhs;
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    return {std::move(name), lhs, rhs, resid,
            std::abs(resid) <= tol.rel * scale + tol.abs};
  };

  MatchingReport rep;
  rep.conditions.push_back(equal("delta_a = -omega_m", enmo.ancilla.detuning,
                                 -oms.mech.omega_m));
  rep.conditions.push_back(
      equal("kappa_a = gamma_m", enmo.ancilla.kappa, oms.mech.gamma_m));

  const double ratio = std::abs(enmo.ancilla.detuning) / enmo.ancilla.kappa;
  rep.conditions.push_back({"|delta_a| >> kappa_a", ratio,
                            tol.hierarchy_threshold,
                            ratio - tol.hierarchy_threshold,
                            ratio >= tol.hierarchy_threshold});

  rep.conditions.push_back(
      equal("kappa_c = kappa_om", enmo.meter.kappa, oms.meter.kappa));
  rep.conditions.push_back(
      equal("g_bs + g_dc = g_om", enmo.g_a(), oms.g_om));
  rep.conditions.push_back(
      equal("g_bs = g_dc", enmo.coupling.g_bs, enmo.coupling.g_dc));

  rep.all_matched = true;
  for (const auto& c : rep.conditions) rep.all_matched &= c.passed;
  return rep;
}

}  // namespace cqnc
