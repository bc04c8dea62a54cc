#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqnc/covariance.hpp"
#include "cqnc/params.hpp"
#include "cqnc/spectra.hpp"
#include "cqnc/units.hpp"

namespace cqnc {

// Joint-fit parameter vector: one apparatus shared across all traces,
// except that each detuning group carries its own delta_a and each trace
// its own detection angle psi.
struct FitParams {
  double kappa_a = 0.0;  // [rad/s]
  double kappa_c = 0.0;  // [rad/s]
  double delta_c = 0.0;  // [rad/s]
  double g_bs = 0.0;     // [rad/s]
  double g_dc = 0.0;     // [rad/s]
  double eta = 1.0;      // detection efficiency in [0, 1]
  std::vector<double> delta_a;  // [rad/s], one per detuning group
  std::vector<double> psi;      // [rad] in [0, pi), one per trace
  GVariant variant = GVariant::AsPrinted;

  [[nodiscard]] double g_a() const { return g_bs + g_dc; }

  [[nodiscard]] EnmoParams enmo_at(std::size_t group) const {
    if (group >= delta_a.size())
      throw std::out_of_range("FitParams: detuning group " +
                              std::to_string(group) + " of " +
                              std::to_string(delta_a.size()));
    EnmoParams p;
    p.meter = {kappa_c, delta_c, {}};
    p.ancilla = {kappa_a, delta_a[group], {}};
    p.coupling = {g_bs, g_dc};
    p.g_strength_variant = variant;
    return p;
  }

  void validate() const {
    require_positive(kappa_a, "FitParams.kappa_a");
    require_positive(kappa_c, "FitParams.kappa_c");
    require_finite(delta_c, "FitParams.delta_c");
    require_nonnegative(g_bs, "FitParams.g_bs");
    require_nonnegative(g_dc, "FitParams.g_dc");
    require_finite(eta, "FitParams.eta");
    if (eta < 0.0 || eta > 1.0)
      throw std::invalid_argument("FitParams.eta must lie in [0, 1]");
    if (delta_a.empty())
      throw std::invalid_argument("FitParams: need at least one delta_a");
    for (const double d : delta_a) require_finite(d, "FitParams.delta_a");
    for (const double ps : psi) {
      require_finite(ps, "FitParams.psi");
      if (ps < 0.0 || ps >= pi)
        throw std::invalid_argument("FitParams.psi must lie in [0, pi)");
    }
  }
};

// Canonical representative of a detection angle in [0, pi).
[[nodiscard]] inline double fold_angle(double psi) {
  double p = std::fmod(psi, pi);
  if (p < 0.0) p += pi;
  return p;
}

// Homodyne variance the fit model predicts for detuning group `group` at
// angular frequency omega and detection angle psi: the oscillator
// covariance rotated to the detection frame, mixed with vacuum by the
// detection efficiency, read out on its phase quadrature.
[[nodiscard]] inline double model_variance(const FitParams& p,
                                           std::size_t group, double omega,
                                           double psi) {
  const Covariance2 sigma = enmo_covariance(p.enmo_at(group), omega);
  return variance_at_angle(apply_loss(rotate_covariance(sigma, psi), p.eta),
                           0.0);
}

// Single-group convenience overload.
[[nodiscard]] inline double model_variance(const FitParams& p, double omega,
                                           double psi) {
  if (p.delta_a.size() != 1)
    throw std::invalid_argument(
        "model_variance: parameter set has several detuning groups, "
        "specify which one");
  return model_variance(p, 0, omega, psi);
}

}  // namespace cqnc
