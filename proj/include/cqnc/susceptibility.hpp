#pragma once

#include <complex>

#include "cqnc/params.hpp"
#include "cqnc/units.hpp"

namespace cqnc {

using complexd = std::complex<double>;

// Cavity susceptibility chi_c(w) = 1 / (kappa/2 - i (w + detuning)) [s].
// Peaks at w = -detuning with |chi| = 2/kappa.
[[nodiscard]] inline complexd chi_cavity(const CavityMode& m, double omega) {
  require_finite(omega, "omega");
  m.validate();
  return 1.0 / complexd(m.kappa / 2.0, -(omega + m.detuning));
}

// Mechanical susceptibility chi_m(w) = -1 / (gamma_m/2 - i (w - omega_m))
// [s].  The sign makes an ancilla with kappa_a = gamma_m and delta_a =
// -omega_m satisfy chi_m = -chi_a exactly, which is the cancellation
// condition.
[[nodiscard]] inline complexd chi_mech(const MechanicalMode& m, double omega) {
  require_finite(omega, "omega");
  m.validate();
  return -1.0 / complexd(m.gamma_m / 2.0, -(omega - m.omega_m));
}

// Measurement strength G = g^2 kappa |chi|^2 [rad/s].  On resonance of an
// undetuned cavity this is the familiar 4 g^2 / kappa.
[[nodiscard]] inline double measurement_strength(double g, double kappa,
                                                 double chi_mag_sq) {
  require_nonnegative(g, "g");
  require_positive(kappa, "kappa");
  require_nonnegative(chi_mag_sq, "chi_mag_sq");
  return g * g * kappa * chi_mag_sq;
}

// Oscillator measurement strength G_a(w) under the convention carried by
// the parameter set.  AsPrinted reads the strength off the ancilla mode,
// MeterAnalogy forms it the way the sensor strength G_om is formed, from
// the meter cavity.
[[nodiscard]] inline double enmo_measurement_strength(const EnmoParams& p,
                                                      double omega) {
  if (p.g_strength_variant == GVariant::AsPrinted) {
    const double c2 = std::norm(chi_cavity(p.ancilla, omega));
    return measurement_strength(p.g_a(), p.ancilla.kappa, c2);
  }
  const double c2 = std::norm(chi_cavity(p.meter, omega));
  return measurement_strength(p.g_a(), p.meter.kappa, c2);
}

// Sensor measurement strength G_om(w) = g_om^2 kappa_om |chi_om(w)|^2.
[[nodiscard]] inline double oms_measurement_strength(const OmsParams& p,
                                                     double omega) {
  const double c2 = std::norm(chi_cavity(p.meter, omega));
  return measurement_strength(p.g_om, p.meter.kappa, c2);
}

}  // namespace cqnc
