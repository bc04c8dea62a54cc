#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "cqnc/units.hpp"

namespace cqnc {

// Driven optical mode in the rotating frame.  kappa is the full energy
// decay rate, detuning the drive offset from the cavity resonance.  fsr is
// carried only for the physical two-mode cavity (it feeds the waveplate
// coupling calibration) and must exceed the linewidth when present.
struct CavityMode {
  double kappa = 0.0;     // full linewidth [rad/s], > 0
  double detuning = 0.0;  // [rad/s]
  std::optional<double> fsr;  // free spectral range [rad/s], > kappa

  void validate(const char* who = "CavityMode") const {
    require_positive(kappa, (std::string(who) + ".kappa").c_str());
    require_finite(detuning, (std::string(who) + ".detuning").c_str());
    if (fsr) {
      require_positive(*fsr, (std::string(who) + ".fsr").c_str());
      if (*fsr <= kappa)
        throw std::invalid_argument(std::string(who) +
                                    ".fsr must exceed the linewidth kappa");
    }
  }
};

// Mechanical oscillator of the sensor; underdamped by construction.
struct MechanicalMode {
  double omega_m = 0.0;  // resonance [rad/s], > 0
  double gamma_m = 0.0;  // full linewidth [rad/s], 0 < gamma_m < omega_m

  void validate(const char* who = "MechanicalMode") const {
    require_positive(omega_m, (std::string(who) + ".omega_m").c_str());
    require_positive(gamma_m, (std::string(who) + ".gamma_m").c_str());
    if (!(gamma_m < omega_m))
      throw std::invalid_argument(std::string(who) +
                                  ": gamma_m must be below omega_m");
  }
};

// Beamsplitter and down-conversion coupling rates between the meter field
// and the ancilla mode.  The spectra depend on them only through the sum.
struct Coupling {
  double g_bs = 0.0;  // beamsplitter coupling [rad/s], >= 0
  double g_dc = 0.0;  // down-conversion coupling [rad/s], >= 0

  [[nodiscard]] double g_a() const { return g_bs + g_dc; }

  void validate(const char* who = "Coupling") const {
    require_nonnegative(g_bs, (std::string(who) + ".g_bs").c_str());
    require_nonnegative(g_dc, (std::string(who) + ".g_dc").c_str());
  }
};

// Which cavity enters the oscillator measurement strength G_a = g^2 kappa
// |chi|^2.  AsPrinted uses the ancilla mode itself (kappa_a, chi_a);
// MeterAnalogy mirrors the sensor formula and uses the meter cavity
// (kappa_c, chi_c).  Only G_a switches; explicit kappa_a and |chi_a|^2
// factors elsewhere always refer to the ancilla.
enum class GVariant { AsPrinted, MeterAnalogy };

[[nodiscard]] inline const char* to_string(GVariant v) {
  return v == GVariant::AsPrinted ? "as-printed" : "meter-analogy";
}

[[nodiscard]] inline GVariant g_variant_from_string(const std::string& s) {
  if (s == "as-printed") return GVariant::AsPrinted;
  if (s == "meter-analogy") return GVariant::MeterAnalogy;
  throw std::invalid_argument("unknown G_a variant '" + s +
                              "' (expected as-printed or meter-analogy)");
}

// Effective-negative-mass oscillator: a broad meter cavity carrying the
// readout field, over-coupled relative to the narrow detuned ancilla mode
// it exchanges photons with.
struct EnmoParams {
  CavityMode meter;    // kappa_c, delta_c
  CavityMode ancilla;  // kappa_a, delta_a
  Coupling coupling;
  GVariant g_strength_variant = GVariant::AsPrinted;

  [[nodiscard]] double g_a() const { return coupling.g_a(); }

  void validate() const {
    meter.validate("EnmoParams.meter");
    ancilla.validate("EnmoParams.ancilla");
    coupling.validate("EnmoParams.coupling");
    if (!(meter.kappa > ancilla.kappa))
      throw std::invalid_argument(
          "EnmoParams: meter.kappa must exceed ancilla.kappa "
          "(over-coupled readout regime)");
  }
};

// Optomechanical sensor: meter cavity plus mechanical mode, coupled at g_om.
struct OmsParams {
  CavityMode meter;  // kappa_om, delta_om
  MechanicalMode mech;
  double g_om = 0.0;  // optomechanical coupling [rad/s], >= 0

  void validate() const {
    meter.validate("OmsParams.meter");
    mech.validate("OmsParams.mech");
    require_nonnegative(g_om, "OmsParams.g_om");
  }
};

// Reference parameter sets used across examples and tests (quoted in Hz,
// stored angular).  ENMO: meter 980 kHz wide on resonance, ancilla 160 kHz
// wide detuned by -710 kHz, both couplings 175 kHz, cavity FSR 197.4 MHz.
// Sensor: cavity 1 MHz wide on resonance, mechanical mode at 710 kHz with
// 1 Hz linewidth, coupling 350 kHz.
[[nodiscard]] inline EnmoParams reference_enmo(double delta_a_hz = -710e3) {
  EnmoParams p;
  p.meter = {rad_from_hz(980e3), 0.0, rad_from_hz(197.4e6)};
  p.ancilla = {rad_from_hz(160e3), rad_from_hz(delta_a_hz),
               rad_from_hz(197.4e6)};
  p.coupling = {rad_from_hz(175e3), rad_from_hz(175e3)};
  return p;
}

// Projected next-generation ancilla: same cavity but a 10 kHz linewidth.
[[nodiscard]] inline EnmoParams future_enmo() {
  EnmoParams p = reference_enmo();
  p.ancilla.kappa = rad_from_hz(10e3);
  return p;
}

[[nodiscard]] inline OmsParams reference_oms() {
  OmsParams p;
  p.meter = {rad_from_hz(1e6), 0.0, std::nullopt};
  p.mech = {rad_from_hz(710e3), rad_from_hz(1.0)};
  p.g_om = rad_from_hz(350e3);
  return p;
}

}  // namespace cqnc
