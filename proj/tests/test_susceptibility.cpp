#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <limits>

#include "cqnc/cqnc.hpp"
#include "test_helpers.hpp"

using namespace cqnc;

TEST_CASE("cavity susceptibility peaks at the mirrored detuning",
          "[susceptibility]") {
  const CavityMode mode{rad_from_hz(160e3), rad_from_hz(-710e3)};
  const std::complex<double> at_peak = chi_cavity(mode, -mode.detuning);
  CHECK(at_peak.real() == Catch::Approx(2.0 / mode.kappa).epsilon(1e-14));
  CHECK(at_peak.imag() == 0.0);

  // |chi| <= 2/kappa everywhere, equality only on resonance.
  const double cap = 2.0 / mode.kappa;
  for (int i = -200; i <= 200; ++i) {
    const double omega = rad_from_hz(10e3 * i);
    const double mag = std::abs(chi_cavity(mode, omega));
    CHECK(mag <= cap * (1.0 + 1e-14));
    if (std::abs(omega + mode.detuning) > rad_from_hz(1e3))
      CHECK(mag < cap);
  }
}

TEST_CASE("cavity susceptibility magnitude matches the closed form",
          "[susceptibility]") {
  const CavityMode mode{rad_from_hz(160e3), rad_from_hz(-710e3)};
  // At DC the magnitude is 1 / sqrt((kappa/2)^2 + delta^2).
  const double expected =
      1.0 / std::hypot(mode.kappa / 2.0, mode.detuning);
  CHECK(std::abs(chi_cavity(mode, 0.0)) ==
        Catch::Approx(expected).epsilon(1e-14));

  // Generic frequency, against the defining expression evaluated directly.
  const double omega = rad_from_hz(500e3);
  const std::complex<double> direct =
      1.0 / std::complex<double>(mode.kappa / 2.0,
                                 -(omega + mode.detuning));
  const std::complex<double> got = chi_cavity(mode, omega);
  CHECK(rel_err(got.real(), direct.real()) < 1e-14);
  CHECK(rel_err(got.imag(), direct.imag()) < 1e-14);
}

TEST_CASE("cavity susceptibility conjugates under frequency reflection",
          "[susceptibility]") {
  const CavityMode mode{rad_from_hz(160e3), rad_from_hz(-710e3)};
  const CavityMode mirrored{mode.kappa, -mode.detuning};
  for (int i = 1; i <= 50; ++i) {
    const double omega = rad_from_hz(25e3 * i);
    const std::complex<double> a = chi_cavity(mode, omega);
    const std::complex<double> b = chi_cavity(mirrored, -omega);
    CHECK(rel_err(b.real(), a.real()) < 1e-14);
    CHECK(rel_err(b.imag(), -a.imag()) < 1e-14);
  }
}

TEST_CASE("mechanical susceptibility on and near resonance",
          "[susceptibility]") {
  const MechanicalMode mech{rad_from_hz(710e3), rad_from_hz(1.0)};
  const std::complex<double> on_res = chi_mech(mech, mech.omega_m);
  CHECK(on_res.real() ==
        Catch::Approx(-2.0 / mech.gamma_m).epsilon(1e-14));
  CHECK(on_res.imag() == 0.0);

  // 1 kHz below resonance the linewidth is negligible and the magnitude is
  // set by the detuning alone, 1 / (2 pi * 1 kHz).
  const double mag = std::abs(chi_mech(mech, rad_from_hz(709e3)));
  CHECK(mag == Catch::Approx(1.0 / rad_from_hz(1e3)).epsilon(1e-6));
}

TEST_CASE("matched ancilla cancels the mechanical susceptibility exactly",
          "[susceptibility]") {
  const MechanicalMode mech{rad_from_hz(710e3), rad_from_hz(1.0)};
  const CavityMode matched{mech.gamma_m, -mech.omega_m};
  // Sampled densely: the two formulas share every intermediate, so the sum
  // is exactly zero in floating point, not merely small.
  for (int i = 0; i <= 10000; ++i) {
    const double omega = rad_from_hz(1e3 + 200.0 * i);
    const std::complex<double> sum =
        chi_mech(mech, omega) + chi_cavity(matched, omega);
    CHECK(sum.real() == 0.0);
    CHECK(sum.imag() == 0.0);
  }
}

TEST_CASE("measurement strength basics", "[susceptibility]") {
  const double kappa = rad_from_hz(160e3);
  CHECK(measurement_strength(0.0, kappa, 1e-12) == 0.0);

  // On ancilla resonance |chi| = 2/kappa, so G = 4 g^2 / kappa.
  const double g = rad_from_hz(350e3);
  const double chi_sq = (2.0 / kappa) * (2.0 / kappa);
  CHECK(measurement_strength(g, kappa, chi_sq) ==
        Catch::Approx(4.0 * g * g / kappa).epsilon(1e-14));
  CHECK(measurement_strength(g, kappa, chi_sq) ==
        Catch::Approx(rad_from_hz(3.0625e6)).epsilon(1e-12));
}

TEST_CASE("oscillator strength variant selects the cavity", "[susceptibility]") {
  const EnmoParams p = reference_enmo();
  const double omega = rad_from_hz(470e3);

  EnmoParams printed = p;
  printed.g_strength_variant = GVariant::AsPrinted;
  const double chi_a_sq = std::norm(chi_cavity(p.ancilla, omega));
  CHECK(enmo_measurement_strength(printed, omega) ==
        Catch::Approx(p.g_a() * p.g_a() * p.ancilla.kappa * chi_a_sq)
            .epsilon(1e-14));

  EnmoParams meter = p;
  meter.g_strength_variant = GVariant::MeterAnalogy;
  const double chi_c_sq = std::norm(chi_cavity(p.meter, omega));
  CHECK(enmo_measurement_strength(meter, omega) ==
        Catch::Approx(p.g_a() * p.g_a() * p.meter.kappa * chi_c_sq)
            .epsilon(1e-14));

  CHECK(enmo_measurement_strength(printed, omega) !=
        enmo_measurement_strength(meter, omega));
}

TEST_CASE("sensor strength uses the sensor cavity", "[susceptibility]") {
  const OmsParams p = reference_oms();
  const double omega = rad_from_hz(470e3);
  const double chi_sq = std::norm(chi_cavity(p.meter, omega));
  CHECK(oms_measurement_strength(p, omega) ==
        Catch::Approx(p.g_om * p.g_om * p.meter.kappa * chi_sq)
            .epsilon(1e-14));
}

TEST_CASE("susceptibility rejects non-finite input", "[susceptibility]") {
  const CavityMode mode{rad_from_hz(160e3), rad_from_hz(-710e3)};
  CHECK_THROWS(chi_cavity(mode, std::numeric_limits<double>::quiet_NaN()));
  CHECK_THROWS(
      chi_cavity(mode, std::numeric_limits<double>::infinity()));
  const MechanicalMode mech{rad_from_hz(710e3), rad_from_hz(1.0)};
  CHECK_THROWS(chi_mech(mech, std::numeric_limits<double>::quiet_NaN()));
}
