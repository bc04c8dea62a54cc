#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

#include "cqnc/units.hpp"

namespace cqnc {

using complexd = std::complex<double>;

// Intracavity waveplate: delta is the optical-axis angle to s-polarization,
// theta the fast/slow retardation.  Both are periodic, so no range checks.
struct WaveplateSetting {
  double delta = 0.0;  // axis angle [rad]
  double theta = 0.0;  // retardation [rad]
};

// Row-major 2x2 complex Jones/coupling matrix acting on (s, p) amplitudes.
struct Mat2c {
  complexd m00, m01, m10, m11;
};

// Jones matrix of the waveplate,
//   [[cos^2 d + e^{-i t} sin^2 d,   (e^{-i t} - 1) sin d cos d],
//    [(e^{-i t} - 1) sin d cos d,   e^{-i t} cos^2 d + sin^2 d]]
// which is unitary for every setting.
[[nodiscard]] inline Mat2c waveplate_matrix(const WaveplateSetting& wp) {
  require_finite(wp.delta, "WaveplateSetting.delta");
  require_finite(wp.theta, "WaveplateSetting.theta");
  const double c = std::cos(wp.delta);
  const double s = std::sin(wp.delta);
  const complexd e = std::exp(complexd(0.0, -wp.theta));
  return {c * c + e * s * s, (e - 1.0) * s * c,  //
          (e - 1.0) * s * c, e * c * c + s * s};
}

// Residuals of the lossless-beamsplitter relations for M = [[t, r'], [r, t']]:
// equal port moduli |r| = |r'| and |t| = |t'|, energy |r|^2 + |t|^2 = 1, and
// the phase relation between transmission and reflection.  The latter is
// evaluated as the unitarity cross term |conj(t) r' + conj(r) t'|; writing it
// without the conjugations holds only in a convention where the primed
// amplitudes belong to the time-reversed port, and fails for a symmetric
// matrix like the waveplate's.
struct BeamsplitterCheck {
  bool passed = false;
  double modulus_residual = 0.0;  // max of ||r|-|r'||, ||t|-|t'||
  double energy_residual = 0.0;   // ||r|^2 + |t|^2 - 1|
  double phase_residual = 0.0;    // |conj(t) r' + conj(r) t'|
};

[[nodiscard]] inline BeamsplitterCheck beamsplitter_relations_check(
    const Mat2c& m, double tol) {
  require_positive(tol, "tol");
  const complexd t = m.m00, rp = m.m01, r = m.m10, tp = m.m11;
  BeamsplitterCheck out;
  out.modulus_residual = std::max(std::abs(std::abs(r) - std::abs(rp)),
                                  std::abs(std::abs(t) - std::abs(tp)));
  out.energy_residual = std::abs(std::norm(r) + std::norm(t) - 1.0);
  out.phase_residual = std::abs(std::conj(t) * rp + std::conj(r) * tp);
  out.passed = out.modulus_residual < tol && out.energy_residual < tol &&
               out.phase_residual < tol;
  return out;
}

// Beamsplitter coupling rate produced by the intracavity waveplate,
// g_bs = sin(2 delta) theta fsr.  Odd in theta, pi-periodic in delta with a
// sign flip at delta + pi/2.
[[nodiscard]] inline double g_bs_from_waveplate(const WaveplateSetting& wp,
                                                double fsr) {
  require_finite(wp.delta, "WaveplateSetting.delta");
  require_finite(wp.theta, "WaveplateSetting.theta");
  require_positive(fsr, "fsr");
  return std::sin(2.0 * wp.delta) * wp.theta * fsr;
}

// Normal-mode splitting of two modes at relative detuning delta_rel coupled
// at g_bs: 2 sqrt((delta_rel/2)^2 + g_bs^2).  Reduces to 2 g_bs at
// degeneracy and |delta_rel| when uncoupled.
[[nodiscard]] inline double normal_mode_splitting(double delta_rel,
                                                  double g_bs) {
  require_finite(delta_rel, "delta_rel");
  require_nonnegative(g_bs, "g_bs");
  return 2.0 * std::hypot(delta_rel / 2.0, g_bs);
}

}  // namespace cqnc
