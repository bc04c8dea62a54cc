#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "cqnc/units.hpp"

namespace cqnc {

// Symmetric 2x2 quadrature covariance in shot-noise units (vacuum = 1/2 on
// the diagonal).  Physicality det >= 1/4 is a checked diagnostic, not an
// assumed invariant: the model matrices are constructions, not guaranteed
// quantum states.
struct Covariance2 {
  double vxx = 0.0;  // amplitude-quadrature variance
  double vpp = 0.0;  // phase-quadrature variance
  double vxp = 0.0;  // symmetric cross term

  [[nodiscard]] double det() const { return vxx * vpp - vxp * vxp; }
  [[nodiscard]] double trace() const { return vxx + vpp; }

  void validate(const char* who = "Covariance2") const {
    require_positive(vxx, (std::string(who) + ".vxx").c_str());
    require_positive(vpp, (std::string(who) + ".vpp").c_str());
    require_finite(vxp, (std::string(who) + ".vxp").c_str());
  }
};

// Structured physicality diagnostic: a quantum state must have
// det sigma >= 1/4 (Heisenberg bound in vacuum = 1/2 units).
struct PhysicalityCheck {
  bool physical = false;
  double det = 0.0;
  double deficit = 0.0;  // max(0, 1/4 - det), how far below the bound
};

[[nodiscard]] inline PhysicalityCheck physicality_check(const Covariance2& s,
                                                        double tol = 1e-9) {
  PhysicalityCheck out;
  out.det = s.det();
  out.deficit = std::max(0.0, 0.25 - out.det);
  out.physical = out.det >= 0.25 - tol;
  return out;
}

// R sigma R^T with R = [[cos psi, sin psi], [-sin psi, cos psi]].  The
// rotated (2,2) element is the variance seen by a homodyne detector at
// angle psi.  Trace and determinant are preserved.
[[nodiscard]] inline Covariance2 rotate_covariance(const Covariance2& s,
                                                   double psi) {
  require_finite(psi, "psi");
  const double c = std::cos(psi);
  const double sn = std::sin(psi);
  Covariance2 out;
  out.vxx = c * c * s.vxx + 2.0 * sn * c * s.vxp + sn * sn * s.vpp;
  out.vpp = sn * sn * s.vxx - 2.0 * sn * c * s.vxp + c * c * s.vpp;
  out.vxp = (c * c - sn * sn) * s.vxp + sn * c * (s.vpp - s.vxx);
  return out;
}

// Detection efficiency as a convex combination with vacuum,
// sigma_final = eta sigma + (1 - eta) 1/2 I.
[[nodiscard]] inline Covariance2 apply_loss(const Covariance2& s, double eta) {
  require_finite(eta, "eta");
  if (eta < 0.0 || eta > 1.0)
    throw std::invalid_argument("apply_loss: eta must lie in [0, 1], got " +
                                std::to_string(eta));
  const double v = (1.0 - eta) * vacuum_variance;
  return {eta * s.vxx + v, eta * s.vpp + v, eta * s.vxp};
}

// Homodyne variance at detection angle psi: the (2,2) element of the
// rotated matrix, sin^2 psi vxx - 2 sin psi cos psi vxp + cos^2 psi vpp.
[[nodiscard]] inline double variance_at_angle(const Covariance2& s,
                                              double psi) {
  require_finite(psi, "psi");
  const double c = std::cos(psi);
  const double sn = std::sin(psi);
  return sn * sn * s.vxx - 2.0 * sn * c * s.vxp + c * c * s.vpp;
}

// Noise ellipse of a positive-definite covariance.  angle is the detection
// angle in [0, pi) at which variance_at_angle is minimal; for the diagonal
// matrix diag(1/4, 1) that is pi/2, since the detector at pi/2 reads the
// amplitude quadrature.  Degenerate (circular) input returns angle 0 so
// serialization stays deterministic.
struct SqueezeEllipse {
  double v_min = 0.0;
  double v_max = 0.0;
  double angle = 0.0;  // [rad], in [0, pi)
};

[[nodiscard]] inline SqueezeEllipse ellipse_from_covariance(
    const Covariance2& s) {
  s.validate("ellipse_from_covariance");
  if (!(s.det() > 0.0) || !(s.vxx > 0.0))
    throw std::domain_error(
        "ellipse_from_covariance: matrix is not positive-definite (vxx = " +
        std::to_string(s.vxx) + ", vpp = " + std::to_string(s.vpp) +
        ", vxp = " + std::to_string(s.vxp) +
        ", det = " + std::to_string(s.det()) + ")");
  // variance_at_angle(psi) = m + a cos 2psi + b sin 2psi
  const double m = 0.5 * (s.vxx + s.vpp);
  const double a = 0.5 * (s.vpp - s.vxx);
  const double b = -s.vxp;
  const double h = std::hypot(a, b);
  SqueezeEllipse e;
  e.v_min = m - h;
  e.v_max = m + h;
  if (h == 0.0) {
    e.angle = 0.0;
    return e;
  }
  double psi = 0.5 * (std::atan2(b, a) + pi);
  if (psi >= pi) psi -= pi;
  if (psi < 0.0) psi += pi;
  e.angle = psi;
  return e;
}

// Spread of the homodyne variance over detection angles, v_max - v_min.
// Zero exactly for thermal or vacuum states; invariant under rotation.
[[nodiscard]] inline double angle_flatness(const Covariance2& s) {
  const SqueezeEllipse e = ellipse_from_covariance(s);
  return e.v_max - e.v_min;
}

}  // namespace cqnc
