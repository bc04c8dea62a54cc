#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cqnc/cqnc.hpp"
#include "test_helpers.hpp"

using namespace cqnc;

namespace {

// Random physical covariance: a rotated squeezed-thermal state.
Covariance2 random_covariance(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double n_th = 0.5 + 2.0 * u(gen);          // thermal occupation
  const double r = 1.5 * u(gen);                   // squeezing parameter
  const Covariance2 diag{n_th * std::exp(-2.0 * r), n_th * std::exp(2.0 * r),
                         0.0};
  return rotate_covariance(diag, pi * u(gen));
}

double fold(double angle) {
  double a = std::fmod(angle, pi);
  if (a < 0.0) a += pi;
  return a;
}

}  // namespace

TEST_CASE("rotation basics", "[covariance]") {
  const Covariance2 s{0.4, 0.9, -0.15};

  const Covariance2 same = rotate_covariance(s, 0.0);
  CHECK(same.vxx == s.vxx);
  CHECK(same.vpp == s.vpp);
  CHECK(same.vxp == s.vxp);

  // Quarter turn swaps the diagonal and flips the cross term.
  const Covariance2 quarter = rotate_covariance(s, pi / 2.0);
  CHECK(quarter.vxx == Catch::Approx(s.vpp).epsilon(1e-14));
  CHECK(quarter.vpp == Catch::Approx(s.vxx).epsilon(1e-14));
  CHECK(quarter.vxp == Catch::Approx(-s.vxp).epsilon(1e-14));
}

TEST_CASE("rotation preserves det and trace to 1e-12", "[covariance]") {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> angle(-two_pi, two_pi);
  for (int i = 0; i < 500; ++i) {
    const Covariance2 s = random_covariance(gen);
    const Covariance2 r = rotate_covariance(s, angle(gen));
    CHECK(rel_err(r.det(), s.det()) < 1e-12);
    CHECK(rel_err(r.trace(), s.trace()) < 1e-12);
  }
}

TEST_CASE("loss basics", "[covariance]") {
  const Covariance2 s{0.4, 0.9, -0.15};

  const Covariance2 kept = apply_loss(s, 1.0);
  CHECK(kept.vxx == s.vxx);
  CHECK(kept.vpp == s.vpp);
  CHECK(kept.vxp == s.vxp);

  const Covariance2 vac = apply_loss(s, 0.0);
  CHECK(vac.vxx == 0.5);
  CHECK(vac.vpp == 0.5);
  CHECK(vac.vxp == 0.0);

  // 6.0 dB above shot noise through 54% efficiency lands at 4.17 dB.
  const Covariance2 noisy{0.5, linear_from_db_rel_shot(6.0), 0.0};
  const Covariance2 lossy = apply_loss(noisy, 0.54);
  CHECK(lossy.vpp == Catch::Approx(1.3048893604944425).epsilon(1e-12));
  CHECK(db_rel_shot_from_linear(lossy.vpp) ==
        Catch::Approx(4.166).margin(5e-4));

  CHECK_THROWS(apply_loss(s, -0.1));
  CHECK_THROWS(apply_loss(s, 1.1));
}

TEST_CASE("loss contracts every entry linearly toward vacuum",
          "[covariance]") {
  // sigma_final - I/2 = eta (sigma - I/2) exactly, entry by entry; the
  // distance to vacuum in any entry is monotone in eta.
  std::mt19937_64 gen(7);
  for (int i = 0; i < 200; ++i) {
    const Covariance2 s = random_covariance(gen);
    for (double eta : {0.0, 0.1, 0.54, 0.9, 1.0}) {
      const Covariance2 f = apply_loss(s, eta);
      CHECK(f.vxx - 0.5 == Catch::Approx(eta * (s.vxx - 0.5)).margin(1e-14));
      CHECK(f.vpp - 0.5 == Catch::Approx(eta * (s.vpp - 0.5)).margin(1e-14));
      CHECK(f.vxp == Catch::Approx(eta * s.vxp).margin(1e-14));
    }
  }
}

TEST_CASE("loss keeps physical states physical", "[covariance]") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Covariance2 s = random_covariance(gen);
    REQUIRE(physicality_check(s).physical);
    CHECK(physicality_check(apply_loss(s, u(gen))).physical);
  }
}

TEST_CASE("variance at angle reads the rotated phase quadrature",
          "[covariance]") {
  const Covariance2 s{0.4, 0.9, -0.15};
  CHECK(variance_at_angle(s, 0.0) == s.vpp);
  CHECK(variance_at_angle(s, pi / 2.0) == Catch::Approx(s.vxx).epsilon(1e-14));
  CHECK(variance_at_angle(s, pi / 4.0) ==
        Catch::Approx((s.vxx + s.vpp) / 2.0 - s.vxp).epsilon(1e-14));

  // Consistency with the full rotation pipeline at arbitrary angles.
  for (double psi : {0.3, 1.1, 2.7}) {
    CHECK(variance_at_angle(s, psi) ==
          Catch::Approx(rotate_covariance(s, psi).vpp).epsilon(1e-14));
  }
}

TEST_CASE("ellipse of simple matrices", "[covariance]") {
  const SqueezeEllipse circle = ellipse_from_covariance({0.5, 0.5, 0.0});
  CHECK(circle.v_min == 0.5);
  CHECK(circle.v_max == 0.5);
  CHECK(circle.angle == 0.0);

  // diag(1/4, 1): the smallest homodyne variance is read at angle pi/2,
  // where the detector sees the amplitude quadrature.
  const SqueezeEllipse sq = ellipse_from_covariance({0.25, 1.0, 0.0});
  CHECK(sq.v_min == Catch::Approx(0.25).epsilon(1e-14));
  CHECK(sq.v_max == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(sq.angle == Catch::Approx(pi / 2.0).epsilon(1e-14));

  // Mirrored diagonal: minimum already on the phase quadrature, angle 0.
  const SqueezeEllipse sq0 = ellipse_from_covariance({1.0, 0.25, 0.0});
  CHECK(sq0.angle == 0.0);

  CHECK_THROWS(ellipse_from_covariance({0.5, 0.5, 0.6}));  // det < 0
}

TEST_CASE("variance extrema equal ellipse eigenvalues to 1e-10",
          "[covariance]") {
  std::mt19937_64 gen(1234);
  for (int i = 0; i < 300; ++i) {
    const Covariance2 s = random_covariance(gen);
    const SqueezeEllipse e = ellipse_from_covariance(s);

    // Dense angle scan bounds the extrema from inside.
    double lo = 1e300, hi = -1e300;
    for (int k = 0; k < 720; ++k) {
      const double v = variance_at_angle(s, pi * k / 720.0);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(lo >= e.v_min - 1e-10);
    CHECK(hi <= e.v_max + 1e-10);

    // The claimed extremal angles achieve the eigenvalues exactly.
    CHECK(variance_at_angle(s, e.angle) ==
          Catch::Approx(e.v_min).margin(1e-10));
    CHECK(variance_at_angle(s, e.angle + pi / 2.0) ==
          Catch::Approx(e.v_max).margin(1e-10));
  }
}

TEST_CASE("rotating the state shifts the ellipse angle by minus the rotation",
          "[covariance]") {
  // With sigma' = R(psi) sigma R(psi)^T the detector must rotate along:
  // variance_at_angle(sigma', a) = variance_at_angle(sigma, a + psi), so
  // the minimizing angle moves from a* to a* - psi (mod pi).  Eigenvalues
  // are untouched.  The diag(1/4, 1) matrix rotated by 30 degrees moves
  // its angle from 90 to 60 degrees, a 30-degree shift.
  const Covariance2 base{0.25, 1.0, 0.0};
  const SqueezeEllipse shifted =
      ellipse_from_covariance(rotate_covariance(base, pi / 6.0));
  CHECK(shifted.v_min == Catch::Approx(0.25).epsilon(1e-12));
  CHECK(shifted.v_max == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(shifted.angle == Catch::Approx(pi / 2.0 - pi / 6.0).epsilon(1e-12));

  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Covariance2 s = random_covariance(gen);
    const SqueezeEllipse e0 = ellipse_from_covariance(s);
    if (e0.v_max - e0.v_min < 1e-6) continue;  // near-degenerate: skip
    const double psi = pi * u(gen);
    const SqueezeEllipse e1 =
        ellipse_from_covariance(rotate_covariance(s, psi));
    CHECK(e1.v_min == Catch::Approx(e0.v_min).epsilon(1e-10));
    CHECK(e1.v_max == Catch::Approx(e0.v_max).epsilon(1e-10));
    const double expected = fold(e0.angle - psi);
    const double diff =
        std::min(std::abs(e1.angle - expected),
                 pi - std::abs(e1.angle - expected));
    CHECK(diff < 1e-9);
  }
}

TEST_CASE("angle flatness", "[covariance]") {
  CHECK(angle_flatness({0.5, 0.5, 0.0}) == 0.0);
  CHECK(angle_flatness({1.3, 1.3, 0.0}) == 0.0);  // thermal circle
  CHECK(angle_flatness({0.25, 1.0, 0.0}) == Catch::Approx(0.75));

  // Invariant under rotation.
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Covariance2 s = random_covariance(gen);
    const double f0 = angle_flatness(s);
    const double f1 = angle_flatness(rotate_covariance(s, pi * u(gen)));
    CHECK(rel_err(f1, f0) < 1e-10);
  }
}

TEST_CASE("physicality diagnostic reports the deficit", "[covariance]") {
  const PhysicalityCheck good = physicality_check({0.5, 0.5, 0.0});
  CHECK(good.physical);
  CHECK(good.det == Catch::Approx(0.25));
  CHECK(good.deficit == 0.0);

  const PhysicalityCheck bad = physicality_check({0.25, 0.25, 0.0});
  CHECK_FALSE(bad.physical);
  CHECK(bad.deficit == Catch::Approx(0.25 - 0.0625));
}
