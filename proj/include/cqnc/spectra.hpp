#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqnc/covariance.hpp"
#include "cqnc/params.hpp"
#include "cqnc/susceptibility.hpp"
#include "cqnc/units.hpp"

namespace cqnc {

// Frequency band and grid shape shared by spectra and the CLI.  Bounds are
// in Hz (user-facing); conversion to angular frequency happens where the
// physics is evaluated.
enum class GridSpacing { Linear, Log };

[[nodiscard]] inline const char* to_string(GridSpacing s) {
  return s == GridSpacing::Linear ? "linear" : "log";
}

[[nodiscard]] inline GridSpacing grid_spacing_from_string(
    const std::string& s) {
  if (s == "linear") return GridSpacing::Linear;
  if (s == "log") return GridSpacing::Log;
  throw std::invalid_argument("unknown grid spacing '" + s +
                              "' (expected linear or log)");
}

struct Band {
  double f_min_hz = 0.0;
  double f_max_hz = 0.0;
  std::size_t n_points = 0;
  GridSpacing spacing = GridSpacing::Log;

  void validate() const {
    require_finite(f_min_hz, "Band.f_min_hz");
    require_finite(f_max_hz, "Band.f_max_hz");
    if (!(f_min_hz < f_max_hz))
      throw std::invalid_argument("Band: f_min_hz must be below f_max_hz");
    if (n_points < 2)
      throw std::invalid_argument("Band: need at least 2 grid points");
    if (spacing == GridSpacing::Log && !(f_min_hz > 0.0))
      throw std::invalid_argument("Band: log spacing needs f_min_hz > 0");
  }
};

[[nodiscard]] inline std::vector<double> make_grid(const Band& band) {
  band.validate();
  std::vector<double> f(band.n_points);
  const double n1 = static_cast<double>(band.n_points - 1);
  if (band.spacing == GridSpacing::Linear) {
    const double step = (band.f_max_hz - band.f_min_hz) / n1;
    for (std::size_t i = 0; i < band.n_points; ++i)
      f[i] = band.f_min_hz + step * static_cast<double>(i);
  } else {
    const double ratio = band.f_max_hz / band.f_min_hz;
    for (std::size_t i = 0; i < band.n_points; ++i)
      f[i] = band.f_min_hz * std::pow(ratio, static_cast<double>(i) / n1);
  }
  f.back() = band.f_max_hz;  // pin the endpoint against pow() rounding
  return f;
}

// Sampled single-quadrature spectrum, linear units with vacuum = 1/2.
struct NoiseSpectrum {
  std::vector<double> frequencies_hz;
  std::vector<double> values;

  void validate() const {
    if (frequencies_hz.size() != values.size())
      throw std::invalid_argument("NoiseSpectrum: length mismatch");
    for (std::size_t i = 0; i < frequencies_hz.size(); ++i) {
      require_finite(frequencies_hz[i], "NoiseSpectrum.frequencies_hz");
      if (i > 0 && !(frequencies_hz[i] > frequencies_hz[i - 1]))
        throw std::invalid_argument(
            "NoiseSpectrum: frequency grid must be strictly increasing");
      if (!(values[i] > 0.0) || !std::isfinite(values[i]))
        throw std::invalid_argument(
            "NoiseSpectrum: values must be finite and > 0");
    }
  }
};

namespace detail {
// The readout loss term of the oscillator spectrum,
//   (G kappa_a |chi_a|^2 / 2) ((w^2 + kappa_a^2/4) / delta_a^2 + 1),
// shared between the covariance model and the cascaded spectrum.
[[nodiscard]] inline double enmo_loss_term(const EnmoParams& p, double omega,
                                           double g_strength,
                                           double chi_a_mag_sq) {
  const double da = p.ancilla.detuning;
  const double ka = p.ancilla.kappa;
  const double paren =
      (omega * omega + ka * ka / 4.0) / (da * da) + 1.0;
  return 0.5 * g_strength * ka * chi_a_mag_sq * paren;
}

inline void require_nonzero_detuning(const EnmoParams& p, const char* who) {
  if (p.ancilla.detuning == 0.0)
    throw std::domain_error(
        std::string(who) +
        ": the readout loss term divides by the squared ancilla detuning, "
        "so delta_a = 0 is a singular configuration");
}
}  // namespace detail

// Quadrature covariance of the oscillator output field at angular frequency
// omega.  The squeeze block is a pure minimum-uncertainty pair built from
// K = G_a |chi_a|: vxx = 1/2, vxp = -K/2, vpp = 1/2 + K^2/2 + loss, so
// det = 1/4 + loss/2 and the readout loss term alone carries the matrix
// away from purity.
[[nodiscard]] inline Covariance2 enmo_covariance(const EnmoParams& p,
                                                 double omega) {
  p.validate();
  require_finite(omega, "omega");
  detail::require_nonzero_detuning(p, "enmo_covariance");
  const double g_strength = enmo_measurement_strength(p, omega);
  const double ca2 = std::norm(chi_cavity(p.ancilla, omega));
  const double k = g_strength * std::sqrt(ca2);
  Covariance2 s;
  s.vxx = vacuum_variance;
  s.vxp = -0.5 * k;
  s.vpp = vacuum_variance + 0.5 * k * k +
          detail::enmo_loss_term(p, omega, g_strength, ca2);
  return s;
}

// Term-by-term breakdown of the cascaded phase-quadrature spectrum:
//   total = 1/2 + (G_a^2/2) |chi_m + chi_a|^2 + loss term.
// Under exact matching the mechanical and ancilla susceptibilities cancel
// bitwise and the residual term is exactly zero.
struct CqncBreakdown {
  double shot = 0.0;
  double residual = 0.0;
  double loss = 0.0;
  double total = 0.0;
};

[[nodiscard]] inline CqncBreakdown s_cqnc_terms(const EnmoParams& enmo,
                                                const OmsParams& oms,
                                                double omega) {
  enmo.validate();
  oms.validate();
  require_finite(omega, "omega");
  detail::require_nonzero_detuning(enmo, "s_cqnc");
  const double g_strength = enmo_measurement_strength(enmo, omega);
  const double ca2 = std::norm(chi_cavity(enmo.ancilla, omega));
  const complexd sum = chi_mech(oms.mech, omega) + chi_cavity(enmo.ancilla, omega);
  CqncBreakdown b;
  b.shot = vacuum_variance;
  b.residual = 0.5 * g_strength * g_strength * std::norm(sum);
  b.loss = detail::enmo_loss_term(enmo, omega, g_strength, ca2);
  b.total = b.shot + b.residual + b.loss;
  return b;
}

[[nodiscard]] inline double s_cqnc(const EnmoParams& enmo,
                                   const OmsParams& oms, double omega) {
  return s_cqnc_terms(enmo, oms, omega).total;
}

// Sensor-only baseline, reconstructed: 1/2 + (G_om^2/2) |chi_m|^2 with
// G_om = g_om^2 kappa_om |chi_om|^2.  No closed form for this curve is
// pinned by measurement; outputs label it "reconstructed".
[[nodiscard]] inline double s_oms_only(const OmsParams& oms, double omega) {
  oms.validate();
  require_finite(omega, "omega");
  const double g_strength = oms_measurement_strength(oms, omega);
  const double m2 = std::norm(chi_mech(oms.mech, omega));
  return vacuum_variance + 0.5 * g_strength * g_strength * m2;
}

// Noise reduction in dB between two linear spectrum values.
[[nodiscard]] inline double cancellation_db(double s_before, double s_after) {
  require_positive(s_before, "s_before");
  require_positive(s_after, "s_after");
  return 10.0 * std::log10(s_before / s_after);
}

// Fraction of the noise in excess of `floor` that the cascade removed;
// 1 means everything above the floor is gone, negative means noise added.
[[nodiscard]] inline double qba_cancellation_fraction(
    double s_before, double s_after, double floor = vacuum_variance) {
  require_finite(s_before, "s_before");
  require_finite(s_after, "s_after");
  require_nonnegative(floor, "floor");
  if (!(s_before > floor))
    throw std::invalid_argument(
        "qba_cancellation_fraction: s_before = " + std::to_string(s_before) +
        " does not exceed the noise floor " + std::to_string(floor) +
        ", there is no excess noise to cancel");
  return (s_before - s_after) / (s_before - floor);
}

// Broadband projection of the cascade against the sensor-only baseline.
// The mechanical resonance makes both spectra blow up as |chi_m|^2 ~
// (2/gamma_m)^2, so the extremum search skips a guard band of
// +/- guard_linewidths * gamma_m around omega_m; the curves themselves are
// reported everywhere.  Points where the baseline carries no excess noise
// have no defined cancellation fraction and are emitted as NaN.
struct ProjectionReport {
  std::vector<double> frequencies_hz;
  std::vector<double> s_oms;         // linear, reconstructed baseline
  std::vector<double> s_cqnc;        // linear
  std::vector<double> reduction_db;  // 10 log10(s_oms / s_cqnc)
  std::vector<double> fraction;      // qba_cancellation_fraction, or NaN

  double max_reduction_db = 0.0;
  double max_reduction_freq_hz = 0.0;
  double max_fraction = 0.0;
  double max_fraction_freq_hz = 0.0;
  bool no_cancellation = false;
  double guard_band_hz = 0.0;  // half-width excluded around the resonance
  GVariant variant = GVariant::AsPrinted;
};

[[nodiscard]] inline ProjectionReport project_cqnc(
    const EnmoParams& enmo, const OmsParams& oms, const Band& band,
    double guard_linewidths = 10.0) {
  require_nonnegative(guard_linewidths, "guard_linewidths");
  ProjectionReport rep;
  rep.variant = enmo.g_strength_variant;
  rep.frequencies_hz = make_grid(band);
  rep.guard_band_hz = guard_linewidths * hz_from_rad(oms.mech.gamma_m);

  const std::size_t n = rep.frequencies_hz.size();
  rep.s_oms.resize(n);
  rep.s_cqnc.resize(n);
  rep.reduction_db.resize(n);
  rep.fraction.resize(n);

  const double f_m = hz_from_rad(oms.mech.omega_m);
  bool have_db = false, have_fr = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = rep.frequencies_hz[i];
    const double w = rad_from_hz(f);
    const double before = s_oms_only(oms, w);
    const double after = s_cqnc(enmo, oms, w);
    rep.s_oms[i] = before;
    rep.s_cqnc[i] = after;
    rep.reduction_db[i] = cancellation_db(before, after);
    rep.fraction[i] = before > vacuum_variance
                          ? (before - after) / (before - vacuum_variance)
                          : std::nan("");
    if (std::abs(f - f_m) <= rep.guard_band_hz) continue;
    if (!have_db || rep.reduction_db[i] > rep.max_reduction_db) {
      rep.max_reduction_db = rep.reduction_db[i];
      rep.max_reduction_freq_hz = f;
      have_db = true;
    }
    if (std::isfinite(rep.fraction[i]) &&
        (!have_fr || rep.fraction[i] > rep.max_fraction)) {
      rep.max_fraction = rep.fraction[i];
      rep.max_fraction_freq_hz = f;
      have_fr = true;
    }
  }
  // A cascade without ancilla coupling reproduces the baseline plus its own
  // readout loss; any apparent ratio there is not cancellation.
  rep.no_cancellation = enmo.g_a() == 0.0 || rep.max_reduction_db <= 0.0;
  return rep;
}

// Squeezing ellipse of the lossy oscillator output across a band, with the
// physicality of every sampled covariance reported alongside.
struct EllipseSpectrum {
  std::vector<double> frequencies_hz;
  std::vector<SqueezeEllipse> ellipses;
  std::vector<PhysicalityCheck> physicality;
};

[[nodiscard]] inline EllipseSpectrum ellipse_spectrum(const EnmoParams& enmo,
                                                      double eta,
                                                      const Band& band) {
  EllipseSpectrum out;
  out.frequencies_hz = make_grid(band);
  out.ellipses.reserve(out.frequencies_hz.size());
  out.physicality.reserve(out.frequencies_hz.size());
  for (const double f : out.frequencies_hz) {
    const Covariance2 s =
        apply_loss(enmo_covariance(enmo, rad_from_hz(f)), eta);
    out.ellipses.push_back(ellipse_from_covariance(s));
    out.physicality.push_back(physicality_check(s));
  }
  return out;
}

}  // namespace cqnc
