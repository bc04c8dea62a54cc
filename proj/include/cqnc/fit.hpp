#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cqnc/fit_model.hpp"
#include "cqnc/susceptibility.hpp"
#include "cqnc/traces.hpp"
#include "cqnc/units.hpp"

namespace cqnc {

// Residual definition.  Relative residuals (model/data - 1) are the
// default: the synthesis/instrument noise is multiplicative, so constant
// relative weighting is the matched likelihood and keeps the anti-squeezed
// peaks from drowning out the squeezing dips.  Linear (model - data) and
// dB-space residuals are available behind the flag.
enum class ResidualSpace { Relative, Linear, Db };

struct FitOptions {
  ResidualSpace residual_space = ResidualSpace::Relative;
  std::size_t max_iterations = 200;
  double ftol = 1e-15;  // stop on relative cost decrease below this
  double xtol = 1e-13;  // stop on step size below xtol * (|x| + xtol)
  double gtol = 1e-14;  // stop on gradient infinity-norm below this
  // Rate parameters (g_a, kappa_a, and kappa_c when it enters the model)
  // move in log space inside a trust box of init/factor .. init*factor.
  // The box encodes that the initial guess is a calibration-grade estimate;
  // without it the relative-residual landscape owns a second, unphysical
  // valley at couplings two orders of magnitude above the truth.
  double rate_box_factor = 3.0;
  double detuning_box_rel = 0.5;  // delta_a confined to init +/- 50%
  double eta_min = 0.01;
  bool fit_eta = true;
  std::optional<double> g_bs_prior;  // [rad/s]; enables the g_bs/g_dc split
  std::size_t psi_scan_points = 64;  // initializer angle grid per trace
  double rank_tol = 1e-8;  // singular values below rank_tol * max flag rank loss
  double fd_step = 1e-6;   // central-difference step scale
};

struct FitResult {
  FitParams best;
  FitParams uncertainty;  // 1-sigma, same shape; zero for frozen entries
  std::vector<std::string> free_names;  // order of the covariance rows
  Eigen::MatrixXd covariance;           // physical units, free params only
  std::vector<double> residuals;
  double cost = std::numeric_limits<double>::infinity();
  double reduced_chi2 = 0.0;
  std::vector<double> singular_values;  // of the column-scaled Jacobian
  double condition_number = 0.0;
  std::vector<std::string> unidentifiable;
  bool converged = false;
  std::size_t iterations = 0;
  std::string message;
};

namespace detail {

struct LmOutcome {
  Eigen::VectorXd x;
  Eigen::VectorXd residuals;
  double cost = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::size_t iterations = 0;
  std::string message;
};

// Shared-parameter least-squares problem over a TraceSet.  The internal
// coordinate vector is
//   [ln g_a, ln kappa_a, (ln kappa_c, delta_c)?, eta?, delta_a per group,
//    psi per trace]
// where kappa_c and delta_c join only for the MeterAnalogy variant (the
// AsPrinted model does not contain them) and eta joins unless held fixed.
class fit_problem {
 public:
  fit_problem(const TraceSet& data, const FitParams& init,
              const FitOptions& opts)
      : data_(data), init_(init), opts_(opts), groups_(data.groups()) {
    data_.validate();
    init_.validate();
    if (init_.delta_a.size() != groups_.size())
      throw std::invalid_argument(
          "fit_dataset: init carries " + std::to_string(init_.delta_a.size()) +
          " detuning values but the data has " +
          std::to_string(groups_.size()) + " detuning groups");
    group_of_trace_.resize(data_.traces.size());
    for (std::size_t k = 0; k < groups_.size(); ++k)
      for (const std::size_t j : groups_[k]) group_of_trace_[j] = k;

    meter_in_model_ = init_.variant == GVariant::MeterAnalogy;
    idx_eta_ = meter_in_model_ ? 4 : 2;
    n_free_shared_ = idx_eta_ + (opts_.fit_eta ? 1 : 0);
    idx_da_ = n_free_shared_;
    idx_psi_ = idx_da_ + groups_.size();
    n_ = idx_psi_ + data_.traces.size();

    lo_ = Eigen::VectorXd::Constant(n_, -inf());
    hi_ = Eigen::VectorXd::Constant(n_, inf());
    const double lf = std::log(opts_.rate_box_factor);
    lo_[0] = std::log(init_.g_a()) - lf;
    hi_[0] = std::log(init_.g_a()) + lf;
    lo_[1] = std::log(init_.kappa_a) - lf;
    hi_[1] = std::log(init_.kappa_a) + lf;
    if (meter_in_model_) {
      lo_[2] = std::log(init_.kappa_c) - lf;
      hi_[2] = std::log(init_.kappa_c) + lf;
      const double span = std::max(std::abs(init_.delta_c), init_.kappa_c);
      lo_[3] = init_.delta_c - span;
      hi_[3] = init_.delta_c + span;
    }
    if (opts_.fit_eta) {
      lo_[idx_eta_] = opts_.eta_min;
      hi_[idx_eta_] = 1.0;
    }
    for (std::size_t k = 0; k < groups_.size(); ++k) {
      const double d = init_.delta_a[k];
      const double half = opts_.detuning_box_rel * std::abs(d);
      lo_[idx_da_ + k] = std::min(d - half, d + half);
      hi_[idx_da_ + k] = std::max(d - half, d + half);
    }
    // psi stays unbounded: the model is pi-periodic, and walling the angle
    // into one period strands starts that sit across the seam from the
    // optimum; the result is folded into [0, pi) at the end.

    m_ = 0;
    for (const auto& t : data_.traces) m_ += t.frequencies_hz.size();
  }

  [[nodiscard]] std::size_t n_params() const { return n_; }
  [[nodiscard]] std::size_t n_residuals() const { return m_; }
  [[nodiscard]] std::size_t n_groups() const { return groups_.size(); }
  [[nodiscard]] bool meter_in_model() const { return meter_in_model_; }
  [[nodiscard]] const std::vector<std::vector<std::size_t>>& groups() const {
    return groups_;
  }
  [[nodiscard]] std::size_t group_of(std::size_t trace) const {
    return group_of_trace_[trace];
  }
  [[nodiscard]] const FitOptions& options() const { return opts_; }
  [[nodiscard]] const TraceSet& data() const { return data_; }

  [[nodiscard]] Eigen::VectorXd pack(const FitParams& p) const {
    Eigen::VectorXd x(n_);
    x[0] = std::log(p.g_a());
    x[1] = std::log(p.kappa_a);
    if (meter_in_model_) {
      x[2] = std::log(p.kappa_c);
      x[3] = p.delta_c;
    }
    if (opts_.fit_eta) x[idx_eta_] = p.eta;
    for (std::size_t k = 0; k < groups_.size(); ++k)
      x[idx_da_ + k] = p.delta_a[k];
    for (std::size_t j = 0; j < data_.traces.size(); ++j)
      x[idx_psi_ + j] = j < p.psi.size() ? p.psi[j] : 0.0;
    return x;
  }

  // Physical parameters at x.  eta is clamped into [0, 1] here as well so
  // finite-difference probes just outside the box stay evaluable.
  [[nodiscard]] FitParams unpack(const Eigen::VectorXd& x) const {
    FitParams p = init_;
    const double g_a = std::exp(x[0]);
    if (opts_.g_bs_prior) {
      const double g_dc = std::max(0.0, g_a - *opts_.g_bs_prior);
      p.g_bs = g_a - g_dc;
      p.g_dc = g_dc;
    } else {
      p.g_bs = 0.5 * g_a;
      p.g_dc = 0.5 * g_a;
    }
    p.kappa_a = std::exp(x[1]);
    if (meter_in_model_) {
      p.kappa_c = std::exp(x[2]);
      p.delta_c = x[3];
    }
    if (opts_.fit_eta)
      p.eta = std::clamp(x[idx_eta_], 0.0, 1.0);
    for (std::size_t k = 0; k < groups_.size(); ++k)
      p.delta_a[k] = x[idx_da_ + k];
    p.psi.assign(data_.traces.size(), 0.0);
    for (std::size_t j = 0; j < data_.traces.size(); ++j)
      p.psi[j] = x[idx_psi_ + j];
    return p;
  }

  [[nodiscard]] double psi_of(const Eigen::VectorXd& x,
                              std::size_t trace) const {
    return x[idx_psi_ + trace];
  }

  [[nodiscard]] Eigen::VectorXd project(Eigen::VectorXd x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x[i] = std::clamp(x[i], lo_[i], hi_[i]);
    return x;
  }

  [[nodiscard]] double residual_of(double model, double datum) const {
    switch (opts_.residual_space) {
      case ResidualSpace::Relative:
        return model / datum - 1.0;
      case ResidualSpace::Linear:
        return model - datum;
      case ResidualSpace::Db:
        return 10.0 * std::log10(model / datum);
    }
    return 0.0;
  }

  [[nodiscard]] Eigen::VectorXd residuals(const Eigen::VectorXd& x) const {
    const FitParams p = unpack(x);
    Eigen::VectorXd r(m_);
    std::size_t row = 0;
    for (std::size_t j = 0; j < data_.traces.size(); ++j) {
      const Trace& t = data_.traces[j];
      const std::size_t g = group_of_trace_[j];
      const double psi = x[idx_psi_ + j];
      for (std::size_t i = 0; i < t.frequencies_hz.size(); ++i) {
        const double model =
            model_variance(p, g, rad_from_hz(t.frequencies_hz[i]), psi);
        r[static_cast<Eigen::Index>(row++)] = residual_of(model, t.values[i]);
      }
    }
    return r;
  }

  [[nodiscard]] double cost(const Eigen::VectorXd& x) const {
    return residuals(x).squaredNorm();
  }

  [[nodiscard]] Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd J(m_, n_);
    Eigen::VectorXd xp = x, xm = x;
    for (std::size_t k = 0; k < n_; ++k) {
      const double h = opts_.fd_step * std::max(1.0, std::abs(x[k]));
      xp[k] = x[k] + h;
      xm[k] = x[k] - h;
      J.col(static_cast<Eigen::Index>(k)) =
          (residuals(xp) - residuals(xm)) / (2.0 * h);
      xp[k] = x[k];
      xm[k] = x[k];
    }
    return J;
  }

  // Names of the free coordinates, in x order, in reporting units.
  [[nodiscard]] std::vector<std::string> free_names() const {
    std::vector<std::string> names = {"g_a_hz", "kappa_a_hz"};
    if (meter_in_model_) {
      names.push_back("kappa_c_hz");
      names.push_back("delta_c_hz");
    }
    if (opts_.fit_eta) names.push_back("eta");
    for (std::size_t k = 0; k < groups_.size(); ++k)
      names.push_back("delta_a_hz[" + std::to_string(k) + "]");
    for (std::size_t j = 0; j < data_.traces.size(); ++j)
      names.push_back("psi_rad[" + std::to_string(j) + "]");
    return names;
  }

  // d(physical)/d(internal) for every coordinate: exp-coordinates scale by
  // their value, angular-frequency coordinates by 1/2pi to land in Hz.
  [[nodiscard]] Eigen::VectorXd report_scales(const Eigen::VectorXd& x) const {
    Eigen::VectorXd s = Eigen::VectorXd::Ones(n_);
    s[0] = std::exp(x[0]) / two_pi;
    s[1] = std::exp(x[1]) / two_pi;
    if (meter_in_model_) {
      s[2] = std::exp(x[2]) / two_pi;
      s[3] = 1.0 / two_pi;
    }
    for (std::size_t k = 0; k < groups_.size(); ++k)
      s[idx_da_ + k] = 1.0 / two_pi;
    return s;
  }

  [[nodiscard]] std::size_t eta_index() const { return idx_eta_; }
  [[nodiscard]] std::size_t delta_a_index(std::size_t group) const {
    return idx_da_ + group;
  }
  [[nodiscard]] std::size_t psi_index(std::size_t trace) const {
    return idx_psi_ + trace;
  }

 private:
  static double inf() { return std::numeric_limits<double>::infinity(); }

  TraceSet data_;
  FitParams init_;
  FitOptions opts_;
  std::vector<std::vector<std::size_t>> groups_;
  std::vector<std::size_t> group_of_trace_;
  Eigen::VectorXd lo_, hi_;
  bool meter_in_model_ = false;
  std::size_t idx_eta_ = 0, idx_da_ = 0, idx_psi_ = 0;
  std::size_t n_free_shared_ = 0, n_ = 0, m_ = 0;
};

// Projected Levenberg-Marquardt with Marquardt (diagonal) scaling.  Only
// cost-decreasing steps are accepted, so the optimizer contract that the
// returned objective never exceeds the initial one holds by construction.
[[nodiscard]] inline LmOutcome levenberg_marquardt(const fit_problem& prob,
                                                   Eigen::VectorXd x) {
  const FitOptions& o = prob.options();
  x = prob.project(std::move(x));
  LmOutcome out;
  out.x = x;
  out.residuals = prob.residuals(x);
  out.cost = out.residuals.squaredNorm();

  double lambda = 1e-3;
  for (std::size_t iter = 1; iter <= o.max_iterations; ++iter) {
    out.iterations = iter;
    const Eigen::MatrixXd J = prob.jacobian(out.x);
    const Eigen::VectorXd g = J.transpose() * out.residuals;
    if (g.lpNorm<Eigen::Infinity>() < o.gtol * std::max(1.0, out.cost)) {
      out.converged = true;
      out.message = "gradient below tolerance";
      return out;
    }
    const Eigen::MatrixXd H = J.transpose() * J;
    const Eigen::VectorXd diag = H.diagonal().cwiseMax(1e-12);

    bool stepped = false;
    for (int inner = 0; inner < 40 && !stepped; ++inner) {
      Eigen::MatrixXd A = H;
      A.diagonal() += lambda * diag;
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      const Eigen::VectorXd x_new = prob.project(out.x + step);
      const Eigen::VectorXd r_new = prob.residuals(x_new);
      const double cost_new = r_new.squaredNorm();
      if (cost_new < out.cost) {
        const double drop = (out.cost - cost_new) / std::max(out.cost, 1e-300);
        const double moved = (x_new - out.x).norm();
        out.x = x_new;
        out.residuals = r_new;
        out.cost = cost_new;
        lambda = std::max(lambda / 3.0, 1e-14);
        stepped = true;
        if (drop < o.ftol) {
          out.converged = true;
          out.message = "cost decrease below tolerance";
          return out;
        }
        if (moved < o.xtol * (out.x.norm() + o.xtol)) {
          out.converged = true;
          out.message = "step size below tolerance";
          return out;
        }
      } else {
        lambda *= 2.0;
        if (lambda > 1e14) {
          out.message = "damping exhausted without an accepted step";
          return out;
        }
      }
    }
  }
  out.message = "iteration limit reached";
  return out;
}

// Angle initializer: per-trace scan of [0, pi) keeping everything else
// fixed.  The model is pi-periodic, so the scan cannot miss the basin by
// more than half a grid cell, and the subsequent unbounded polish removes
// the discretization.
inline void scan_angles(const fit_problem& prob, Eigen::VectorXd& x) {
  const std::size_t n_scan = std::max<std::size_t>(prob.options().psi_scan_points, 4);
  const FitParams p = prob.unpack(x);
  for (std::size_t j = 0; j < prob.data().traces.size(); ++j) {
    const Trace& t = prob.data().traces[j];
    const std::size_t g = prob.group_of(j);
    double best_cost = std::numeric_limits<double>::infinity();
    double best_psi = prob.psi_of(x, j);
    for (std::size_t s = 0; s < n_scan; ++s) {
      const double psi = pi * static_cast<double>(s) / static_cast<double>(n_scan);
      double c = 0.0;
      for (std::size_t i = 0; i < t.frequencies_hz.size(); ++i) {
        const double model =
            model_variance(p, g, rad_from_hz(t.frequencies_hz[i]), psi);
        const double r = prob.residual_of(model, t.values[i]);
        c += r * r;
      }
      if (c < best_cost) {
        best_cost = c;
        best_psi = psi;
      }
    }
    x[prob.psi_index(j)] = best_psi;
  }
}

// Detuning initializer: the variance peaks where the ancilla response
// peaks, at omega = -delta_a, so the strongest excursion from shot noise
// locates |delta_a| for each group.  Applied only to detunings on the
// negative branch, which is where this cascade operates.
inline void peak_detect_detunings(const fit_problem& prob,
                                  Eigen::VectorXd& x) {
  for (std::size_t k = 0; k < prob.n_groups(); ++k) {
    double best_dev = -1.0;
    double f_peak = 0.0;
    for (const std::size_t j : prob.groups()[k]) {
      const Trace& t = prob.data().traces[j];
      for (std::size_t i = 0; i < t.frequencies_hz.size(); ++i) {
        const double dev = std::abs(t.values[i] - vacuum_variance);
        if (dev > best_dev) {
          best_dev = dev;
          f_peak = t.frequencies_hz[i];
        }
      }
    }
    const std::size_t idx = prob.delta_a_index(k);
    if (best_dev > 0.0 && x[idx] < 0.0) x[idx] = -rad_from_hz(f_peak);
  }
}

// Closed-form seed from orthogonal-pair sums and differences.  For a pair
// of traces a quarter turn apart the angle drops out of the sum,
//   V(psi) + V(psi + pi/2) - 1 = eta (K^2/2 + L) = p A1(w) + q A2(w)
// with p = eta g^4, q = eta g^2 and A1, A2 computable from the linewidth
// and detuning seeds; a two-column least squares then yields g and eta,
// and the difference V(psi) - V(psi + pi/2) = eta [cos 2psi (K^2/2 + L) +
// sin 2psi K] yields the pair angle.
inline bool pair_closed_form(const fit_problem& prob, Eigen::VectorXd& x) {
  const FitParams p = prob.unpack(x);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& grp : prob.groups())
    for (std::size_t i = 0; i + 1 < grp.size(); i += 2)
      pairs.emplace_back(grp[i], grp[i + 1]);
  if (pairs.empty()) return false;

  std::size_t rows = 0;
  for (const auto& [a, b] : pairs) {
    if (prob.data().traces[a].frequencies_hz !=
        prob.data().traces[b].frequencies_hz)
      return false;
    rows += prob.data().traces[a].frequencies_hz.size();
  }

  Eigen::MatrixXd A(rows, 2);
  Eigen::VectorXd y(rows);
  std::size_t row = 0;
  for (const auto& [a, b] : pairs) {
    const Trace& ta = prob.data().traces[a];
    const Trace& tb = prob.data().traces[b];
    const EnmoParams enmo = p.enmo_at(prob.group_of(a));
    for (std::size_t i = 0; i < ta.frequencies_hz.size(); ++i) {
      const double w = rad_from_hz(ta.frequencies_hz[i]);
      // Unit-coupling strength G/g^2 of the configured variant.
      const CavityMode& strength_mode =
          enmo.g_strength_variant == GVariant::AsPrinted ? enmo.ancilla
                                                         : enmo.meter;
      const double gu = strength_mode.kappa *
                        std::norm(chi_cavity(strength_mode, w));
      const double ca2 = std::norm(chi_cavity(enmo.ancilla, w));
      const double paren =
          (w * w + enmo.ancilla.kappa * enmo.ancilla.kappa / 4.0) /
              (enmo.ancilla.detuning * enmo.ancilla.detuning) +
          1.0;
      A(row, 0) = 0.5 * gu * gu * ca2;                       // -> eta g^4
      A(row, 1) = 0.5 * gu * enmo.ancilla.kappa * ca2 * paren;  // -> eta g^2
      y[static_cast<Eigen::Index>(row)] =
          ta.values[i] + tb.values[i] - 1.0;
      ++row;
    }
  }
  const Eigen::Vector2d col_norms(A.col(0).norm(), A.col(1).norm());
  if (!(col_norms.minCoeff() > 0.0)) return false;
  Eigen::MatrixXd An = A;
  An.col(0) /= col_norms[0];
  An.col(1) /= col_norms[1];
  const Eigen::Vector2d sol =
      An.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y);
  const double p_coef = sol[0] / col_norms[0];  // eta g^4
  const double q_coef = sol[1] / col_norms[1];  // eta g^2
  if (!(p_coef > 0.0) || !(q_coef > 0.0)) return false;
  const double g_sq = p_coef / q_coef;
  const double eta = q_coef * q_coef / p_coef;
  x[0] = std::log(std::sqrt(g_sq));
  if (prob.options().fit_eta) x[prob.eta_index()] = eta;
  Eigen::VectorXd xp = prob.project(x);
  x = xp;

  // Pair angles from the difference traces, with the seeded (g, eta).
  const FitParams seeded = prob.unpack(x);
  for (const auto& [a, b] : pairs) {
    const Trace& ta = prob.data().traces[a];
    const Trace& tb = prob.data().traces[b];
    const EnmoParams enmo = seeded.enmo_at(prob.group_of(a));
    double c_cc = 0.0, c_cs = 0.0, c_ss = 0.0, d_c = 0.0, d_s = 0.0;
    for (std::size_t i = 0; i < ta.frequencies_hz.size(); ++i) {
      const double w = rad_from_hz(ta.frequencies_hz[i]);
      const double gs = enmo_measurement_strength(enmo, w);
      const double ca = std::sqrt(std::norm(chi_cavity(enmo.ancilla, w)));
      const double k_val = gs * ca;
      const double loss =
          detail::enmo_loss_term(enmo, w, gs, ca * ca);
      const double u1 = seeded.eta * (0.5 * k_val * k_val + loss);  // cos 2psi
      const double u2 = seeded.eta * k_val;                         // sin 2psi
      const double d = ta.values[i] - tb.values[i];
      c_cc += u1 * u1;
      c_cs += u1 * u2;
      c_ss += u2 * u2;
      d_c += u1 * d;
      d_s += u2 * d;
    }
    const double det = c_cc * c_ss - c_cs * c_cs;
    double cos2psi, sin2psi;
    if (std::abs(det) > 1e-300) {
      cos2psi = (c_ss * d_c - c_cs * d_s) / det;
      sin2psi = (c_cc * d_s - c_cs * d_c) / det;
    } else if (c_cc + c_ss > 0.0) {
      cos2psi = d_c;
      sin2psi = d_s;
    } else {
      continue;
    }
    const double psi = fold_angle(0.5 * std::atan2(sin2psi, cos2psi));
    x[prob.psi_index(a)] = psi;
    x[prob.psi_index(b)] = fold_angle(psi + pi / 2.0);
  }
  return true;
}

}  // namespace detail

// Joint fit of all traces with Jacobian-based uncertainties.  Several
// starting points are polished and the lowest cost wins: the caller's
// init verbatim, the same init with scanned angles and peak-detected
// detunings, and (when orthogonal pairs exist) a closed-form seed for
// coupling, efficiency and angles.  Non-convergence is flagged on the
// result, never thrown, and the best iterate is still returned.
[[nodiscard]] inline FitResult fit_dataset(const TraceSet& data,
                                           const FitParams& init,
                                           const FitOptions& opts = {}) {
  detail::fit_problem prob(data, init, opts);

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(prob.project(prob.pack(init)));

  Eigen::VectorXd refined = starts.front();
  detail::peak_detect_detunings(prob, refined);
  detail::scan_angles(prob, refined);
  starts.push_back(refined);

  Eigen::VectorXd closed = refined;
  if (detail::pair_closed_form(prob, closed)) starts.push_back(closed);

  detail::LmOutcome best;
  for (const auto& s : starts) {
    detail::LmOutcome run = detail::levenberg_marquardt(prob, s);
    if (run.cost < best.cost) best = std::move(run);
  }

  FitResult result;
  result.converged = best.converged;
  result.iterations = best.iterations;
  result.message = best.message;
  result.cost = best.cost;
  result.residuals.assign(best.residuals.data(),
                          best.residuals.data() + best.residuals.size());

  FitParams fitted = prob.unpack(best.x);
  for (auto& ps : fitted.psi) ps = fold_angle(ps);
  result.best = fitted;
  result.free_names = prob.free_names();

  const std::size_t m = prob.n_residuals();
  const std::size_t n = prob.n_params();
  result.reduced_chi2 =
      m > n ? best.cost / static_cast<double>(m - n) : 0.0;

  // Identifiability from the column-scaled Jacobian at the optimum; the
  // covariance uses the raw Jacobian with the scaled-inverse Gauss-Newton
  // Hessian, and rank-deficient directions are reported by name.
  const Eigen::MatrixXd J = prob.jacobian(best.x);
  Eigen::VectorXd col_scale(J.cols());
  for (Eigen::Index c = 0; c < J.cols(); ++c)
    col_scale[c] = std::max(J.col(c).norm(), 1e-300);
  const Eigen::MatrixXd Js = J * col_scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Js, Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  result.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double sv_max = sv.size() ? sv[0] : 0.0;
  // Conditioning of the identifiable subspace: directions below the rank
  // tolerance are flagged by name instead of driving the ratio to infinity.
  double sv_min_id = 0.0;
  for (Eigen::Index s = 0; s < sv.size(); ++s)
    if (sv[s] > opts.rank_tol * sv_max) sv_min_id = sv[s];
  result.condition_number =
      sv_min_id > 0.0 ? sv_max / sv_min_id
                      : std::numeric_limits<double>::infinity();

  std::vector<bool> flagged(n, false);
  for (Eigen::Index s = 0; s < sv.size(); ++s) {
    if (sv[s] > opts.rank_tol * sv_max) continue;
    const Eigen::VectorXd dir = svd.matrixV().col(s);
    const double peak = dir.cwiseAbs().maxCoeff();
    for (Eigen::Index c = 0; c < dir.size(); ++c)
      if (std::abs(dir[c]) > 0.3 * peak)
        flagged[static_cast<std::size_t>(c)] = true;
  }
  for (std::size_t c = 0; c < n; ++c)
    if (flagged[c]) result.unidentifiable.push_back(result.free_names[c]);
  if (init.variant == GVariant::AsPrinted) {
    result.unidentifiable.emplace_back(
        "kappa_c_hz (not present in the fitted model)");
    result.unidentifiable.emplace_back(
        "delta_c_hz (not present in the fitted model)");
  }
  if (!opts.g_bs_prior)
    result.unidentifiable.emplace_back(
        "g_bs_hz/g_dc_hz split (only the sum g_a enters the model; "
        "reported as an even split)");

  // sigma^2 (J^T J)^+ in internal coordinates, then rescaled to reporting
  // units (Hz for rates and detunings).
  const double sigma_sq =
      m > n ? best.cost / static_cast<double>(m - n) : 0.0;
  Eigen::VectorXd inv_sv2 = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index s = 0; s < sv.size(); ++s)
    if (sv[s] > opts.rank_tol * sv_max) inv_sv2[s] = 1.0 / (sv[s] * sv[s]);
  const Eigen::MatrixXd cov_scaled =
      svd.matrixV() * inv_sv2.asDiagonal() * svd.matrixV().transpose();
  const Eigen::VectorXd to_internal = col_scale.cwiseInverse();
  const Eigen::VectorXd report = prob.report_scales(best.x);
  Eigen::MatrixXd cov(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      cov(a, b) = sigma_sq * cov_scaled(a, b) * to_internal[a] *
                  to_internal[b] * report[a] * report[b];
  result.covariance = cov;

  FitParams sigma = fitted;
  sigma.kappa_c = 0.0;
  sigma.delta_c = 0.0;
  sigma.eta = 0.0;
  const auto sd = [&](std::size_t i) {
    return std::sqrt(std::max(0.0, cov(i, i)));
  };
  const double sigma_ga_hz = sd(0);
  sigma.g_bs = rad_from_hz(sigma_ga_hz / 2.0);
  sigma.g_dc = rad_from_hz(sigma_ga_hz / 2.0);
  sigma.kappa_a = rad_from_hz(sd(1));
  if (prob.meter_in_model()) {
    sigma.kappa_c = rad_from_hz(sd(2));
    sigma.delta_c = rad_from_hz(sd(3));
  }
  if (opts.fit_eta) sigma.eta = sd(prob.eta_index());
  for (std::size_t k = 0; k < prob.n_groups(); ++k)
    sigma.delta_a[k] = rad_from_hz(sd(prob.delta_a_index(k)));
  for (std::size_t j = 0; j < data.traces.size(); ++j)
    sigma.psi[j] = sd(prob.psi_index(j));
  result.uncertainty = sigma;
  return result;
}

// Model-based identifiability diagnosis on a measurement design, with the
// raw physical parameterization (g_bs and g_dc kept separate on purpose:
// their inseparability is exactly what this reports).
struct IdentifiabilityReport {
  std::vector<std::string> names;
  std::vector<double> singular_values;  // of the column-scaled Jacobian
  double condition_number = 0.0;
  // Unit near-null-space directions over `names`, one row per flagged
  // singular value (including structurally dead, all-zero columns).
  std::vector<std::vector<double>> null_directions;
  Eigen::MatrixXd correlation;  // pseudo-inverse based parameter correlation
};

[[nodiscard]] inline IdentifiabilityReport identifiability_report(
    const FitParams& params, const std::vector<double>& detunings_hz,
    const std::vector<double>& angles_rad, const Band& band,
    double rank_tol = 1e-8) {
  if (detunings_hz.empty() || angles_rad.empty())
    throw std::invalid_argument(
        "identifiability_report: need at least one detuning and one angle");
  const std::vector<double> grid = make_grid(band);

  FitParams p = params;
  p.delta_a.clear();
  for (const double d : detunings_hz) p.delta_a.push_back(rad_from_hz(d));
  const std::size_t n_traces = detunings_hz.size() * angles_rad.size();

  IdentifiabilityReport rep;
  rep.names = {"g_bs", "g_dc", "kappa_a", "kappa_c", "delta_c", "eta"};
  for (std::size_t k = 0; k < detunings_hz.size(); ++k)
    rep.names.push_back("delta_a[" + std::to_string(k) + "]");
  for (std::size_t j = 0; j < n_traces; ++j)
    rep.names.push_back("psi[" + std::to_string(j) + "]");
  const std::size_t n = rep.names.size();

  const auto eval = [&](const FitParams& q,
                        const std::vector<double>& psis) -> Eigen::VectorXd {
    Eigen::VectorXd v(grid.size() * n_traces);
    std::size_t row = 0, j = 0;
    for (std::size_t k = 0; k < detunings_hz.size(); ++k)
      for (std::size_t a = 0; a < angles_rad.size(); ++a, ++j)
        for (const double f : grid)
          v[static_cast<Eigen::Index>(row++)] =
              model_variance(q, k, rad_from_hz(f), psis[j]);
    return v;
  };

  std::vector<double> psis;
  for (std::size_t k = 0; k < detunings_hz.size(); ++k)
    for (const double a : angles_rad) psis.push_back(a);

  const auto perturbed = [&](std::size_t idx, double h, double sign) {
    FitParams q = p;
    std::vector<double> ps = psis;
    const double delta = sign * h;
    if (idx == 0) q.g_bs += delta;
    else if (idx == 1) q.g_dc += delta;
    else if (idx == 2) q.kappa_a += delta;
    else if (idx == 3) q.kappa_c += delta;
    else if (idx == 4) q.delta_c += delta;
    else if (idx == 5) q.eta = std::clamp(q.eta + delta, 0.0, 1.0);
    else if (idx < 6 + detunings_hz.size()) q.delta_a[idx - 6] += delta;
    else ps[idx - 6 - detunings_hz.size()] += delta;
    return eval(q, ps);
  };

  const auto step_of = [&](std::size_t idx) -> double {
    double base = 1.0;
    if (idx == 0) base = std::max(1.0, std::abs(p.g_bs));
    else if (idx == 1) base = std::max(1.0, std::abs(p.g_dc));
    else if (idx == 2) base = p.kappa_a;
    else if (idx == 3) base = p.kappa_c;
    else if (idx == 4) base = std::max(1.0, std::abs(p.delta_c));
    else if (idx == 5) base = 0.5;  // eta probes stay inside [0, 1]
    else if (idx < 6 + detunings_hz.size())
      base = std::abs(p.delta_a[idx - 6]);
    return 1e-6 * std::max(1.0, base);
  };

  Eigen::MatrixXd J(grid.size() * n_traces, n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    const double h = step_of(idx);
    J.col(static_cast<Eigen::Index>(idx)) =
        (perturbed(idx, h, +1.0) - perturbed(idx, h, -1.0)) / (2.0 * h);
  }

  Eigen::VectorXd col_norm(n);
  for (std::size_t c = 0; c < n; ++c)
    col_norm[c] = J.col(static_cast<Eigen::Index>(c)).norm();
  const double norm_peak = col_norm.maxCoeff();

  // Structurally dead columns never make it into the SVD; they are their
  // own null directions.
  std::vector<std::size_t> live;
  for (std::size_t c = 0; c < n; ++c) {
    if (col_norm[c] > rank_tol * norm_peak) {
      live.push_back(c);
    } else {
      std::vector<double> dir(n, 0.0);
      dir[c] = 1.0;
      rep.null_directions.push_back(std::move(dir));
    }
  }

  Eigen::MatrixXd Js(J.rows(), static_cast<Eigen::Index>(live.size()));
  for (std::size_t c = 0; c < live.size(); ++c)
    Js.col(static_cast<Eigen::Index>(c)) =
        J.col(static_cast<Eigen::Index>(live[c])) / col_norm[live[c]];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Js, Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  rep.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double sv_max = sv.size() ? sv[0] : 0.0;
  // Conditioning of the identifiable subspace; known-degenerate directions
  // (like the coupling split) are reported separately instead of making
  // every design look equally singular.
  double sv_min_id = 0.0;
  for (Eigen::Index s = 0; s < sv.size(); ++s)
    if (sv[s] > rank_tol * sv_max) sv_min_id = sv[s];
  rep.condition_number = sv_min_id > 0.0
                             ? sv_max / sv_min_id
                             : std::numeric_limits<double>::infinity();
  for (Eigen::Index s = 0; s < sv.size(); ++s) {
    if (sv[s] > rank_tol * sv_max) continue;
    std::vector<double> dir(n, 0.0);
    for (std::size_t c = 0; c < live.size(); ++c)
      dir[live[c]] = svd.matrixV()(static_cast<Eigen::Index>(c), s);
    rep.null_directions.push_back(std::move(dir));
  }

  Eigen::VectorXd inv_sv2 = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index s = 0; s < sv.size(); ++s)
    if (sv[s] > rank_tol * sv_max) inv_sv2[s] = 1.0 / (sv[s] * sv[s]);
  const Eigen::MatrixXd cov_live =
      svd.matrixV() * inv_sv2.asDiagonal() * svd.matrixV().transpose();
  Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t a = 0; a < live.size(); ++a)
    for (std::size_t b = 0; b < live.size(); ++b) {
      const double den = std::sqrt(cov_live(a, a) * cov_live(b, b));
      corr(static_cast<Eigen::Index>(live[a]),
           static_cast<Eigen::Index>(live[b])) =
          den > 0.0 ? cov_live(a, b) / den : 0.0;
    }
  rep.correlation = corr;
  return rep;
}

}  // namespace cqnc
