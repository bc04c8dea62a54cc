#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqnc/units.hpp"

namespace cqnc {

// One loss channel of the detection chain.  Homodyne contrast enters the
// product linearly like every other channel; that convention reproduces the
// measured total and is stated here because visibility conventions differ.
struct BudgetChannel {
  std::string name;
  double eta = 1.0;    // channel efficiency in [0, 1]
  double sigma = 0.0;  // 1-sigma uncertainty, >= 0

  void validate() const {
    require_finite(eta, ("budget channel '" + name + "' eta").c_str());
    require_nonnegative(sigma, ("budget channel '" + name + "' sigma").c_str());
    if (eta < 0.0 || eta > 1.0)
      throw std::invalid_argument("budget channel '" + name +
                                  "': eta must lie in [0, 1]");
  }
};

using EfficiencyBudget = std::vector<BudgetChannel>;

struct ValueWithSigma {
  double value = 0.0;
  double sigma = 0.0;
};

// Product of the channel efficiencies with first-order uncertainty
// propagation.  Written through partial derivatives rather than relative
// quadrature so a dead channel (eta = 0) stays well defined.
[[nodiscard]] inline ValueWithSigma total_efficiency(
    const EfficiencyBudget& budget) {
  double product = 1.0;
  for (const auto& ch : budget) {
    ch.validate();
    product *= ch.eta;
  }
  double var = 0.0;
  for (std::size_t i = 0; i < budget.size(); ++i) {
    double partial = budget[i].sigma;  // d(product)/d(eta_i) * sigma_i
    for (std::size_t j = 0; j < budget.size(); ++j)
      if (j != i) partial *= budget[j].eta;
    var += partial * partial;
  }
  return {product, std::sqrt(var)};
}

struct ConsistencyReport {
  ValueWithSigma product;
  ValueWithSigma measured;
  double discrepancy = 0.0;     // product - measured
  double combined_sigma = 0.0;  // quadrature sum of the two uncertainties
  double n_sigma = 0.0;         // |discrepancy| / combined_sigma
  double k = 0.0;               // acceptance multiple used
  bool consistent = false;
};

// Compares the budget product against an independently measured efficiency;
// consistent iff the discrepancy is within k combined standard deviations.
[[nodiscard]] inline ConsistencyReport budget_consistency(
    const EfficiencyBudget& budget, const ValueWithSigma& measured,
    double k = 2.0) {
  require_positive(k, "k");
  require_finite(measured.value, "measured.value");
  require_nonnegative(measured.sigma, "measured.sigma");
  ConsistencyReport rep;
  rep.product = total_efficiency(budget);
  rep.measured = measured;
  rep.discrepancy = rep.product.value - measured.value;
  rep.combined_sigma = std::hypot(rep.product.sigma, measured.sigma);
  rep.k = k;
  if (rep.combined_sigma > 0.0) {
    rep.n_sigma = std::abs(rep.discrepancy) / rep.combined_sigma;
    rep.consistent = rep.n_sigma <= k;
  } else {
    rep.n_sigma = rep.discrepancy == 0.0
                      ? 0.0
                      : std::numeric_limits<double>::infinity();
    rep.consistent = rep.discrepancy == 0.0;
  }
  return rep;
}

}  // namespace cqnc
