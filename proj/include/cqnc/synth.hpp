#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "cqnc/fit_model.hpp"
#include "cqnc/spectra.hpp"
#include "cqnc/traces.hpp"
#include "cqnc/units.hpp"

namespace cqnc {

// Deterministic standard-normal stream.  The integer source is
// std::mt19937_64 (bit-exact by the standard); uniforms are built as
// (x >> 11) * 2^-53 and mapped through the classic Box-Muller transform
//   z1 = sqrt(-2 ln u1) cos(2 pi u2),  z2 = sqrt(-2 ln u1) sin(2 pi u2),
// consuming draws in pairs.  std::normal_distribution is deliberately not
// used because its algorithm is implementation-defined and would break
// seed-stable datasets.
class normal_stream {
 public:
  explicit normal_stream(std::uint64_t seed) : gen_(seed) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();  // keep log(u1) finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(two_pi * u2);
    have_spare_ = true;
    return radius * std::cos(two_pi * u2);
  }

 private:
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Measurement design for synthetic datasets: every detuning is recorded at
// every listed angle on the same grid.  The listed detunings and angles act
// as the true per-group delta_a and per-trace psi; the shared physical
// parameters come from the FitParams truth handed to synth_dataset.
struct SynthDesign {
  std::vector<double> detunings_hz;  // one detuning group per entry
  std::vector<double> angles_rad;    // detection angles recorded per group
  Band band;
  double noise_level = 0.0;  // relative 1-sigma of multiplicative noise
  std::uint64_t seed = 0;
};

// Traces are the model variance times (1 + eps), eps ~ Normal(0,
// noise_level) drawn independently per point, in trace-then-frequency
// order.  Multiplicative noise reflects the roughly constant relative
// error of averaged spectrum-analyzer power estimates.
[[nodiscard]] inline TraceSet synth_dataset(const FitParams& truth,
                                            const SynthDesign& design) {
  require_nonnegative(design.noise_level, "SynthDesign.noise_level");
  if (design.detunings_hz.empty() || design.angles_rad.empty())
    throw std::invalid_argument(
        "synth_dataset: need at least one detuning and one angle");
  const std::vector<double> grid = make_grid(design.band);

  FitParams p = truth;
  p.delta_a.clear();
  for (const double d : design.detunings_hz)
    p.delta_a.push_back(rad_from_hz(d));

  normal_stream noise(design.seed);
  TraceSet set;
  for (std::size_t k = 0; k < design.detunings_hz.size(); ++k) {
    for (std::size_t a = 0; a < design.angles_rad.size(); ++a) {
      Trace t;
      t.detuning_hz = design.detunings_hz[k];
      t.angle_label = std::string(1, static_cast<char>('A' + a % 26));
      t.frequencies_hz = grid;
      t.values.reserve(grid.size());
      for (const double f : grid) {
        const double model =
            model_variance(p, k, rad_from_hz(f), design.angles_rad[a]);
        const double eps =
            design.noise_level > 0.0 ? design.noise_level * noise() : 0.0;
        t.values.push_back(model * (1.0 + eps));
      }
      t.validate("synth_dataset trace");
      set.traces.push_back(std::move(t));
    }
  }
  return set;
}

}  // namespace cqnc
