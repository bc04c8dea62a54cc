#pragma once

// Umbrella header for the cascaded quantum-noise-cancellation library.

#include "cqnc/budget.hpp"
#include "cqnc/covariance.hpp"
#include "cqnc/efficiency.hpp"
#include "cqnc/fit.hpp"
#include "cqnc/fit_model.hpp"
#include "cqnc/format.hpp"
#include "cqnc/io.hpp"
#include "cqnc/matching.hpp"
#include "cqnc/params.hpp"
#include "cqnc/polarization.hpp"
#include "cqnc/spectra.hpp"
#include "cqnc/susceptibility.hpp"
#include "cqnc/svg.hpp"
#include "cqnc/synth.hpp"
#include "cqnc/traces.hpp"
#include "cqnc/units.hpp"
#include "cqnc/version.hpp"
