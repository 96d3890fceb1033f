#pragma once

#include "krlab/config.hpp"
#include "krlab/report.hpp"

namespace krlab {

// Runs the named experiment with validated parameters and returns metrics,
// assertions, and plot-ready tables. Pure function of the configuration:
// identical configs produce byte-identical tables and summaries (wall time
// excluded). Throws numerical_error when a computation leaves its domain;
// assertion failures are recorded, not thrown.
ExperimentReport run_scenario(const ExperimentConfig& cfg);

}  // namespace krlab
