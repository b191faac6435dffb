// End-to-end experiment: prepare -> base classifier -> confusion -> super
// categories -> super classifiers -> punishment voting -> evaluation.
#pragma once

#include "asc/config.hpp"
#include "asc/report.hpp"

namespace asc::harness {

/// Runs every fold, writes intermediate artifacts and the report into
/// config.output_dir, and returns the report. Stage failures are rethrown as
/// StageError naming the stage.
Report run_pipeline(const ExperimentConfig& config);

}  // namespace asc::harness
