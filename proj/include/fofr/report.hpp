#pragma once

#include <string>

#include "fofr/metrics.hpp"
#include "fofr/model_io.hpp"
#include "fofr/pipeline.hpp"

namespace fofr {

Json diagnostics_to_json(const TrainDiagnostics& diagnostics, const TrainedModel& model);

Json metrics_to_json(const MetricsReport& report);
/// Aligned plain-text table, one row per response channel.
std::string metrics_table(const MetricsReport& report);

/// Eigenvalue / FVE tables for both sides and every channel.
Json fpca_report_json(const TrainedModel& model);
std::string fpca_report_text(const TrainedModel& model);

}  // namespace fofr
