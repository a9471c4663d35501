#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fofr/core.hpp"
#include "fofr/pipeline.hpp"

namespace fofr {

/// Curves keyed by subject and variable, in the long CSV dialect.
struct CurveTable {
    std::vector<std::string> subjects;
    std::vector<std::string> variables;
    std::vector<std::vector<ObservationSeries>> series;  ///< series[i][v]; empty series = absent

    const ObservationSeries* find(const std::string& subject, const std::string& variable) const;
};

CurveTable to_table(const PredictionSet& predictions);
CurveTable response_table(const FunctionalDataset& data);

/// Reads `subject_id,variable_id,time,value`, or the five-column dataset
/// dialect (response rows only).
CurveTable read_curve_table(std::istream& in);
CurveTable load_curve_table(const std::filesystem::path& path);
/// Writes the four-column prediction dialect.
void write_curve_table(std::ostream& out, const CurveTable& table);

struct ChannelMetrics {
    std::string name;
    double rmse = 0.0;       ///< mean squared error per point, named as in the tables it mirrors
    double rmse_sqrt = 0.0;  ///< square root of rmse
    double rmspe = 0.0;      ///< mean over subjects of sum (y - yhat)^2 / sum y^2
    std::size_t subjects = 0;
    std::size_t observations = 0;
    std::size_t zero_energy_subjects = 0;  ///< excluded from rmspe
};

struct MetricsReport {
    std::vector<ChannelMetrics> channels;
    double mean_rmse = 0.0;
    double mean_rmse_sqrt = 0.0;
    double mean_rmspe = 0.0;
    std::size_t aligned_subjects = 0;
    std::size_t truth_only_subjects = 0;
    std::size_t prediction_only_subjects = 0;
};

/// Predictions are linearly interpolated to the truth timestamps. Only
/// subjects present in both tables are scored.
MetricsReport evaluate(const CurveTable& predictions, const CurveTable& truth);
MetricsReport evaluate(const PredictionSet& predictions, const FunctionalDataset& truth);

}  // namespace fofr
