#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fofr/core.hpp"
#include "fofr/fflm.hpp"
#include "fofr/fpca.hpp"
#include "fofr/network.hpp"
#include "fofr/smoothing.hpp"

namespace fofr {

enum class RegressorKind { Network, Fflm };

std::string to_string(RegressorKind kind);
RegressorKind parse_regressor_kind(const std::string& name);

/// Smoothing and truncation settings for one side (covariates or responses).
struct SideConfig {
    Index grid_size = 101;
    KernelSpec kernel;
    TruncationRule rule;
};

struct PipelineConfig {
    SideConfig covariate;
    SideConfig response;
    RegressorKind regressor = RegressorKind::Network;
    std::vector<Index> hidden_widths{16};
    Activation activation = Activation::Elu;
    std::uint64_t network_seed = 0;
    TrainConfig training;
    double ridge = 0.0;
};

void validate_config(const PipelineConfig& config);

/// Everything the application phase needs for one side.
struct SideModel {
    Interval domain;
    EvalGrid grid;
    std::vector<std::string> channels;
    std::vector<StandardizationParams> standardization;
    std::vector<UnivariateEigenSystem> univariate;
    std::vector<double> mean_bandwidth;
    std::vector<double> cov_bandwidth;
    MultivariateEigenSystem basis;

    Index components() const { return basis.size(); }
};

using Regressor = std::variant<NetworkParams, FflmParams>;

inline constexpr const char* kModelFormatVersion = "1";

struct TrainedModel {
    SideModel covariate;  ///< basis holds Psi (L components)
    SideModel response;   ///< basis holds Phi (P components)
    Regressor regressor;
    PipelineConfig config;

    Index input_dim() const { return covariate.components(); }
    Index output_dim() const { return response.components(); }
    RegressorKind kind() const;
    Vector regress(const Vector& input_scores) const;
    std::size_t parameter_count() const;
};

struct ChannelDiagnostics {
    std::string name;
    double mean_bandwidth = 0.0;
    double cov_bandwidth = 0.0;
    std::size_t variance_clipped = 0;
    bool degenerate = false;
    std::size_t extrapolated_points = 0;
    Vector spectrum;
    std::size_t selected = 0;
    double orthonormality_error = 0.0;
};

struct SideDiagnostics {
    std::vector<ChannelDiagnostics> channels;
    Vector spectrum;
    std::size_t selected = 0;
    double orthonormality_error = 0.0;
};

struct TrainDiagnostics {
    SideDiagnostics covariate;
    SideDiagnostics response;
    TrainingLog training;
    double train_mse = 0.0;
    std::vector<std::string> warnings;
};

struct TrainOutcome {
    TrainedModel model;
    TrainDiagnostics diagnostics;
    Matrix input_scores;   ///< N x L, Psi^T X_z per subject
    Matrix target_scores;  ///< N x P, Phi^T Y_z per subject
};

/// Standardization, multivariate FPCA on both sides, then the score-space
/// regressor. Errors carry a stage label such as `fpca/response/channel=2`.
TrainOutcome train_pipeline(const FunctionalDataset& data, const PipelineConfig& config);

struct PredictionSet {
    std::vector<std::string> subject_ids;
    std::vector<std::string> channels;
    EvalGrid grid;
    std::vector<std::vector<Vector>> values;  ///< values[i][d] on the grid, original scale

    std::size_t n_subjects() const { return subject_ids.size(); }
    /// Prediction for subject i, channel d at arbitrary times (linear interpolation).
    Vector at(std::size_t i, std::size_t d, const Vector& times) const;
};

/// Standardized covariate series of one subject, using training parameters.
std::vector<ObservationSeries> standardize_covariates(const TrainedModel& model,
                                                      const std::vector<ObservationSeries>& covariates);

/// eta = Psi^T X_z for one subject.
Vector covariate_scores(const TrainedModel& model, const std::vector<ObservationSeries>& covariates);

/// Per-channel predicted curves on the response grid for one subject.
std::vector<Vector> predict_subject(const TrainedModel& model, const std::vector<ObservationSeries>& covariates);

/// Checks channel names against the model; throws ChannelMismatch listing
/// missing and unexpected covariates.
void check_channels(const TrainedModel& model, const std::vector<std::string>& covariate_names);

PredictionSet predict_pipeline(const TrainedModel& model, const FunctionalDataset& new_data);

}  // namespace fofr
