#include "fofr/pipeline.hpp"

#include <algorithm>
#include <set>

namespace fofr {

namespace {

struct FittedSide {
    SideModel model;
    SideDiagnostics diagnostics;
    Matrix scores;  // N x components
};

/// Training phase for one side: per-channel smoothing and standardization,
/// univariate FPCA, score covariance and multivariate recombination.
FittedSide fit_side(const std::vector<std::vector<ObservationSeries>>& by_channel,
                    const std::vector<std::string>& names, const Interval& domain, const SideConfig& config,
                    const std::string& side, std::vector<std::string>& warnings) {
    FittedSide out;
    auto& model = out.model;
    model.domain = domain;
    model.channels = names;
    model.grid = with_stage("grid/" + side, [&] { return make_grid(domain, config.grid_size); });
    const auto& grid = model.grid;
    const std::size_t n = by_channel.front().size();

    TruncationRule univariate_rule = config.rule;
    univariate_rule.max_components =
        std::min({univariate_rule.max_components, n - 1, static_cast<std::size_t>(grid.size())});

    std::vector<std::vector<ObservationSeries>> standardized(names.size());
    std::vector<Matrix> channel_scores;
    for (std::size_t c = 0; c < names.size(); ++c) {
        const auto& series = by_channel[c];
        const std::string label = side + "/channel=" + std::to_string(c + 1);
        ChannelDiagnostics diag;
        diag.name = names[c];

        const auto mean = with_stage("smoothing/" + label + "/mean",
                                     [&] { return smooth_mean(series, config.kernel, grid); });
        const auto surface = with_stage("smoothing/" + label + "/covariance",
                                        [&] { return smooth_covariance(series, mean, config.kernel, grid); });
        auto params = make_standardization(mean, surface);
        diag.mean_bandwidth = mean.bandwidth;
        diag.cov_bandwidth = surface.bandwidth;
        diag.variance_clipped = params.clipped;
        diag.degenerate = params.degenerate();
        if (params.clipped > 0) {
            warnings.push_back(label + " ('" + names[c] + "'): variance floored at " + std::to_string(params.clipped) +
                               " grid points");
        }

        auto& z = standardized[c];
        for (const auto& s : series) {
            z.push_back(standardize(s, params));
            diag.extrapolated_points += sample_on_grid(s, grid).extrapolated;
        }

        UnivariateEigenSystem eig;
        eig.channel = names[c];
        eig.grid = grid;
        eig.functions = Matrix(0, grid.size());
        if (diag.degenerate) {
            warnings.push_back(label + " ('" + names[c] + "'): no variance; channel contributes no components");
        } else {
            eig = with_stage("fpca/" + label, [&] {
                CovarianceSurface z_surface = surface;
                const Vector inv_sd = params.variance.cwiseSqrt().cwiseInverse();
                z_surface.values = inv_sd.asDiagonal() * surface.values * inv_sd.asDiagonal();
                return univariate_fpca(z_surface, univariate_rule, names[c]);
            });
        }
        Matrix scores(static_cast<Index>(n), eig.size());
        with_stage("fpca/" + label, [&] {
            for (std::size_t i = 0; i < n; ++i)
                if (eig.size() > 0) scores.row(static_cast<Index>(i)) = project_univariate(z[i], eig).transpose();
        });
        diag.spectrum = eig.spectrum;
        diag.selected = static_cast<std::size_t>(eig.size());
        diag.orthonormality_error = orthonormality_error(eig);

        model.standardization.push_back(std::move(params));
        model.mean_bandwidth.push_back(mean.bandwidth);
        model.cov_bandwidth.push_back(surface.bandwidth);
        model.univariate.push_back(std::move(eig));
        channel_scores.push_back(std::move(scores));
        out.diagnostics.channels.push_back(std::move(diag));
    }

    Index total = 0;
    for (const auto& s : channel_scores) total += s.cols();
    if (total == 0) throw Error(ErrorCode::EmptySpectrum, "every channel is degenerate").staged("fpca/" + side);
    Matrix stacked(static_cast<Index>(n), total);
    Index offset = 0;
    for (const auto& s : channel_scores) {
        stacked.middleCols(offset, s.cols()) = s;
        offset += s.cols();
    }

    model.basis = with_stage("fpca/" + side + "/multivariate", [&] {
        return multivariate_fpca(model.univariate, score_covariance(stacked), config.rule);
    });
    out.diagnostics.spectrum = model.basis.spectrum;
    out.diagnostics.selected = static_cast<std::size_t>(model.basis.size());
    out.diagnostics.orthonormality_error = orthonormality_error(model.basis);

    out.scores.resize(static_cast<Index>(n), model.basis.size());
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<ObservationSeries> sample;
        for (std::size_t c = 0; c < names.size(); ++c) sample.push_back(standardized[c][i]);
        out.scores.row(static_cast<Index>(i)) = project_multivariate(sample, model.basis).transpose();
    }
    return out;
}

std::vector<std::vector<ObservationSeries>> by_channel(const FunctionalDataset& data, Role role) {
    const std::size_t count = role == Role::Covariate ? data.n_covariates() : data.n_responses();
    std::vector<std::vector<ObservationSeries>> out;
    for (std::size_t c = 0; c < count; ++c) out.push_back(data.channel(role, c));
    return out;
}

}  // namespace

std::string to_string(RegressorKind kind) { return kind == RegressorKind::Network ? "network" : "fflm"; }

RegressorKind parse_regressor_kind(const std::string& name) {
    if (name == "network" || name == "nn") return RegressorKind::Network;
    if (name == "fflm") return RegressorKind::Fflm;
    throw Error(ErrorCode::BadConfig, "unknown regressor '" + name + "'");
}

void validate_config(const PipelineConfig& config) {
    for (const auto* side : {&config.covariate, &config.response}) {
        if (side->grid_size < 2) throw Error(ErrorCode::BadGridSize, "grid size must be >= 2");
        validate_rule(side->rule);
    }
    for (auto w : config.hidden_widths)
        if (w < 1) throw Error(ErrorCode::BadConfig, "hidden widths must be >= 1");
    validate_train_config(config.training);
    if (!(config.ridge >= 0.0)) throw Error(ErrorCode::BadConfig, "ridge must be non-negative");
}

RegressorKind TrainedModel::kind() const {
    return std::holds_alternative<NetworkParams>(regressor) ? RegressorKind::Network : RegressorKind::Fflm;
}

Vector TrainedModel::regress(const Vector& input_scores) const {
    if (const auto* net = std::get_if<NetworkParams>(&regressor)) return forward(*net, input_scores);
    return std::get<FflmParams>(regressor).apply(input_scores);
}

std::size_t TrainedModel::parameter_count() const {
    if (const auto* net = std::get_if<NetworkParams>(&regressor)) return net->scalar_count();
    return count_params(std::get<FflmParams>(regressor));
}

TrainOutcome train_pipeline(const FunctionalDataset& data, const PipelineConfig& config) {
    with_stage("config", [&] {
        validate_config(config);
        validate_kernel(config.covariate.kernel, data.covariate_domain);
        validate_kernel(config.response.kernel, data.response_domain);
    });
    with_stage("data", [&] { validate_dataset(data, LoadOptions{true}); });

    TrainOutcome out;
    auto& diag = out.diagnostics;
    auto covariate = fit_side(by_channel(data, Role::Covariate), data.covariate_names, data.covariate_domain,
                              config.covariate, "covariate", diag.warnings);
    auto response = fit_side(by_channel(data, Role::Response), data.response_names, data.response_domain,
                             config.response, "response", diag.warnings);

    auto& model = out.model;
    model.config = config;
    model.covariate = std::move(covariate.model);
    model.response = std::move(response.model);
    diag.covariate = std::move(covariate.diagnostics);
    diag.response = std::move(response.diagnostics);
    out.input_scores = std::move(covariate.scores);
    out.target_scores = std::move(response.scores);

    with_stage("regression", [&] {
        if (config.regressor == RegressorKind::Fflm) {
            auto fit = fit_fflm(out.input_scores, out.target_scores, config.ridge);
            diag.train_mse = (out.target_scores - fit.apply(out.input_scores)).squaredNorm() /
                             static_cast<double>(out.target_scores.size());
            model.regressor = std::move(fit);
        } else {
            NetworkSpec spec{model.input_dim(), config.hidden_widths, model.output_dim(), config.activation,
                             config.network_seed};
            auto trained = train_network(spec, config.training, out.input_scores, out.target_scores);
            diag.train_mse = mse_loss(trained.params, out.input_scores, out.target_scores);
            diag.training = std::move(trained.log);
            model.regressor = std::move(trained.params);
        }
    });
    return out;
}

Vector PredictionSet::at(std::size_t i, std::size_t d, const Vector& times) const {
    return interpolate(grid, values.at(i).at(d), times);
}

void check_channels(const TrainedModel& model, const std::vector<std::string>& covariate_names) {
    const auto& expected = model.covariate.channels;
    if (covariate_names == expected) return;
    std::set<std::string> want(expected.begin(), expected.end()), have(covariate_names.begin(), covariate_names.end());
    std::string missing, extra;
    for (const auto& n : want)
        if (!have.count(n)) missing += (missing.empty() ? "" : ", ") + n;
    for (const auto& n : have)
        if (!want.count(n)) extra += (extra.empty() ? "" : ", ") + n;
    std::string msg = "covariate channels do not match the model";
    if (!missing.empty()) msg += "; missing: " + missing;
    if (!extra.empty()) msg += "; unexpected: " + extra;
    if (missing.empty() && extra.empty()) msg += "; order differs";
    throw Error(ErrorCode::ChannelMismatch, msg);
}

std::vector<ObservationSeries> standardize_covariates(const TrainedModel& model,
                                                      const std::vector<ObservationSeries>& covariates) {
    const auto& side = model.covariate;
    if (covariates.size() != side.channels.size())
        throw Error(ErrorCode::ChannelMismatch, "expected " + std::to_string(side.channels.size()) +
                                                    " covariate series, got " + std::to_string(covariates.size()));
    std::vector<ObservationSeries> z;
    for (std::size_t r = 0; r < covariates.size(); ++r) {
        validate_series(covariates[r], side.domain, "covariate '" + side.channels[r] + "'");
        z.push_back(standardize(covariates[r], side.standardization[r]));
    }
    return z;
}

Vector covariate_scores(const TrainedModel& model, const std::vector<ObservationSeries>& covariates) {
    return project_multivariate(standardize_covariates(model, covariates), model.covariate.basis);
}

std::vector<Vector> predict_subject(const TrainedModel& model, const std::vector<ObservationSeries>& covariates) {
    const Vector eta = covariate_scores(model, covariates);
    const auto z_curves = reconstruct(model.regress(eta), model.response.basis);
    std::vector<Vector> out;
    for (std::size_t d = 0; d < z_curves.size(); ++d)
        out.push_back(destandardize_on_grid(z_curves[d], model.response.standardization[d]));
    return out;
}

PredictionSet predict_pipeline(const TrainedModel& model, const FunctionalDataset& new_data) {
    check_channels(model, new_data.covariate_names);
    if (!(new_data.covariate_domain == model.covariate.domain))
        throw Error(ErrorCode::DomainViolation, "covariate domain differs from the model's");
    PredictionSet out;
    out.channels = model.response.channels;
    out.grid = model.response.grid;
    for (std::size_t i = 0; i < new_data.n_subjects(); ++i) {
        out.subject_ids.push_back(new_data.subject_ids[i]);
        out.values.push_back(with_stage("predict/subject=" + new_data.subject_ids[i],
                                        [&] { return predict_subject(model, new_data.covariates[i]); }));
    }
    return out;
}

}  // namespace fofr
