#include "fofr/report.hpp"

#include <cstdio>
#include <sstream>

namespace fofr {

namespace {

Json spectrum_table(const Vector& spectrum, std::size_t selected) {
    Json j;
    j["eigenvalues"] = vector_to_json(spectrum);
    j["fve"] = spectrum.size() > 0 ? vector_to_json(fve_curve(spectrum)) : Json::array();
    j["selected"] = selected;
    return j;
}

Json side_diagnostics(const SideDiagnostics& d) {
    Json j;
    Json channels = Json::array();
    for (const auto& c : d.channels) {
        Json ch;
        ch["name"] = c.name;
        ch["mean_bandwidth"] = c.mean_bandwidth;
        ch["cov_bandwidth"] = c.cov_bandwidth;
        ch["variance_clipped"] = c.variance_clipped;
        ch["degenerate"] = c.degenerate;
        ch["extrapolated_points"] = c.extrapolated_points;
        ch["orthonormality_error"] = c.orthonormality_error;
        ch["univariate"] = spectrum_table(c.spectrum, c.selected);
        channels.push_back(std::move(ch));
    }
    j["channels"] = std::move(channels);
    j["multivariate"] = spectrum_table(d.spectrum, d.selected);
    j["orthonormality_error"] = d.orthonormality_error;
    return j;
}

Json side_report(const SideModel& side) {
    Json j;
    Json channels = Json::array();
    for (std::size_t c = 0; c < side.channels.size(); ++c) {
        Json ch = spectrum_table(side.univariate[c].spectrum, static_cast<std::size_t>(side.univariate[c].size()));
        ch["name"] = side.channels[c];
        channels.push_back(std::move(ch));
    }
    j["channels"] = std::move(channels);
    j["multivariate"] = spectrum_table(side.basis.spectrum, static_cast<std::size_t>(side.basis.size()));
    return j;
}

void spectrum_text(std::ostringstream& out, const std::string& title, const Vector& spectrum, std::size_t selected) {
    out << title << " (selected " << selected << ")\n";
    out << "  comp      eigenvalue      FVE\n";
    const Vector fve = spectrum.size() > 0 ? fve_curve(spectrum) : Vector();
    char line[96];
    for (Index k = 0; k < spectrum.size(); ++k) {
        std::snprintf(line, sizeof(line), "  %4ld  %14.6e  %7.3f%%%s\n", static_cast<long>(k + 1), spectrum[k],
                      100.0 * fve[k], static_cast<std::size_t>(k) < selected ? "" : "  -");
        out << line;
    }
}

}  // namespace

Json diagnostics_to_json(const TrainDiagnostics& diagnostics, const TrainedModel& model) {
    Json j;
    j["L"] = model.input_dim();
    j["P"] = model.output_dim();
    j["regressor"] = to_string(model.kind());
    j["parameter_count"] = model.parameter_count();
    j["covariate"] = side_diagnostics(diagnostics.covariate);
    j["response"] = side_diagnostics(diagnostics.response);
    j["train_mse"] = diagnostics.train_mse;
    j["training_log"] = {{"train_loss", diagnostics.training.train_loss},
                         {"validation_loss", diagnostics.training.validation_loss},
                         {"best_epoch", diagnostics.training.best_epoch},
                         {"epochs_run", diagnostics.training.epochs_run}};
    j["warnings"] = diagnostics.warnings;
    return j;
}

Json metrics_to_json(const MetricsReport& report) {
    Json j;
    Json channels = Json::array();
    for (const auto& m : report.channels) {
        channels.push_back({{"name", m.name},
                            {"rmse", m.rmse},
                            {"rmse_sqrt", m.rmse_sqrt},
                            {"rmspe", m.rmspe},
                            {"subjects", m.subjects},
                            {"observations", m.observations},
                            {"zero_energy_subjects", m.zero_energy_subjects}});
    }
    j["responses"] = std::move(channels);
    j["mean"] = {{"rmse", report.mean_rmse}, {"rmse_sqrt", report.mean_rmse_sqrt}, {"rmspe", report.mean_rmspe}};
    j["subjects"] = {{"aligned", report.aligned_subjects},
                     {"truth_only", report.truth_only_subjects},
                     {"prediction_only", report.prediction_only_subjects}};
    return j;
}

std::string metrics_table(const MetricsReport& report) {
    std::size_t width = 8;
    for (const auto& m : report.channels) width = std::max(width, m.name.size());
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-*s  %14s  %14s  %10s  %8s\n", static_cast<int>(width), "response", "rmse",
                  "rmse_sqrt", "rmspe", "subjects");
    out << line;
    for (const auto& m : report.channels) {
        std::snprintf(line, sizeof(line), "%-*s  %14.6g  %14.6g  %10.4g  %8zu\n", static_cast<int>(width),
                      m.name.c_str(), m.rmse, m.rmse_sqrt, m.rmspe, m.subjects);
        out << line;
    }
    std::snprintf(line, sizeof(line), "%-*s  %14.6g  %14.6g  %10.4g\n", static_cast<int>(width), "mean",
                  report.mean_rmse, report.mean_rmse_sqrt, report.mean_rmspe);
    out << line;
    return out.str();
}

Json fpca_report_json(const TrainedModel& model) {
    Json j;
    j["L"] = model.input_dim();
    j["P"] = model.output_dim();
    j["covariate"] = side_report(model.covariate);
    j["response"] = side_report(model.response);
    return j;
}

std::string fpca_report_text(const TrainedModel& model) {
    std::ostringstream out;
    out << "L = " << model.input_dim() << ", P = " << model.output_dim() << "\n\n";
    for (const auto* side : {&model.covariate, &model.response}) {
        const std::string name = side == &model.covariate ? "covariate" : "response";
        for (std::size_t c = 0; c < side->channels.size(); ++c) {
            spectrum_text(out, name + " channel '" + side->channels[c] + "'", side->univariate[c].spectrum,
                          static_cast<std::size_t>(side->univariate[c].size()));
            out << '\n';
        }
        spectrum_text(out, name + " multivariate", side->basis.spectrum, static_cast<std::size_t>(side->basis.size()));
        out << '\n';
    }
    return out.str();
}

}  // namespace fofr
