#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "fofr/error.hpp"
#include "fofr/metrics.hpp"
#include "fofr/model_io.hpp"
#include "fofr/pipeline.hpp"
#include "fofr/report.hpp"
#include "fofr/synthgen.hpp"

namespace fofr::cli {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
}

/// Parses a JSON file, reporting syntax errors with a line number.
Json parse_json_file(const fs::path& path, ErrorCode code) {
    const std::string text = read_text(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw Error(code, path.string() + ":" + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
    }
}

/// Any failure to load a model artifact is a runtime error, including a missing file.
TrainedModel load_artifact(const fs::path& path) {
    try {
        return load_model(path);
    } catch (const Error& e) {
        if (!e.is_input_error()) throw e.staged("load-model");
        throw Error(ErrorCode::CorruptArtifact, e.detail()).staged("load-model");
    }
}

struct SplitSpec {
    double test_fraction = 0.0;
    std::uint64_t seed = 0;
};

struct RunConfig {
    fs::path data;
    fs::path schema;
    fs::path model_out;
    fs::path report_out;
    fs::path test_data_out;
    SplitSpec split;
    Json pipeline = Json::object();
};

RunConfig run_config_from_json(const Json& j, const fs::path& base_dir) {
    RunConfig rc;
    auto path_field = [&](const char* key) -> fs::path {
        if (!j.contains(key) || j.at(key).is_null()) return {};
        fs::path p = j.at(key).get<std::string>();
        return p.is_absolute() ? p : base_dir / p;
    };
    try {
        rc.data = path_field("data");
        rc.schema = path_field("schema");
        rc.model_out = path_field("model_out");
        rc.report_out = path_field("report_out");
        rc.test_data_out = path_field("test_data_out");
        if (j.contains("split")) {
            const auto& s = j.at("split");
            rc.split.test_fraction = s.value("test_fraction", 0.0);
            rc.split.seed = s.value("seed", std::uint64_t{0});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadConfig, e.what());
    }
    for (const char* key : {"covariate", "response", "regressor", "network", "training", "ridge"})
        if (j.contains(key)) rc.pipeline[key] = j.at(key);
    return rc;
}

void validate_run_config(const RunConfig& rc) {
    if (rc.data.empty()) throw Error(ErrorCode::BadConfig, "no data path (config 'data' or --data)");
    if (rc.schema.empty()) throw Error(ErrorCode::BadConfig, "no schema path (config 'schema' or --schema)");
    if (rc.model_out.empty()) throw Error(ErrorCode::BadConfig, "no model path (config 'model_out' or --model-out)");
    if (!(rc.split.test_fraction >= 0.0 && rc.split.test_fraction <= 0.5))
        throw Error(ErrorCode::BadConfig, "split.test_fraction must lie in [0, 0.5]");
    std::set<std::string> seen;
    for (const auto* p : {&rc.data, &rc.schema, &rc.model_out, &rc.report_out, &rc.test_data_out}) {
        if (p->empty()) continue;
        if (!seen.insert(fs::absolute(*p).lexically_normal().string()).second)
            throw Error(ErrorCode::BadConfig, "path '" + p->string() + "' is used twice in the run config");
    }
}

/// Subject positions held out for testing; sorted so row order follows the input.
std::vector<std::size_t> test_rows(std::size_t n, const SplitSpec& split) {
    const auto n_test = static_cast<std::size_t>(std::llround(split.test_fraction * static_cast<double>(n)));
    if (n_test == 0) return {};
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(split.seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(order[i], order[pick(rng)]);
    }
    order.resize(n_test);
    std::sort(order.begin(), order.end());
    return order;
}

int cmd_synth(const fs::path& scenario_path, const fs::path& out_dir, Index grid_size, std::ostream& out) {
    const SynthScenario scenario = scenario_from_json(parse_json_file(scenario_path, ErrorCode::BadScenario));
    const SynthResult result = generate(scenario);
    const SynthFiles files = write_synth(result, out_dir, grid_size);
    out << "subjects " << result.data.n_subjects() << ", covariates " << result.data.n_covariates()
        << ", responses " << result.data.n_responses() << ", planted L " << scenario.covariate_eigenvalues.size()
        << ", planted P " << scenario.mapping.output_dim() << "\n";
    out << "wrote " << files.data.string() << "\n";
    out << "wrote " << files.schema.string() << "\n";
    out << "wrote " << files.truth.string() << "\n";
    return kExitOk;
}

struct TrainFlags {
    std::string config, data, schema, model_out, report_out, test_out, baseline;
    std::optional<std::uint64_t> seed;
    std::optional<double> test_fraction;
};

int cmd_train(const TrainFlags& flags, std::ostream& out, std::ostream& err) {
    RunConfig rc;
    if (!flags.config.empty()) {
        const fs::path config_path = flags.config;
        rc = run_config_from_json(parse_json_file(config_path, ErrorCode::BadConfig), config_path.parent_path());
    }
    if (!flags.data.empty()) rc.data = flags.data;
    if (!flags.schema.empty()) rc.schema = flags.schema;
    if (!flags.model_out.empty()) rc.model_out = flags.model_out;
    if (!flags.report_out.empty()) rc.report_out = flags.report_out;
    if (!flags.test_out.empty()) rc.test_data_out = flags.test_out;
    if (flags.test_fraction) rc.split.test_fraction = *flags.test_fraction;
    if (rc.report_out.empty() && !rc.model_out.empty()) rc.report_out = fs::path(rc.model_out.string() + ".report.json");
    validate_run_config(rc);

    const Schema schema = load_schema(rc.schema);
    PipelineConfig base;
    base.covariate.grid_size = schema.covariate_grid_size;
    base.response.grid_size = schema.response_grid_size;
    PipelineConfig config = config_from_json(rc.pipeline, base);
    if (!flags.baseline.empty()) {
        if (flags.baseline != "fflm") throw Error(ErrorCode::BadConfig, "--baseline accepts only 'fflm'");
        config.regressor = RegressorKind::Fflm;
    }
    if (flags.seed) {
        config.network_seed = *flags.seed;
        config.training.seed = *flags.seed;
        rc.split.seed = *flags.seed;
    }
    validate_config(config);

    FunctionalDataset data = load_dataset(rc.data, schema);
    const auto held_out = test_rows(data.n_subjects(), rc.split);
    if (!held_out.empty()) {
        std::vector<std::size_t> kept;
        for (std::size_t i = 0, k = 0; i < data.n_subjects(); ++i) {
            if (k < held_out.size() && held_out[k] == i)
                ++k;
            else
                kept.push_back(i);
        }
        if (!rc.test_data_out.empty()) {
            std::ostringstream csv;
            write_dataset(csv, data.subset(held_out));
            write_text(rc.test_data_out, csv.str());
        }
        data = data.subset(kept);
        validate_dataset(data);
    }

    const TrainOutcome outcome = train_pipeline(data, config);
    write_text(rc.model_out, model_to_string(outcome.model));
    write_text(rc.report_out, diagnostics_to_json(outcome.diagnostics, outcome.model).dump(2) + "\n");
    for (const auto& w : outcome.diagnostics.warnings) err << "warning: " << w << "\n";

    out << "trained on " << data.n_subjects() << " subjects";
    if (!held_out.empty()) out << " (" << held_out.size() << " held out)";
    out << "\n";
    out << "L = " << outcome.model.input_dim() << ", P = " << outcome.model.output_dim() << "\n";
    out << "regressor " << to_string(outcome.model.kind()) << ", parameters " << outcome.model.parameter_count()
        << "\n";
    out << "train mse " << format_double(outcome.diagnostics.train_mse) << "\n";
    out << "wrote " << rc.model_out.string() << "\n";
    out << "wrote " << rc.report_out.string() << "\n";
    if (!held_out.empty() && !rc.test_data_out.empty()) out << "wrote " << rc.test_data_out.string() << "\n";
    return kExitOk;
}

/// Keeps the header and covariate rows; collects covariate names in file order.
std::string covariate_rows(const std::string& text, std::vector<std::string>& names) {
    std::istringstream in(text);
    std::string line, kept;
    std::set<std::string> seen;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            kept += line + "\n";
            header = false;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream row(line);
        std::string field;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() >= 3 && fields[2] == "response") continue;
        if (fields.size() >= 3 && fields[2] == "covariate" && seen.insert(fields[1]).second)
            names.push_back(fields[1]);
        kept += line + "\n";
    }
    return kept;
}

int cmd_predict(const fs::path& model_path, const fs::path& data_path, const fs::path& out_path, std::ostream& out) {
    const TrainedModel model = load_artifact(model_path);
    std::vector<std::string> names;
    const std::string filtered = covariate_rows(read_text(data_path), names);
    const std::set<std::string> have(names.begin(), names.end());
    const std::set<std::string> want(model.covariate.channels.begin(), model.covariate.channels.end());
    if (have != want) check_channels(model, names);

    Schema schema;
    schema.covariates = model.covariate.channels;
    schema.responses = model.response.channels;
    schema.covariate_domain = model.covariate.domain;
    schema.response_domain = model.response.domain;
    std::istringstream in(filtered);
    const FunctionalDataset data = read_dataset(in, schema, LoadOptions{.training = false});

    const PredictionSet predictions = predict_pipeline(model, data);
    std::ostringstream csv;
    write_curve_table(csv, to_table(predictions));
    write_text(out_path, csv.str());
    out << "predicted " << predictions.n_subjects() << " subjects x " << predictions.channels.size()
        << " responses x " << predictions.grid.size() << " grid points\n";
    out << "wrote " << out_path.string() << "\n";
    return kExitOk;
}

int cmd_evaluate(const fs::path& predictions_path, const fs::path& truth_path, const std::string& out_path,
                 bool json, std::ostream& out, std::ostream& err) {
    const CurveTable predictions = load_curve_table(predictions_path);
    const CurveTable truth = load_curve_table(truth_path);
    const MetricsReport report = with_stage("evaluate", [&] { return evaluate(predictions, truth); });
    if (report.truth_only_subjects > 0 || report.prediction_only_subjects > 0)
        err << "warning: scoring " << report.aligned_subjects << " shared subjects; " << report.truth_only_subjects
            << " only in truth, " << report.prediction_only_subjects << " only in predictions\n";
    const std::string json_text = metrics_to_json(report).dump(2) + "\n";
    if (!out_path.empty()) write_text(out_path, json_text);
    out << (json ? json_text : metrics_table(report));
    return kExitOk;
}

int cmd_fpca_report(const fs::path& model_path, bool json, std::ostream& out) {
    const TrainedModel model = load_artifact(model_path);
    if (json)
        out << fpca_report_json(model).dump(2) << "\n";
    else
        out << fpca_report_text(model);
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Non-linear function-on-function regression", "fofr"};
    app.require_subcommand(1);

    std::string scenario, synth_out;
    Index synth_grid = 101;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with planted structure");
    synth->add_option("--scenario", scenario, "Scenario JSON")->required();
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--grid-size", synth_grid, "Grid size recorded in the schema");

    TrainFlags tf;
    auto* train = app.add_subcommand("train", "Fit the pipeline and write a model artifact");
    train->add_option("--config", tf.config, "Run config JSON");
    train->add_option("--data", tf.data, "Dataset CSV");
    train->add_option("--schema", tf.schema, "Schema JSON");
    train->add_option("--model-out", tf.model_out, "Model artifact path");
    train->add_option("--report-out", tf.report_out, "Diagnostics JSON path");
    train->add_option("--test-out", tf.test_out, "Where to write held-out subjects");
    train->add_option("--test-fraction", tf.test_fraction, "Fraction of subjects held out");
    train->add_option("--seed", tf.seed, "Seed for network init, training and the split");
    train->add_option("--baseline", tf.baseline, "Use the linear baseline ('fflm')");

    std::string model_path, data_path, pred_out;
    auto* predict = app.add_subcommand("predict", "Predict response curves for new covariates");
    predict->add_option("--model", model_path, "Model artifact")->required();
    predict->add_option("--data", data_path, "Dataset CSV with covariate rows")->required();
    predict->add_option("--out", pred_out, "Predictions CSV")->required();

    std::string eval_pred, eval_truth, eval_out;
    bool eval_json = false;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against observed responses");
    evaluate_cmd->add_option("--predictions", eval_pred, "Predictions CSV")->required();
    evaluate_cmd->add_option("--truth", eval_truth, "Truth CSV (four- or five-column)")->required();
    evaluate_cmd->add_option("--out", eval_out, "Metrics JSON path");
    evaluate_cmd->add_flag("--json", eval_json, "Print JSON instead of a table");

    std::string report_model;
    bool report_json = false;
    auto* report = app.add_subcommand("fpca-report", "Eigenvalue and FVE tables of a model");
    report->add_option("--model", report_model, "Model artifact")->required();
    report->add_flag("--json", report_json, "Print JSON");

    std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rest.begin(), rest.end());
    try {
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (synth->parsed()) return cmd_synth(scenario, synth_out, synth_grid, out);
        if (train->parsed()) return cmd_train(tf, out, err);
        if (predict->parsed()) return cmd_predict(model_path, data_path, pred_out, out);
        if (evaluate_cmd->parsed()) return cmd_evaluate(eval_pred, eval_truth, eval_out, eval_json, out, err);
        if (report->parsed()) return cmd_fpca_report(report_model, report_json, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.is_input_error() ? kExitInput : kExitPipeline;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitPipeline;
    }
    return kExitInput;
}

}  // namespace fofr::cli
