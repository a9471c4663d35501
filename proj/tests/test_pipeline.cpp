#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "fofr/error.hpp"
#include "fofr/metrics.hpp"
#include "fofr/model_io.hpp"
#include "fofr/pipeline.hpp"

using namespace fofr;
using fofr::testing::small_config;
using fofr::testing::small_scenario;

namespace {

const SynthResult& planted() {
    static const SynthResult r = [] {
        auto s = small_scenario(2, 200);
        s.sampling.points = 61;
        return generate(s);
    }();
    return r;
}

PipelineConfig planted_config(RegressorKind kind = RegressorKind::Fflm) {
    auto c = small_config(kind);
    c.covariate.grid_size = c.response.grid_size = 61;
    c.covariate.kernel = c.response.kernel = KernelSpec{};
    c.covariate.rule = c.response.rule = TruncationRule{0.99};
    return c;
}

const TrainOutcome& planted_fit() {
    static const TrainOutcome out = train_pipeline(planted().data, planted_config());
    return out;
}

}  // namespace

TEST(TrainPipeline, PlantedLinearInSample) {
    const auto& out = planted_fit();
    EXPECT_EQ(out.model.input_dim(), 3);
    EXPECT_EQ(out.model.output_dim(), 2);
    EXPECT_EQ(out.model.parameter_count(), 6u);
    EXPECT_EQ(out.input_scores.rows(), 200);
    const auto pred = predict_pipeline(out.model, planted().data);
    const auto report = evaluate(pred, planted().data);
    for (const auto& c : report.channels) EXPECT_LE(c.rmspe, 1e-3) << c.name;
    EXPECT_LT(out.diagnostics.covariate.orthonormality_error, 1e-6);
    EXPECT_LT(out.diagnostics.response.orthonormality_error, 1e-6);
}

TEST(PredictPipeline, ReplayedSubjectMatchesTruth) {
    const auto& out = planted_fit();
    const auto& data = planted().data;
    for (std::size_t i : {0u, 17u, 199u}) {
        const auto curves = predict_subject(out.model, data.covariates[i]);
        const auto& truth = data.responses[i][0];
        const Vector at = PredictionSet{{"s"}, {"y1"}, out.model.response.grid, {curves}}.at(0, 0, truth.times);
        EXPECT_LE((at - truth.values).cwiseAbs().maxCoeff(), 1e-2) << i;
    }
}

TEST(PredictPipeline, ZeroScoresGiveTrainingMean) {
    const auto& model = planted_fit().model;
    std::vector<ObservationSeries> mean_curves;
    for (const auto& s : model.covariate.standardization) {
        ObservationSeries series;
        series.times = s.grid.points;
        series.values = s.mean;
        mean_curves.push_back(series);
    }
    EXPECT_LT(covariate_scores(model, mean_curves).cwiseAbs().maxCoeff(), 1e-12);
    const auto curves = predict_subject(model, mean_curves);
    EXPECT_LT((curves[0] - model.response.standardization[0].mean).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PredictPipeline, OneAtATimeEqualsBatched) {
    const auto& model = planted_fit().model;
    const auto batch = predict_pipeline(model, planted().data);
    for (std::size_t i = 0; i < 10; ++i) {
        const auto single = predict_pipeline(model, planted().data.subset({i}));
        EXPECT_EQ(single.values[0], batch.values[i]);
        EXPECT_EQ(single.subject_ids[0], batch.subject_ids[i]);
    }
}

TEST(PredictPipeline, ChannelMismatchListsNames) {
    const auto& model = planted_fit().model;
    try {
        check_channels(model, {"x1", "x7"});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ChannelMismatch);
        const std::string what = e.what();
        EXPECT_NE(what.find("x2"), std::string::npos);
        EXPECT_NE(what.find("x7"), std::string::npos);
    }
    auto renamed = planted().data.subset({0, 1});
    renamed.covariate_names[1] = "x9";
    EXPECT_THROW(predict_pipeline(model, renamed), Error);
    auto shifted = planted().data.subset({0});
    shifted.covariate_domain = {0.0, 2.0};
    try {
        predict_pipeline(model, shifted);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DomainViolation);
    }
}

TEST(TrainPipeline, ConstantResponseChannelIsFlagged) {
    auto s = small_scenario(4, 80);
    s.response_channels = 2;
    auto r = generate(s);
    for (auto& subject : r.data.responses) subject[1].values.setConstant(5.0);
    const auto out = train_pipeline(r.data, small_config());
    EXPECT_FALSE(out.diagnostics.warnings.empty());
    EXPECT_TRUE(out.diagnostics.response.channels[1].degenerate);
    EXPECT_EQ(out.model.response.univariate[1].size(), 0);
    // Components live entirely in the informative channel.
    EXPECT_LT(out.model.response.basis.functions[1].cwiseAbs().maxCoeff(), 1e-12);
    const auto pred = predict_pipeline(out.model, r.data.subset({0}));
    EXPECT_LT((pred.values[0][1].array() - 5.0).abs().maxCoeff(), 1e-9);
}

TEST(TrainPipeline, ErrorsCarryStageLabels) {
    auto config = small_config();
    config.covariate.kernel = KernelSpec{KernelFamily::Epanechnikov, 0.001, 0.05};
    try {
        train_pipeline(generate(small_scenario(1, 20)).data, config);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateWindow);
        EXPECT_EQ(e.stage().rfind("smoothing/covariate/channel=1/mean", 0), 0u) << e.stage();
    }
    auto no_responses = generate(small_scenario(1, 20)).data;
    no_responses.responses.clear();
    no_responses.response_names.clear();
    EXPECT_THROW(train_pipeline(no_responses, small_config()), Error);
}

TEST(TrainPipeline, DeterministicArtifacts) {
    const auto data = generate(small_scenario(6, 50)).data;
    auto config = small_config(RegressorKind::Network);
    config.network_seed = 3;
    config.training.seed = 4;
    const auto a = train_pipeline(data, config);
    const auto b = train_pipeline(data, config);
    EXPECT_EQ(model_to_string(a.model), model_to_string(b.model));
    EXPECT_EQ(a.diagnostics.training.train_loss, b.diagnostics.training.train_loss);
    EXPECT_EQ(a.model.parameter_count(), count_params(NetworkSpec{a.model.input_dim(), {8}, a.model.output_dim()}));
}

TEST(TrainPipeline, ConfigValidation) {
    auto c = small_config();
    c.covariate.grid_size = 1;
    EXPECT_THROW(validate_config(c), Error);
    c = small_config();
    c.ridge = -1.0;
    EXPECT_THROW(validate_config(c), Error);
    c = small_config();
    c.hidden_widths = {0};
    c.regressor = RegressorKind::Network;
    EXPECT_THROW(validate_config(c), Error);
}
