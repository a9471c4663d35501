#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "fofr/error.hpp"
#include "fofr/model_io.hpp"
#include "test_util.hpp"

using namespace fofr;

namespace {

const TrainOutcome& trained(RegressorKind kind) {
    static const auto data = generate(fofr::testing::small_scenario(3)).data;
    static const TrainOutcome fflm = train_pipeline(data, fofr::testing::small_config(RegressorKind::Fflm));
    static const TrainOutcome net = train_pipeline(data, fofr::testing::small_config(RegressorKind::Network));
    return kind == RegressorKind::Fflm ? fflm : net;
}

ErrorCode load_error(const std::string& text) {
    try {
        model_from_string(text);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "loaded";
    return ErrorCode::Io;
}

}  // namespace

TEST(ModelIo, RoundTripPredictsIdentically) {
    const auto data = generate(fofr::testing::small_scenario(4, 10)).data;
    for (auto kind : {RegressorKind::Fflm, RegressorKind::Network}) {
        const auto& model = trained(kind).model;
        const std::string text = model_to_string(model);
        const auto back = model_from_string(text);
        EXPECT_EQ(model_to_string(back), text);
        EXPECT_EQ(back.kind(), kind);
        const auto a = predict_pipeline(model, data);
        const auto b = predict_pipeline(back, data);
        for (std::size_t i = 0; i < a.n_subjects(); ++i) EXPECT_EQ(a.values[i], b.values[i]);
    }
}

TEST(ModelIo, FileRoundTrip) {
    fofr::testing::TempDir dir("model");
    const auto& model = trained(RegressorKind::Fflm).model;
    save_model(model, dir / "m.json");
    EXPECT_EQ(model_to_string(load_model(dir / "m.json")), model_to_string(model));
    EXPECT_THROW(load_model(dir / "missing.json"), Error);
}

TEST(ModelIo, TruncatedOrTampered) {
    const std::string text = model_to_string(trained(RegressorKind::Fflm).model);
    EXPECT_EQ(load_error(text.substr(0, text.size() / 2)), ErrorCode::CorruptArtifact);
    EXPECT_EQ(load_error(""), ErrorCode::CorruptArtifact);
    auto j = Json::parse(text);
    j["regressor"]["coefficients"]["data"][0] = 123.0;
    EXPECT_EQ(load_error(j.dump()), ErrorCode::CorruptArtifact);
    j = Json::parse(text);
    j.erase("checksum");
    EXPECT_EQ(load_error(j.dump()), ErrorCode::CorruptArtifact);
}

TEST(ModelIo, VersionMismatch) {
    auto j = Json::parse(model_to_string(trained(RegressorKind::Fflm).model));
    j["format_version"] = "0";
    EXPECT_EQ(load_error(j.dump()), ErrorCode::VersionMismatch);
}

TEST(ModelIo, MatrixEncoding) {
    const Matrix m = (Matrix(2, 3) << 1, 2, 3, 4, 5, 6).finished();
    const Json j = matrix_to_json(m);
    EXPECT_EQ(j.at("rows"), 2);
    EXPECT_EQ(j.at("data")[1], 2.0);
    EXPECT_EQ(matrix_from_json(j), m);
    const Vector v = (Vector(2) << 0.1, -7).finished();
    EXPECT_EQ(vector_from_json(vector_to_json(v)), v);
}

TEST(ModelIo, ConfigOverridesKeepBase) {
    auto base = fofr::testing::small_config();
    const auto c = config_from_json(Json::parse(R"({"regressor":"network","training":{"epochs":7}})"), base);
    EXPECT_EQ(c.regressor, RegressorKind::Network);
    EXPECT_EQ(c.training.epochs, 7u);
    EXPECT_EQ(c.covariate.grid_size, 31);
    EXPECT_EQ(config_from_json(config_to_json(base)).covariate.kernel.bandwidth_mean, base.covariate.kernel.bandwidth_mean);
    EXPECT_THROW(config_from_json(Json::parse(R"({"regressor":"forest"})")), Error);
}

TEST(ModelIo, ChecksumIsStable) {
    EXPECT_EQ(content_checksum(""), "cbf29ce484222325");
    EXPECT_EQ(content_checksum("a"), "af63dc4c8601ec8c");
}
