#include "fofr/model_io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fofr {

namespace {

Json kernel_to_json(const KernelSpec& k) {
    Json j;
    j["family"] = to_string(k.family);
    j["bandwidth_mean"] = k.bandwidth_mean ? Json(*k.bandwidth_mean) : Json("auto");
    j["bandwidth_cov"] = k.bandwidth_cov ? Json(*k.bandwidth_cov) : Json("auto");
    return j;
}

std::optional<double> bandwidth_from_json(const Json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() != "auto") throw Error(ErrorCode::BadConfig, "bandwidth must be a number or \"auto\"");
        return std::nullopt;
    }
    return j.get<double>();
}

KernelSpec kernel_from_json(const Json& j, KernelSpec k) {
    if (j.contains("family")) k.family = parse_kernel_family(j.at("family").get<std::string>());
    if (j.contains("bandwidth_mean")) k.bandwidth_mean = bandwidth_from_json(j.at("bandwidth_mean"));
    if (j.contains("bandwidth_cov")) k.bandwidth_cov = bandwidth_from_json(j.at("bandwidth_cov"));
    return k;
}

Json rule_to_json(const TruncationRule& r) {
    Json j;
    j["fve_cutoff"] = r.fve_cutoff;
    j["max_components"] = r.max_components == std::numeric_limits<std::size_t>::max() ? Json(nullptr)
                                                                                      : Json(r.max_components);
    return j;
}

TruncationRule rule_from_json(const Json& j, TruncationRule r) {
    if (j.contains("fve_cutoff")) r.fve_cutoff = j.at("fve_cutoff").get<double>();
    if (j.contains("max_components")) {
        r.max_components = j.at("max_components").is_null() ? std::numeric_limits<std::size_t>::max()
                                                            : j.at("max_components").get<std::size_t>();
    }
    return r;
}

Json side_config_to_json(const SideConfig& s) {
    Json j;
    j["grid_size"] = s.grid_size;
    j["kernel"] = kernel_to_json(s.kernel);
    j["truncation"] = rule_to_json(s.rule);
    return j;
}

SideConfig side_config_from_json(const Json& j, SideConfig s) {
    if (j.contains("grid_size")) s.grid_size = j.at("grid_size").get<Index>();
    if (j.contains("kernel")) s.kernel = kernel_from_json(j.at("kernel"), s.kernel);
    if (j.contains("truncation")) s.rule = rule_from_json(j.at("truncation"), s.rule);
    return s;
}

std::string optimizer_name(OptimizerKind k) {
    switch (k) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Momentum: return "sgd_momentum";
    case OptimizerKind::Adam: return "adam";
    }
    return "adam";
}

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "sgd_momentum" || name == "momentum") return OptimizerKind::Momentum;
    if (name == "adam") return OptimizerKind::Adam;
    throw Error(ErrorCode::BadConfig, "unknown optimizer '" + name + "'");
}

Json training_to_json(const TrainConfig& t) {
    Json j;
    j["epochs"] = t.epochs;
    j["batch_size"] = t.batch_size;
    j["learning_rate"] = t.learning_rate;
    j["optimizer"] = {{"kind", optimizer_name(t.optimizer.kind)},
                      {"momentum", t.optimizer.momentum},
                      {"beta1", t.optimizer.beta1},
                      {"beta2", t.optimizer.beta2},
                      {"epsilon", t.optimizer.epsilon}};
    if (t.early_stop)
        j["early_stop"] = {{"patience", t.early_stop->patience},
                           {"validation_fraction", t.early_stop->validation_fraction}};
    else
        j["early_stop"] = nullptr;
    j["seed"] = t.seed;
    return j;
}

TrainConfig training_from_json(const Json& j, TrainConfig t) {
    if (j.contains("epochs")) t.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("batch_size")) t.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("learning_rate")) t.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        if (o.is_string()) {
            t.optimizer.kind = parse_optimizer(o.get<std::string>());
        } else {
            if (o.contains("kind")) t.optimizer.kind = parse_optimizer(o.at("kind").get<std::string>());
            t.optimizer.momentum = o.value("momentum", t.optimizer.momentum);
            t.optimizer.beta1 = o.value("beta1", t.optimizer.beta1);
            t.optimizer.beta2 = o.value("beta2", t.optimizer.beta2);
            t.optimizer.epsilon = o.value("epsilon", t.optimizer.epsilon);
        }
    }
    if (j.contains("early_stop")) {
        const auto& e = j.at("early_stop");
        if (e.is_null()) {
            t.early_stop.reset();
        } else {
            EarlyStop stop = t.early_stop.value_or(EarlyStop{});
            stop.patience = e.value("patience", stop.patience);
            stop.validation_fraction = e.value("validation_fraction", stop.validation_fraction);
            t.early_stop = stop;
        }
    }
    if (j.contains("seed")) t.seed = j.at("seed").get<std::uint64_t>();
    return t;
}

Json side_to_json(const SideModel& side) {
    Json j;
    j["domain"] = {side.domain.lo, side.domain.hi};
    j["grid_size"] = side.grid.size();
    Json channels = Json::array();
    for (std::size_t c = 0; c < side.channels.size(); ++c) {
        const auto& u = side.univariate[c];
        const auto& s = side.standardization[c];
        Json ch;
        ch["name"] = side.channels[c];
        ch["mean_bandwidth"] = side.mean_bandwidth[c];
        ch["cov_bandwidth"] = side.cov_bandwidth[c];
        ch["mean"] = vector_to_json(s.mean);
        ch["variance"] = vector_to_json(s.variance);
        ch["variance_clipped"] = s.clipped;
        ch["univariate"] = {{"eigenvalues", vector_to_json(u.eigenvalues)},
                            {"spectrum", vector_to_json(u.spectrum)},
                            {"functions", matrix_to_json(u.functions)}};
        channels.push_back(std::move(ch));
    }
    j["channels"] = std::move(channels);
    const auto& b = side.basis;
    Json functions = Json::array();
    for (const auto& f : b.functions) functions.push_back(matrix_to_json(f));
    j["multivariate"] = {{"eigenvalues", vector_to_json(b.eigenvalues)},
                         {"spectrum", vector_to_json(b.spectrum)},
                         {"block_widths", b.block_widths},
                         {"block_vectors", matrix_to_json(b.block_vectors)},
                         {"functions", std::move(functions)}};
    return j;
}

SideModel side_from_json(const Json& j) {
    SideModel side;
    side.domain = make_interval(j.at("domain")[0].get<double>(), j.at("domain")[1].get<double>());
    side.grid = make_grid(side.domain, j.at("grid_size").get<Index>());
    for (const auto& ch : j.at("channels")) {
        const auto name = ch.at("name").get<std::string>();
        side.channels.push_back(name);
        side.mean_bandwidth.push_back(ch.at("mean_bandwidth").get<double>());
        side.cov_bandwidth.push_back(ch.at("cov_bandwidth").get<double>());
        StandardizationParams s{side.grid, vector_from_json(ch.at("mean")), vector_from_json(ch.at("variance")),
                                ch.at("variance_clipped").get<std::size_t>()};
        if (s.mean.size() != side.grid.size() || s.variance.size() != side.grid.size())
            throw Error(ErrorCode::CorruptArtifact, "channel '" + name + "' tables do not match the grid");
        side.standardization.push_back(std::move(s));
        UnivariateEigenSystem u;
        u.channel = name;
        u.grid = side.grid;
        u.eigenvalues = vector_from_json(ch.at("univariate").at("eigenvalues"));
        u.spectrum = vector_from_json(ch.at("univariate").at("spectrum"));
        u.functions = matrix_from_json(ch.at("univariate").at("functions"));
        side.univariate.push_back(std::move(u));
    }
    const auto& m = j.at("multivariate");
    auto& b = side.basis;
    b.channels = side.channels;
    b.grid = side.grid;
    b.eigenvalues = vector_from_json(m.at("eigenvalues"));
    b.spectrum = vector_from_json(m.at("spectrum"));
    b.block_widths = m.at("block_widths").get<std::vector<Index>>();
    b.block_vectors = matrix_from_json(m.at("block_vectors"));
    for (const auto& f : m.at("functions")) b.functions.push_back(matrix_from_json(f));
    if (b.functions.size() != side.channels.size())
        throw Error(ErrorCode::CorruptArtifact, "multivariate basis channel count mismatch");
    for (const auto& f : b.functions)
        if (f.rows() != b.size() || f.cols() != side.grid.size())
            throw Error(ErrorCode::CorruptArtifact, "multivariate eigenfunction shape mismatch");
    return side;
}

Json regressor_to_json(const Regressor& r) {
    Json j;
    if (const auto* net = std::get_if<NetworkParams>(&r)) {
        j["kind"] = "network";
        j["activation"] = to_string(net->activation);
        Json layers = Json::array();
        for (const auto& l : net->layers)
            layers.push_back({{"weight", matrix_to_json(l.weight)}, {"bias", vector_to_json(l.bias)}});
        j["layers"] = std::move(layers);
    } else {
        j["kind"] = "fflm";
        j["coefficients"] = matrix_to_json(std::get<FflmParams>(r).coefficients);
    }
    return j;
}

Regressor regressor_from_json(const Json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "fflm") return FflmParams{matrix_from_json(j.at("coefficients"))};
    if (kind != "network") throw Error(ErrorCode::CorruptArtifact, "unknown regressor kind '" + kind + "'");
    NetworkParams net;
    net.activation = parse_activation(j.at("activation").get<std::string>());
    for (const auto& l : j.at("layers")) {
        DenseLayer layer{matrix_from_json(l.at("weight")), vector_from_json(l.at("bias"))};
        if (layer.bias.size() != layer.weight.rows())
            throw Error(ErrorCode::CorruptArtifact, "layer bias does not match weight rows");
        if (!net.layers.empty() && net.layers.back().weight.rows() != layer.weight.cols())
            throw Error(ErrorCode::CorruptArtifact, "layer shapes do not chain");
        net.layers.push_back(std::move(layer));
    }
    if (net.layers.empty()) throw Error(ErrorCode::CorruptArtifact, "network has no layers");
    return net;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
    Json data = Json::array();
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& j) {
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
        throw Error(ErrorCode::CorruptArtifact, "matrix data length does not match its shape");
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
    return m;
}

Json vector_to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const Json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

Json config_to_json(const PipelineConfig& config) {
    Json j;
    j["covariate"] = side_config_to_json(config.covariate);
    j["response"] = side_config_to_json(config.response);
    j["regressor"] = to_string(config.regressor);
    j["network"] = {{"hidden_widths", config.hidden_widths},
                    {"activation", to_string(config.activation)},
                    {"seed", config.network_seed}};
    j["training"] = training_to_json(config.training);
    j["ridge"] = config.ridge;
    return j;
}

PipelineConfig config_from_json(const Json& j, PipelineConfig c) {
    try {
        if (j.contains("covariate")) c.covariate = side_config_from_json(j.at("covariate"), c.covariate);
        if (j.contains("response")) c.response = side_config_from_json(j.at("response"), c.response);
        if (j.contains("regressor")) c.regressor = parse_regressor_kind(j.at("regressor").get<std::string>());
        if (j.contains("network")) {
            const auto& n = j.at("network");
            if (n.contains("hidden_widths")) c.hidden_widths = n.at("hidden_widths").get<std::vector<Index>>();
            if (n.contains("activation")) c.activation = parse_activation(n.at("activation").get<std::string>());
            if (n.contains("seed")) c.network_seed = n.at("seed").get<std::uint64_t>();
        }
        if (j.contains("training")) c.training = training_from_json(j.at("training"), c.training);
        if (j.contains("ridge")) c.ridge = j.at("ridge").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadConfig, e.what());
    }
    validate_config(c);
    return c;
}

std::string content_checksum(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json model_to_json(const TrainedModel& model) {
    Json j;
    j["format"] = "fofr-model";
    j["format_version"] = kModelFormatVersion;
    j["config"] = config_to_json(model.config);
    j["covariate"] = side_to_json(model.covariate);
    j["response"] = side_to_json(model.response);
    j["regressor"] = regressor_to_json(model.regressor);
    return j;
}

TrainedModel model_from_json(const Json& j) {
    TrainedModel model;
    try {
        model.config = config_from_json(j.at("config"));
        model.covariate = side_from_json(j.at("covariate"));
        model.response = side_from_json(j.at("response"));
        model.regressor = regressor_from_json(j.at("regressor"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptArtifact, e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CorruptArtifact) throw;
        throw Error(ErrorCode::CorruptArtifact, e.what());
    }
    const Index in = std::holds_alternative<NetworkParams>(model.regressor)
                         ? std::get<NetworkParams>(model.regressor).input_dim()
                         : std::get<FflmParams>(model.regressor).input_dim();
    const Index out = std::holds_alternative<NetworkParams>(model.regressor)
                          ? std::get<NetworkParams>(model.regressor).output_dim()
                          : std::get<FflmParams>(model.regressor).output_dim();
    if (in != model.input_dim() || out != model.output_dim())
        throw Error(ErrorCode::CorruptArtifact, "regressor dimensions do not match the eigen systems");
    return model;
}

std::string model_to_string(const TrainedModel& model) {
    Json j = model_to_json(model);
    j["checksum"] = content_checksum(j.dump());
    return j.dump(1) + "\n";
}

TrainedModel model_from_string(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptArtifact, std::string("unreadable model artifact: ") + e.what());
    }
    if (!j.is_object() || !j.contains("format_version") || !j.at("format_version").is_string())
        throw Error(ErrorCode::CorruptArtifact, "missing format version");
    const auto version = j.at("format_version").get<std::string>();
    if (version != kModelFormatVersion)
        throw Error(ErrorCode::VersionMismatch, "artifact version '" + version + "', expected '" +
                                                    kModelFormatVersion + "'");
    if (!j.contains("checksum") || !j.at("checksum").is_string())
        throw Error(ErrorCode::CorruptArtifact, "missing checksum");
    const auto stored = j.at("checksum").get<std::string>();
    j.erase("checksum");
    if (content_checksum(j.dump()) != stored) throw Error(ErrorCode::CorruptArtifact, "checksum mismatch");
    return model_from_json(j);
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << model_to_string(model);
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return model_from_string(buffer.str());
}

}  // namespace fofr
