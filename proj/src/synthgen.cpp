#include "fofr/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

namespace fofr {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double fourier(std::size_t k, const Interval& domain, double t) {
    const double len = domain.length();
    const double u = (t - domain.lo) / len;
    if (k == 0) return 1.0 / std::sqrt(len);
    const double freq = 2.0 * std::numbers::pi * static_cast<double>((k + 1) / 2);
    const double amp = std::sqrt(2.0 / len);
    return k % 2 == 1 ? amp * std::sin(freq * u) : amp * std::cos(freq * u);
}

double dct(std::size_t row, std::size_t col, std::size_t n) {
    const double scale = std::sqrt((col == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    return scale * std::cos(std::numbers::pi * (static_cast<double>(row) + 0.5) * static_cast<double>(col) /
                            static_cast<double>(n));
}

Vector sample_times(const SamplingPlan& plan, const Interval& domain, std::mt19937_64& rng) {
    if (plan.kind == SamplingPlan::Kind::Dense) {
        Vector t = Vector::LinSpaced(plan.points, domain.lo, domain.hi);
        t[plan.points - 1] = domain.hi;
        return t;
    }
    std::poisson_distribution<std::size_t> count_dist(plan.rate);
    const std::size_t m = std::max(plan.min_points, count_dist(rng));
    std::uniform_real_distribution<double> uniform(domain.lo, domain.hi);
    std::set<double> times;
    while (times.size() < m) times.insert(uniform(rng));
    Vector out(static_cast<Index>(m));
    Index j = 0;
    for (double t : times) out[j++] = t;
    return out;
}

Matrix matrix_from_rows(const Json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw Error(ErrorCode::BadScenario, "empty matrix");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.front().size()) throw Error(ErrorCode::BadScenario, "ragged matrix rows");
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
    return m;
}

Json rows_of(const Matrix& m) {
    Json out = Json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
        out.push_back(row);
    }
    return out;
}

std::string padded_id(const char* prefix, std::size_t i, std::size_t n) {
    const std::size_t width = std::to_string(n).size();
    std::string digits = std::to_string(i + 1);
    return prefix + std::string(width - std::min(width, digits.size()), '0') + digits;
}

}  // namespace

Vector PlantedMapping::operator()(const Vector& eta) const {
    Vector out = Vector::Zero(output_dim());
    Vector power = eta;
    for (std::size_t k = 0; k < terms.size(); ++k) {
        if (k > 0) power = power.cwiseProduct(eta);
        out += terms[k] * power;
    }
    return out;
}

void validate_scenario(const SynthScenario& s) {
    auto bad = [](const std::string& msg) { throw Error(ErrorCode::BadScenario, msg); };
    if (s.n_subjects < 2) bad("n_subjects must be >= 2");
    if (s.covariate_channels < 1 || s.response_channels < 1) bad("channel counts must be >= 1");
    if (!(s.covariate_domain.lo < s.covariate_domain.hi) || !(s.response_domain.lo < s.response_domain.hi))
        bad("domains need lo < hi");
    const auto& ev = s.covariate_eigenvalues;
    if (ev.size() < 1) bad("at least one covariate eigenvalue is required");
    for (Index k = 0; k < ev.size(); ++k) {
        if (!(ev[k] > 0.0)) bad("planted eigenvalues must be positive");
        if (k > 0 && ev[k] > ev[k - 1]) bad("planted eigenvalues must be non-increasing");
    }
    if (s.mapping.terms.empty()) bad("mapping has no terms");
    for (const auto& t : s.mapping.terms) {
        if (t.cols() != ev.size()) bad("mapping columns must equal the number of covariate eigenvalues");
        if (t.rows() != s.mapping.terms.front().rows() || t.rows() < 1) bad("mapping terms disagree in rows");
        if (!t.allFinite()) bad("mapping has non-finite entries");
    }
    if (s.mapping.kind == MappingKind::Linear && s.mapping.terms.size() != 1) bad("linear mapping takes one matrix");
    if (s.mapping.kind == MappingKind::Quadratic && s.mapping.terms.size() != 2)
        bad("quadratic mapping takes two matrices");
    if (!(s.noise_sd >= 0.0)) bad("noise_sd must be >= 0");
    if (s.sampling.kind == SamplingPlan::Kind::Dense && s.sampling.points < 2) bad("dense sampling needs >= 2 points");
    if (s.sampling.kind == SamplingPlan::Kind::Irregular) {
        if (s.sampling.min_points < 2) bad("min_points must be >= 2");
        if (!(s.sampling.rate >= 0.0)) bad("rate must be >= 0");
    }
}

SynthScenario scenario_from_json(const Json& j) {
    SynthScenario s;
    try {
        s.n_subjects = j.value("n_subjects", s.n_subjects);
        s.covariate_channels = j.value("covariate_channels", s.covariate_channels);
        s.response_channels = j.value("response_channels", s.response_channels);
        if (j.contains("covariate_domain"))
            s.covariate_domain = {j.at("covariate_domain")[0].get<double>(), j.at("covariate_domain")[1].get<double>()};
        if (j.contains("response_domain"))
            s.response_domain = {j.at("response_domain")[0].get<double>(), j.at("response_domain")[1].get<double>()};
        const auto ev = j.at("covariate_eigenvalues").get<std::vector<double>>();
        s.covariate_eigenvalues = Eigen::Map<const Vector>(ev.data(), static_cast<Index>(ev.size()));
        const auto& m = j.at("mapping");
        const auto kind = m.at("kind").get<std::string>();
        if (kind == "linear") {
            s.mapping.kind = MappingKind::Linear;
            s.mapping.terms = {matrix_from_rows(m.at("B"))};
        } else if (kind == "quadratic") {
            s.mapping.kind = MappingKind::Quadratic;
            s.mapping.terms = {matrix_from_rows(m.at("B1")), matrix_from_rows(m.at("B2"))};
        } else if (kind == "polynomial") {
            s.mapping.kind = MappingKind::Polynomial;
            for (const auto& t : m.at("terms")) s.mapping.terms.push_back(matrix_from_rows(t));
        } else {
            throw Error(ErrorCode::BadScenario, "unknown mapping kind '" + kind + "'");
        }
        s.noise_sd = j.value("noise_sd", s.noise_sd);
        if (j.contains("sampling")) {
            const auto& p = j.at("sampling");
            const auto sk = p.value("kind", std::string("dense"));
            if (sk == "dense") {
                s.sampling.kind = SamplingPlan::Kind::Dense;
                s.sampling.points = p.value("points", s.sampling.points);
            } else if (sk == "irregular") {
                s.sampling.kind = SamplingPlan::Kind::Irregular;
                s.sampling.rate = p.value("rate", s.sampling.rate);
                s.sampling.min_points = p.value("min_points", s.sampling.min_points);
            } else {
                throw Error(ErrorCode::BadScenario, "unknown sampling kind '" + sk + "'");
            }
        }
        if (j.contains("mean")) {
            s.mean_offset = j.at("mean").value("offset", s.mean_offset);
            s.mean_amplitude = j.at("mean").value("amplitude", s.mean_amplitude);
        }
        s.seed = j.value("seed", s.seed);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadScenario, e.what());
    }
    validate_scenario(s);
    return s;
}

Json scenario_to_json(const SynthScenario& s) {
    Json j;
    j["n_subjects"] = s.n_subjects;
    j["covariate_channels"] = s.covariate_channels;
    j["response_channels"] = s.response_channels;
    j["covariate_domain"] = {s.covariate_domain.lo, s.covariate_domain.hi};
    j["response_domain"] = {s.response_domain.lo, s.response_domain.hi};
    j["covariate_eigenvalues"] = vector_to_json(s.covariate_eigenvalues);
    Json m;
    switch (s.mapping.kind) {
    case MappingKind::Linear:
        m["kind"] = "linear";
        m["B"] = rows_of(s.mapping.terms.at(0));
        break;
    case MappingKind::Quadratic:
        m["kind"] = "quadratic";
        m["B1"] = rows_of(s.mapping.terms.at(0));
        m["B2"] = rows_of(s.mapping.terms.at(1));
        break;
    case MappingKind::Polynomial: {
        m["kind"] = "polynomial";
        Json terms = Json::array();
        for (const auto& t : s.mapping.terms) terms.push_back(rows_of(t));
        m["terms"] = std::move(terms);
        break;
    }
    }
    j["mapping"] = std::move(m);
    j["noise_sd"] = s.noise_sd;
    if (s.sampling.kind == SamplingPlan::Kind::Dense)
        j["sampling"] = {{"kind", "dense"}, {"points", s.sampling.points}};
    else
        j["sampling"] = {{"kind", "irregular"}, {"rate", s.sampling.rate}, {"min_points", s.sampling.min_points}};
    j["mean"] = {{"offset", s.mean_offset}, {"amplitude", s.mean_amplitude}};
    j["seed"] = s.seed;
    return j;
}

double planted_basis_value(std::size_t component, std::size_t channel, std::size_t channels, const Interval& domain,
                           double t) {
    return dct(channel, component % channels, channels) * fourier(component / channels, domain, t);
}

std::vector<Matrix> planted_basis(std::size_t components, std::size_t channels, const EvalGrid& grid) {
    std::vector<Matrix> out;
    for (std::size_t c = 0; c < channels; ++c) {
        Matrix m(static_cast<Index>(components), grid.size());
        for (std::size_t p = 0; p < components; ++p)
            for (Index g = 0; g < grid.size(); ++g)
                m(static_cast<Index>(p), g) = planted_basis_value(p, c, channels, grid.domain, grid.points[g]);
        out.push_back(std::move(m));
    }
    return out;
}

double planted_mean(const SynthScenario& s, std::size_t channel, const Interval& domain, double t) {
    const double u = (t - domain.lo) / domain.length();
    return s.mean_offset + s.mean_amplitude * std::sin(2.0 * std::numbers::pi * u + static_cast<double>(channel));
}

SynthResult generate(const SynthScenario& scenario) {
    validate_scenario(scenario);
    const auto& s = scenario;
    const Index l = s.covariate_eigenvalues.size();
    const Index p = s.mapping.output_dim();
    const std::size_t n = s.n_subjects;

    SynthResult out;
    auto& data = out.data;
    auto& truth = out.truth;
    truth.scenario = s;
    truth.covariate_scores.resize(static_cast<Index>(n), l);
    truth.response_scores.resize(static_cast<Index>(n), p);
    data.covariate_domain = s.covariate_domain;
    data.response_domain = s.response_domain;
    for (std::size_t r = 0; r < s.covariate_channels; ++r) data.covariate_names.push_back("x" + std::to_string(r + 1));
    for (std::size_t d = 0; d < s.response_channels; ++d) data.response_names.push_back("y" + std::to_string(d + 1));

    for (std::size_t i = 0; i < n; ++i) {
        std::mt19937_64 rng(splitmix64(s.seed ^ splitmix64(static_cast<std::uint64_t>(i))));
        std::normal_distribution<double> normal(0.0, 1.0);
        Vector eta(l);
        for (Index k = 0; k < l; ++k) eta[k] = std::sqrt(s.covariate_eigenvalues[k]) * normal(rng);
        const Vector scores = s.mapping(eta);
        truth.covariate_scores.row(static_cast<Index>(i)) = eta.transpose();
        truth.response_scores.row(static_cast<Index>(i)) = scores.transpose();

        auto make_side = [&](std::size_t channels, const Interval& domain, const Vector& coef,
                             std::vector<Vector>& clean) {
            std::vector<ObservationSeries> side;
            for (std::size_t c = 0; c < channels; ++c) {
                ObservationSeries series;
                series.times = sample_times(s.sampling, domain, rng);
                series.values.resize(series.times.size());
                Vector noiseless(series.times.size());
                for (Index j = 0; j < series.size(); ++j) {
                    const double t = series.times[j];
                    double v = planted_mean(s, c, domain, t);
                    for (Index k = 0; k < coef.size(); ++k)
                        v += coef[k] * planted_basis_value(static_cast<std::size_t>(k), c, channels, domain, t);
                    noiseless[j] = v;
                    series.values[j] = v + (s.noise_sd > 0.0 ? s.noise_sd * normal(rng) : 0.0);
                }
                clean.push_back(std::move(noiseless));
                side.push_back(std::move(series));
            }
            return side;
        };
        std::vector<Vector> cov_clean, resp_clean;
        data.subject_ids.push_back(padded_id("s", i, n));
        data.covariates.push_back(make_side(s.covariate_channels, s.covariate_domain, eta, cov_clean));
        data.responses.push_back(make_side(s.response_channels, s.response_domain, scores, resp_clean));
        truth.covariate_clean.push_back(std::move(cov_clean));
        truth.response_clean.push_back(std::move(resp_clean));
    }
    return out;
}

OracleScores oracle_scores(const GroundTruth& truth, std::size_t subject) {
    if (subject >= static_cast<std::size_t>(truth.covariate_scores.rows()))
        throw Error(ErrorCode::IndexOutOfRange, "subject " + std::to_string(subject) + " out of range (N=" +
                                                    std::to_string(truth.covariate_scores.rows()) + ")");
    const auto i = static_cast<Index>(subject);
    return OracleScores{truth.covariate_scores.row(i).transpose(), truth.response_scores.row(i).transpose()};
}

Json ground_truth_to_json(const GroundTruth& truth) {
    Json j;
    j["scenario"] = scenario_to_json(truth.scenario);
    j["basis"] = {{"family", "fourier"},
                  {"channel_mixing", "dct-ii"},
                  {"covariate_components", truth.covariate_scores.cols()},
                  {"response_components", truth.response_scores.cols()}};
    j["covariate_scores"] = matrix_to_json(truth.covariate_scores);
    j["response_scores"] = matrix_to_json(truth.response_scores);
    auto clean = [](const std::vector<std::vector<Vector>>& table) {
        Json out = Json::array();
        for (const auto& row : table) {
            Json r = Json::array();
            for (const auto& v : row) r.push_back(vector_to_json(v));
            out.push_back(std::move(r));
        }
        return out;
    };
    j["covariate_noiseless"] = clean(truth.covariate_clean);
    j["response_noiseless"] = clean(truth.response_clean);
    return j;
}

Matrix alignment_matrix(const std::vector<Matrix>& planted, const std::vector<Matrix>& estimated,
                        const std::vector<Vector>& scale, const EvalGrid& grid) {
    if (planted.size() != estimated.size() || planted.size() != scale.size())
        throw Error(ErrorCode::ChannelCountMismatch, "alignment inputs disagree in channel count");
    Matrix a = Matrix::Zero(planted.front().rows(), estimated.front().rows());
    for (std::size_t c = 0; c < planted.size(); ++c)
        a += planted[c] * grid.weights.cwiseProduct(scale[c]).asDiagonal() * estimated[c].transpose();
    return a;
}

SynthFiles write_synth(const SynthResult& result, const std::filesystem::path& out_dir, Index grid_size) {
    std::filesystem::create_directories(out_dir);
    SynthFiles files{out_dir / "data.csv", out_dir / "schema.json", out_dir / "ground_truth.json"};
    save_dataset(files.data, result.data);
    {
        std::ofstream out(files.schema, std::ios::binary);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + files.schema.string());
        out << schema_to_json(schema_of(result.data, grid_size, grid_size));
    }
    {
        std::ofstream out(files.truth, std::ios::binary);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + files.truth.string());
        out << ground_truth_to_json(result.truth).dump(1) << '\n';
    }
    return files;
}

}  // namespace fofr
