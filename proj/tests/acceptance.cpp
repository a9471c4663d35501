// Acceptance suite: one PASS/FAIL line per criterion. Usage: fofr_acceptance [criterion]
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "fofr/error.hpp"
#include "fofr/fflm.hpp"
#include "fofr/metrics.hpp"
#include "fofr/model_io.hpp"
#include "fofr/network.hpp"
#include "fofr/pipeline.hpp"
#include "fofr/report.hpp"
#include "fofr/smoothing.hpp"
#include "fofr/synthgen.hpp"
#include "test_util.hpp"

using namespace fofr;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = false;
    std::string detail;
};

Matrix gaussian_matrix(Index r, Index c, double sd, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sd);
    return Matrix::NullaryExpr(r, c, [&]() { return n(rng); });
}

/// B = I + 0.2 N(0, 1), taking the first seed whose response spectrum B Lambda B^T is
/// well separated from the 1% truncation threshold (every eigenvalue >= 3% of the total).
Matrix rank_ten_map(const Vector& lambda) {
    for (std::uint64_t seed = 1;; ++seed) {
        const Matrix b = Matrix::Identity(10, 11) + gaussian_matrix(10, 11, 0.2, seed);
        const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(b * lambda.asDiagonal() * b.transpose()).eigenvalues();
        if (ev.minCoeff() >= 0.03 * ev.sum()) return b;
    }
}

/// Planted ranks (11, 10): three covariate and two response channels, noiseless, dense.
SynthScenario rank_scenario() {
    SynthScenario s;
    s.n_subjects = 500;
    s.covariate_channels = 3;
    s.response_channels = 2;
    s.covariate_eigenvalues = Vector::LinSpaced(11, 1.0, 0.4);
    s.mapping.kind = MappingKind::Linear;
    s.mapping.terms = {rank_ten_map(s.covariate_eigenvalues)};
    s.noise_sd = 0.0;
    s.sampling.points = 101;
    s.seed = 7;
    return s;
}

/// Quadratic map between four covariate and three response components.
SynthScenario quadratic_scenario() {
    SynthScenario s;
    s.n_subjects = 500;
    s.covariate_channels = 2;
    s.response_channels = 2;
    s.covariate_eigenvalues = (Vector(4) << 1.0, 0.6, 0.4, 0.25).finished();
    s.mapping.kind = MappingKind::Quadratic;
    s.mapping.terms = {gaussian_matrix(3, 4, 0.5, 3), gaussian_matrix(3, 4, 1.0, 4)};
    s.noise_sd = 0.05;
    s.sampling.points = 51;
    s.seed = 11;
    return s;
}

PipelineConfig config_for(Index grid, RegressorKind kind) {
    PipelineConfig c;
    c.covariate.grid_size = c.response.grid_size = grid;
    c.regressor = kind;
    return c;
}

struct Split {
    FunctionalDataset train;
    FunctionalDataset test;
};

Split split(const FunctionalDataset& data, double fraction, std::uint64_t seed) {
    std::vector<std::size_t> idx(data.n_subjects());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    return {data.subset(train), data.subset(test)};
}

std::vector<double> rmspe(const TrainedModel& model, const FunctionalDataset& data) {
    std::vector<double> out;
    for (const auto& c : evaluate(predict_pipeline(model, data), data).channels) out.push_back(c.rmspe);
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string fmt(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s + "]";
}

std::vector<Vector> side_scale(const SideModel& side, bool inverse) {
    std::vector<Vector> out;
    for (const auto& s : side.standardization) {
        const Vector sd = s.variance.cwiseSqrt();
        out.push_back(inverse ? Vector(sd.cwiseInverse()) : sd);
    }
    return out;
}

Verdict parameter_counts() {
    const auto t0 = Clock::now();
    const auto a = count_params(NetworkSpec{11, {16}, 10});
    const auto b = count_fflm_params(11, 10);
    const auto c = count_params(NetworkSpec{27, {16}, 30});
    const auto d = count_fflm_params(27, 30);
    const double ms = 1e3 * seconds_since(t0);
    const bool pass = a == 362 && b == 110 && c == 958 && d == 810 && ms < 1.0;
    return {pass, "NN(11,[16],10)=" + std::to_string(a) + " FFLM(11,10)=" + std::to_string(b) + " NN(27,[16],30)=" +
                      std::to_string(c) + " FFLM(27,30)=" + std::to_string(d) + " expected 362/110/958/810, " +
                      fmt(ms) + " ms"};
}

Verdict planted_truncation() {
    const auto data = generate(rank_scenario()).data;
    const auto t0 = Clock::now();
    const auto out = train_pipeline(data, config_for(101, RegressorKind::Fflm));
    const double s = seconds_since(t0);
    const auto l = out.model.input_dim(), p = out.model.output_dim();
    return {l == 11 && p == 10 && s < 60.0,
            "L=" + std::to_string(l) + " P=" + std::to_string(p) + " (planted 11, 10), " + fmt(s) + " s (limit 60)"};
}

Verdict linear_recovery() {
    const auto result = generate(rank_scenario());
    const auto t0 = Clock::now();
    const auto out = train_pipeline(result.data, config_for(101, RegressorKind::Fflm));
    const auto errors = rmspe(out.model, result.data);
    const double s = seconds_since(t0);
    const auto& m = out.model;
    const auto& sc = result.truth.scenario;
    // Conjugate the estimated map into the planted bases.
    const Matrix a_y = alignment_matrix(planted_basis(static_cast<std::size_t>(sc.mapping.output_dim()), sc.response_channels,
                                                      m.response.grid),
                                        m.response.basis.functions, side_scale(m.response, false), m.response.grid);
    const Matrix a_x = alignment_matrix(m.covariate.basis.functions,
                                        planted_basis(static_cast<std::size_t>(sc.mapping.input_dim()),
                                                      sc.covariate_channels, m.covariate.grid),
                                        side_scale(m.covariate, true), m.covariate.grid);
    const Matrix& b_hat = std::get<FflmParams>(m.regressor).coefficients;
    const Matrix& b = sc.mapping.terms.front();
    double rel = std::numeric_limits<double>::infinity();
    if (a_y.cols() == b_hat.rows() && b_hat.cols() == a_x.rows()) rel = (a_y * b_hat * a_x - b).norm() / b.norm();
    const bool pass = *std::max_element(errors.begin(), errors.end()) <= 1e-3 && rel <= 0.05 && s < 60.0;
    return {pass, "in-sample RMSPE " + fmt(errors) + " (limit 1e-3), aligned B rel. Frobenius " + fmt(rel) +
                      " (limit 0.05), " + fmt(s) + " s"};
}

Verdict nonlinearity_advantage() {
    const auto t0 = Clock::now();
    const auto parts = split(generate(quadratic_scenario()).data, 0.2, 5);
    const auto nn = train_pipeline(parts.train, config_for(51, RegressorKind::Network));
    const auto lin = train_pipeline(parts.train, config_for(51, RegressorKind::Fflm));
    const auto e_nn = rmspe(nn.model, parts.test);
    const auto e_lin = rmspe(lin.model, parts.test);
    bool pass = seconds_since(t0) < 300.0;
    for (std::size_t d = 0; d < e_nn.size(); ++d) pass = pass && e_nn[d] <= 0.8 * e_lin[d];
    return {pass, "test RMSPE NN " + fmt(e_nn) + " vs FFLM " + fmt(e_lin) + " (need NN <= 0.8 x FFLM), " +
                      fmt(seconds_since(t0)) + " s"};
}

Verdict gradient_check() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<Index> width(1, 8);
    std::normal_distribution<double> n01;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        NetworkSpec spec{width(rng), {width(rng)}, width(rng), Activation::Elu, static_cast<std::uint64_t>(trial)};
        if (trial % 2) spec.hidden_widths.push_back(width(rng));
        if (trial == 19) spec = NetworkSpec{8, {8, 8}, 8, Activation::Elu, 19};
        auto net = init_network(spec);
        for (auto& l : net.layers) l.bias = Vector::NullaryExpr(l.bias.size(), [&]() { return 0.3 * n01(rng); });
        const Matrix x = Matrix::NullaryExpr(16, spec.input_dim, [&]() { return n01(rng); });
        const Matrix t = Matrix::NullaryExpr(16, spec.output_dim, [&]() { return n01(rng); });
        const auto g = gradients(net, x, t);
        const double h = 1e-5;
        auto probe = [&](double& v, double analytic) {
            const double saved = v;
            v = saved + h;
            const double up = mse_loss(net, x, t);
            v = saved - h;
            const double down = mse_loss(net, x, t);
            v = saved;
            worst = std::max(worst, std::abs(analytic - (up - down) / (2.0 * h)) / (1.0 + std::abs(analytic)));
        };
        for (std::size_t k = 0; k < net.layers.size(); ++k) {
            auto& layer = net.layers[k];
            for (Index r = 0; r < layer.weight.rows(); ++r) {
                for (Index c = 0; c < layer.weight.cols(); ++c) probe(layer.weight(r, c), g.layers[k].weight(r, c));
                probe(layer.bias[r], g.layers[k].bias[r]);
            }
        }
    }
    const double s = seconds_since(t0);
    return {worst <= 1e-5 && s < 10.0, "max relative gradient error " + fmt(worst) + " over 20 nets (limit 1e-5), " +
                                           fmt(s) + " s"};
}

Verdict orthonormality() {
    double uni = 0.0, multi = 0.0;
    auto scan = [&](const SideDiagnostics& side) {
        multi = std::max(multi, side.orthonormality_error);
        for (const auto& c : side.channels)
            if (!c.degenerate) uni = std::max(uni, c.orthonormality_error);
    };
    auto small = rank_scenario();
    small.n_subjects = 200;
    small.sampling = SamplingPlan{SamplingPlan::Kind::Irregular, 0, 30.0, 8};
    const std::vector<std::pair<SynthScenario, Index>> scenarios{
        {rank_scenario(), 101}, {quadratic_scenario(), 51}, {small, 61}};
    for (const auto& [scenario, grid] : scenarios) {
        const auto out = train_pipeline(generate(scenario).data, config_for(grid, RegressorKind::Fflm));
        scan(out.diagnostics.covariate);
        scan(out.diagnostics.response);
    }
    return {uni <= 1e-8 && multi <= 1e-6, "max univariate error " + fmt(uni) + " (limit 1e-8), max multivariate error " +
                                              fmt(multi) + " (limit 1e-6), 3 scenarios"};
}

Verdict exactness() {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> n01;
    // local-linear reproduction of linear data
    double smooth_err = 0.0;
    std::vector<ObservationSeries> lines;
    for (int i = 0; i < 40; ++i)
        lines.push_back(fofr::testing::sample([](double t) { return 2.0 - 3.0 * t; }, fofr::testing::random_times(rng, 12)));
    const auto grid = make_grid({0.0, 1.0}, 101);
    for (double h : {0.05, 0.1, 0.3}) {
        for (auto family : {KernelFamily::Gaussian, KernelFamily::Epanechnikov}) {
            const auto m = smooth_mean(lines, family, h, grid);
            for (Index g = 0; g < grid.size(); ++g) {
                const double truth = 2.0 - 3.0 * grid.points[g];
                smooth_err = std::max(smooth_err, std::abs(m.values[g] - truth) / std::max(1.0, std::abs(truth)));
            }
        }
    }
    // standardize / destandardize round trip
    double round_trip = 0.0;
    StandardizationParams params;
    params.grid = grid;
    params.mean = Vector::NullaryExpr(grid.size(), [&]() { return n01(rng); });
    params.variance = Vector::NullaryExpr(grid.size(), [&]() { return 0.1 + std::abs(n01(rng)); });
    for (int i = 0; i < 50; ++i) {
        const auto s = fofr::testing::sample([&](double) { return 5.0 * n01(rng); }, fofr::testing::random_times(rng, 20));
        const auto back = destandardize(standardize(s, params), params);
        round_trip = std::max(round_trip, ((back.values - s.values).array().abs() / (1.0 + s.values.array().abs())).maxCoeff());
    }
    // metrics against a scalar double loop
    double metric_err = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        CurveTable truth, pred;
        truth.variables = pred.variables = {"y"};
        double sq = 0.0, count = 0.0, rel = 0.0;
        for (int i = 0; i < 2; ++i) {
            Vector t(3), y(3), p(3);
            double num = 0.0, den = 0.0;
            for (int j = 0; j < 3; ++j) {
                t[j] = 0.4 * j;
                y[j] = n01(rng);
                p[j] = n01(rng);
                num += (y[j] - p[j]) * (y[j] - p[j]);
                den += y[j] * y[j];
                count += 1.0;
            }
            sq += num;
            rel += num / den;
            truth.subjects.push_back("s" + std::to_string(i));
            pred.subjects.push_back("s" + std::to_string(i));
            truth.series.push_back({fofr::testing::series_from(t, y)});
            pred.series.push_back({fofr::testing::series_from(t, p)});
        }
        const auto r = evaluate(pred, truth).channels.front();
        metric_err = std::max({metric_err, std::abs(r.rmse - sq / count), std::abs(r.rmspe - rel / 2.0)});
    }
    return {smooth_err <= 1e-9 && round_trip <= 1e-12 && metric_err <= 1e-12,
            "linear smoothing " + fmt(smooth_err) + " (limit 1e-9), standardize round trip " + fmt(round_trip) +
                " (limit 1e-12), metrics vs oracle " + fmt(metric_err) + " (limit 1e-12)"};
}

FunctionalDataset drop_points(const FunctionalDataset& data, double fraction, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution keep(1.0 - fraction);
    auto thin = [&](ObservationSeries& s) {
        std::vector<Index> idx;
        for (Index j = 0; j < s.size(); ++j)
            if (keep(rng)) idx.push_back(j);
        if (idx.size() < 2) idx = {0, s.size() - 1};
        ObservationSeries out;
        out.times.resize(static_cast<Index>(idx.size()));
        out.values.resize(static_cast<Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            out.times[static_cast<Index>(k)] = s.times[idx[k]];
            out.values[static_cast<Index>(k)] = s.values[idx[k]];
        }
        s = out;
    };
    auto out = data;
    for (auto& subject : out.covariates)
        for (auto& s : subject) thin(s);
    for (auto& subject : out.responses)
        for (auto& s : subject) thin(s);
    return out;
}

Verdict irregularity_robustness() {
    const auto t0 = Clock::now();
    const auto parts = split(generate(quadratic_scenario()).data, 0.2, 5);
    const auto dropped = drop_points(parts.train, 0.3, 17);
    const auto config = config_for(51, RegressorKind::Network);
    const auto full = rmspe(train_pipeline(parts.train, config).model, parts.test);
    const auto thin = rmspe(train_pipeline(dropped, config).model, parts.test);
    std::vector<double> change;
    bool pass = true;
    for (std::size_t d = 0; d < full.size(); ++d) {
        change.push_back(std::abs(thin[d] - full[d]) / full[d]);
        pass = pass && change.back() <= 0.25;
    }
    const double s = seconds_since(t0);
    return {pass && s < 300.0, "test RMSPE full " + fmt(full) + ", 30% dropped " + fmt(thin) + ", relative change " +
                                   fmt(change) + " (limit 0.25), " + fmt(s) + " s"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

/// synth -> train -> predict -> evaluate into `dir`.
void full_run(const fs::path& dir) {
    auto scenario = quadratic_scenario();
    scenario.n_subjects = 120;
    scenario.sampling = SamplingPlan{SamplingPlan::Kind::Irregular, 0, 25.0, 8};
    const auto files = write_synth(generate(scenario), dir, 41);
    const auto schema = load_schema(files.schema);
    const auto data = load_dataset(files.data, schema);
    auto config = config_for(41, RegressorKind::Network);
    config.training.epochs = 300;
    config.network_seed = 5;
    config.training.seed = 6;
    const auto out = train_pipeline(data, config);
    save_model(out.model, dir / "model.json");
    std::ofstream(dir / "diagnostics.json", std::ios::binary) << diagnostics_to_json(out.diagnostics, out.model).dump(2);
    const auto model = load_model(dir / "model.json");
    const auto predictions = predict_pipeline(model, data);
    std::ofstream(dir / "predictions.csv", std::ios::binary) << [&] {
        std::ostringstream s;
        write_curve_table(s, to_table(predictions));
        return s.str();
    }();
    const auto report = evaluate(load_curve_table(dir / "predictions.csv"), response_table(data));
    std::ofstream(dir / "metrics.json", std::ios::binary) << metrics_to_json(report).dump(2);
}

Verdict determinism() {
    fofr::testing::TempDir a("acceptance_a"), b("acceptance_b");
    full_run(a.path());
    full_run(b.path());
    std::size_t same = 0, total = 0;
    std::string differing;
    for (const char* f : {"data.csv", "schema.json", "ground_truth.json", "model.json", "diagnostics.json",
                          "predictions.csv", "metrics.json"}) {
        ++total;
        const auto x = slurp(a / f);
        if (!x.empty() && x == slurp(b / f))
            ++same;
        else
            differing += std::string(" ") + f;
    }
    return {same == total, std::to_string(same) + "/" + std::to_string(total) + " artifacts byte-identical" +
                               (differing.empty() ? "" : "; differing:" + differing)};
}

const std::vector<std::pair<std::string, std::function<Verdict()>>>& criteria() {
    static const std::vector<std::pair<std::string, std::function<Verdict()>>> list{
        {"parameter counts", parameter_counts},
        {"planted-spectrum truncation", planted_truncation},
        {"linear recovery", linear_recovery},
        {"nonlinearity advantage", nonlinearity_advantage},
        {"gradient correctness", gradient_check},
        {"orthonormality", orthonormality},
        {"exactness", exactness},
        {"irregularity robustness", irregularity_robustness},
        {"determinism", determinism},
    };
    return list;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::size_t> which;
    if (argc > 1) {
        const int k = std::atoi(argv[1]);
        if (k < 1 || k > static_cast<int>(criteria().size())) {
            std::cerr << "criterion must be 1.." << criteria().size() << "\n";
            return 2;
        }
        which.push_back(static_cast<std::size_t>(k));
    } else {
        for (std::size_t k = 1; k <= criteria().size(); ++k) which.push_back(k);
    }
    bool all = true;
    for (std::size_t k : which) {
        const auto& [name, fn] = criteria()[k - 1];
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << k << " (" << name << "): " << v.detail << std::endl;
        all = all && v.pass;
    }
    return all ? 0 : 1;
}
