#include <algorithm>
#include <cmath>
#include <limits>

#include "fofr/smoothing.hpp"

namespace fofr {

namespace {

double median_gap(const std::vector<ObservationSeries>& series) {
    std::vector<double> times;
    for (const auto& s : series) times.insert(times.end(), s.times.data(), s.times.data() + s.size());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    if (times.size() < 2) return 0.0;
    std::vector<double> gaps(times.size() - 1);
    for (std::size_t k = 0; k + 1 < times.size(); ++k) gaps[k] = times[k + 1] - times[k];
    auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
    std::nth_element(gaps.begin(), mid, gaps.end());
    return *mid;
}

/// Squared prediction error of held-out subjects against a tabulated fit.
struct FoldError {
    double sse = 0.0;
    double reference = 0.0;  // sum of squared targets
};

FoldError mean_fold_error(const std::vector<ObservationSeries>& held_out, const MeanFunction& fit) {
    FoldError out;
    for (const auto& s : held_out) {
        for (Index j = 0; j < s.size(); ++j) {
            const double r = s.values[j] - fit(s.times[j]);
            out.sse += r * r;
            out.reference += s.values[j] * s.values[j];
        }
    }
    return out;
}

double bilinear(const CovarianceSurface& surface, double s, double t) {
    const auto& grid = surface.grid;
    const Index g = grid.size();
    auto locate = [&](double x, Index& k, double& frac) {
        const double pos = std::clamp((x - grid.domain.lo) / grid.spacing(), 0.0, static_cast<double>(g - 1));
        k = std::min<Index>(static_cast<Index>(pos), g - 2);
        frac = pos - static_cast<double>(k);
    };
    Index a, b;
    double fa, fb;
    locate(s, a, fa);
    locate(t, b, fb);
    const auto& v = surface.values;
    return (1 - fa) * (1 - fb) * v(a, b) + fa * (1 - fb) * v(a + 1, b) + (1 - fa) * fb * v(a, b + 1) +
           fa * fb * v(a + 1, b + 1);
}

FoldError covariance_fold_error(const std::vector<ObservationSeries>& held_out, const MeanFunction& mean,
                                const CovarianceSurface& fit) {
    FoldError out;
    for (const auto& s : held_out) {
        Vector resid(s.size());
        for (Index j = 0; j < s.size(); ++j) resid[j] = s.values[j] - mean(s.times[j]);
        for (Index j1 = 0; j1 < s.size(); ++j1) {
            for (Index j2 = 0; j2 < s.size(); ++j2) {
                if (j1 == j2) continue;
                const double raw = resid[j1] * resid[j2];
                const double r = raw - bilinear(fit, s.times[j1], s.times[j2]);
                out.sse += r * r;
                out.reference += raw * raw;
            }
        }
    }
    return out;
}

}  // namespace

std::vector<double> bandwidth_candidates(const std::vector<ObservationSeries>& series, const Interval& domain,
                                         std::size_t count) {
    const double hi = domain.length() / 2.0;
    double lo = 2.0 * median_gap(series);
    if (!(lo > 0.0) || lo >= hi || count <= 1) return {hi};
    std::vector<double> out(count);
    const double ratio = std::log(hi / lo);
    for (std::size_t k = 0; k < count; ++k)
        out[k] = lo * std::exp(ratio * static_cast<double>(k) / static_cast<double>(count - 1));
    out.back() = hi;
    return out;
}

BandwidthChoice cross_validate_bandwidth(const std::vector<ObservationSeries>& series, KernelFamily family,
                                         const EvalGrid& grid, BandwidthTarget target,
                                         const std::vector<double>& candidates, const MeanFunction* mean,
                                         std::size_t folds) {
    if (candidates.empty()) throw Error(ErrorCode::AllCandidatesDegenerate, "empty candidate list");
    BandwidthChoice choice;
    choice.candidates = candidates;
    if (candidates.size() == 1) {
        choice.bandwidth = candidates.front();
        choice.cv_error.assign(1, std::numeric_limits<double>::quiet_NaN());
        return choice;
    }

    std::optional<MeanFunction> own_mean;
    if (target == BandwidthTarget::Covariance && mean == nullptr) {
        own_mean = smooth_mean(series, KernelSpec{family, std::nullopt, std::nullopt}, grid);
        mean = &*own_mean;
    }

    folds = std::clamp<std::size_t>(folds, 2, std::max<std::size_t>(series.size(), 2));
    double reference = 0.0;
    for (double h : candidates) {
        double sse = 0.0;
        bool degenerate = false;
        double ref = 0.0;
        for (std::size_t f = 0; f < folds && !degenerate; ++f) {
            std::vector<ObservationSeries> train, test;
            for (std::size_t i = 0; i < series.size(); ++i) (i % folds == f ? test : train).push_back(series[i]);
            if (train.empty() || test.empty()) continue;
            try {
                FoldError e;
                if (target == BandwidthTarget::Mean) {
                    e = mean_fold_error(test, smooth_mean(train, family, h, grid));
                } else {
                    e = covariance_fold_error(test, *mean, smooth_covariance(train, *mean, family, h, grid));
                }
                sse += e.sse;
                ref += e.reference;
            } catch (const Error& err) {
                if (err.code() != ErrorCode::DegenerateWindow && err.code() != ErrorCode::NoPairs &&
                    err.code() != ErrorCode::NonFiniteFit)
                    throw;
                degenerate = true;
            }
        }
        if (degenerate || !std::isfinite(sse)) {
            choice.cv_error.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
            choice.cv_error.push_back(sse);
            reference = std::max(reference, ref);
        }
    }

    double best = std::numeric_limits<double>::infinity();
    for (double e : choice.cv_error)
        if (!std::isnan(e)) best = std::min(best, e);
    if (!std::isfinite(best))
        throw Error(ErrorCode::AllCandidatesDegenerate, "every candidate bandwidth produced a degenerate window");
    // Near-ties (relative 1e-8, or absolute 1e-12 of the target energy) go to the smallest bandwidth.
    const double tolerance = 1e-8 * best + 1e-12 * reference;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        if (!std::isnan(choice.cv_error[k]) && choice.cv_error[k] <= best + tolerance) {
            choice.bandwidth = candidates[k];
            break;
        }
    }
    return choice;
}

double select_bandwidth(const std::vector<ObservationSeries>& series, KernelFamily family, const EvalGrid& grid,
                        BandwidthTarget target, const MeanFunction* mean, BandwidthSearch search) {
    const auto candidates = bandwidth_candidates(series, grid.domain, search.candidates);
    return cross_validate_bandwidth(series, family, grid, target, candidates, mean, search.folds).bandwidth;
}

}  // namespace fofr
