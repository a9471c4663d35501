#include "fofr/smoothing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace fofr {

namespace {

// A window is usable when it holds some kernel mass and its abscissae are
// spread over a non-negligible fraction of the bandwidth.
constexpr double kMinWindowMass = 1e-8;
constexpr double kMinRelativeSpread = 1e-10;

[[noreturn]] void degenerate_at(double t, double bandwidth) {
    throw Error(ErrorCode::DegenerateWindow,
                "no usable kernel window at t=" + format_double(t) + " (bandwidth " + format_double(bandwidth) + ")");
}

struct PooledSample {
    Vector times;
    Vector values;
};

PooledSample pool(const std::vector<ObservationSeries>& series) {
    Index total = 0;
    for (const auto& s : series) total += s.size();
    PooledSample out{Vector(total), Vector(total)};
    Index k = 0;
    for (const auto& s : series) {
        out.times.segment(k, s.size()) = s.times;
        out.values.segment(k, s.size()) = s.values;
        k += s.size();
    }
    return out;
}

/// Observations aggregated by distinct time: count and value sum per time.
struct DistinctTimes {
    Vector times;
    Vector counts;
    Vector sums;
};

DistinctTimes aggregate(const Vector& times, const Vector& values) {
    std::map<double, std::pair<double, double>> acc;
    for (Index k = 0; k < times.size(); ++k) {
        auto& slot = acc[times[k]];
        slot.first += 1.0;
        slot.second += values[k];
    }
    DistinctTimes out{Vector(static_cast<Index>(acc.size())), Vector(static_cast<Index>(acc.size())),
                      Vector(static_cast<Index>(acc.size()))};
    Index k = 0;
    for (const auto& [t, slot] : acc) {
        out.times[k] = t;
        out.counts[k] = slot.first;
        out.sums[k] = slot.second;
        ++k;
    }
    return out;
}

/// Local-linear intercept at each evaluation point.
Vector local_linear(const DistinctTimes& data, KernelFamily family, double bandwidth, const Vector& at) {
    const Index m = data.times.size();
    Vector out(at.size());
    Vector w(m);
    for (Index g = 0; g < at.size(); ++g) {
        const double t = at[g];
        for (Index k = 0; k < m; ++k) w[k] = data.counts[k] * kernel_weight(family, (data.times[k] - t) / bandwidth);
        const double mass = w.sum();
        if (!(mass >= kMinWindowMass)) degenerate_at(t, bandwidth);
        double xbar = 0.0, ybar = 0.0;
        for (Index k = 0; k < m; ++k) {
            xbar += w[k] * (data.times[k] - t);
            ybar += w[k] / data.counts[k] * data.sums[k];
        }
        xbar /= mass;
        ybar /= mass;
        double sxx = 0.0, sxy = 0.0;
        for (Index k = 0; k < m; ++k) {
            if (w[k] == 0.0) continue;
            const double dx = data.times[k] - t - xbar;
            sxx += w[k] * dx * dx;
            sxy += w[k] / data.counts[k] * dx * (data.sums[k] - data.counts[k] * ybar);
        }
        if (!(sxx / mass >= kMinRelativeSpread * bandwidth * bandwidth)) degenerate_at(t, bandwidth);
        out[g] = ybar - (sxy / sxx) * xbar;
        if (!std::isfinite(out[g]))
            throw Error(ErrorCode::NonFiniteFit, "mean fit not finite at t=" + format_double(t));
    }
    return out;
}

/// Kernel matrix K(g, j) = K((times[j] - points[g]) / h).
Matrix kernel_matrix(const Vector& points, const Vector& times, KernelFamily family, double bandwidth) {
    Matrix k(points.size(), times.size());
    for (Index j = 0; j < times.size(); ++j)
        for (Index g = 0; g < points.size(); ++g) k(g, j) = kernel_weight(family, (times[j] - points[g]) / bandwidth);
    return k;
}

}  // namespace

std::string to_string(KernelFamily family) {
    return family == KernelFamily::Gaussian ? "gaussian" : "epanechnikov";
}

KernelFamily parse_kernel_family(const std::string& name) {
    if (name == "gaussian") return KernelFamily::Gaussian;
    if (name == "epanechnikov") return KernelFamily::Epanechnikov;
    throw Error(ErrorCode::BadConfig, "unknown kernel family '" + name + "'");
}

void validate_kernel(const KernelSpec& kernel, const Interval& domain) {
    for (const auto& h : {kernel.bandwidth_mean, kernel.bandwidth_cov}) {
        if (h && !(*h > 0.0 && *h < domain.length()))
            throw Error(ErrorCode::BadConfig, "bandwidth " + format_double(*h) + " must lie in (0, " +
                                                  format_double(domain.length()) + ")");
    }
}

MeanFunction smooth_mean(const std::vector<ObservationSeries>& series, KernelFamily family, double bandwidth,
                         const EvalGrid& grid) {
    const auto pooled = pool(series);
    if (pooled.times.size() < 2) throw Error(ErrorCode::DegenerateWindow, "mean smoothing needs >= 2 observations");
    // Work in coordinates relative to the domain start.
    const double origin = grid.domain.lo;
    const Vector times = pooled.times.array() - origin;
    const Vector at = grid.points.array() - origin;
    return MeanFunction{grid, local_linear(aggregate(times, pooled.values), family, bandwidth, at), bandwidth};
}

MeanFunction smooth_mean(const std::vector<ObservationSeries>& series, const KernelSpec& kernel, const EvalGrid& grid) {
    validate_kernel(kernel, grid.domain);
    const double h = kernel.bandwidth_mean
                         ? *kernel.bandwidth_mean
                         : select_bandwidth(series, kernel.family, grid, BandwidthTarget::Mean);
    return smooth_mean(series, kernel.family, h, grid);
}

CovarianceSurface smooth_covariance(const std::vector<ObservationSeries>& series, const MeanFunction& mean,
                                    KernelFamily family, double bandwidth, const EvalGrid& grid) {
    const Index g = grid.size();
    const double origin = grid.domain.lo;
    const Vector points = grid.points.array() - origin;

    // Per-subject kernel-weighted moment vectors, one column per subject:
    //   m0 = sum_j k_j, m1 = sum_j k_j tau_j, m2 = sum_j k_j tau_j^2,
    //   m3 = sum_j k_j e_j, m4 = sum_j k_j tau_j e_j.
    // Sums over all within-subject pairs (j1, j2) factor into products
    // m_a m_b^T; the j1 == j2 terms are subtracted afterwards.
    std::vector<Index> usable;
    for (std::size_t i = 0; i < series.size(); ++i)
        if (series[i].size() >= 2) usable.push_back(static_cast<Index>(i));
    if (usable.empty()) throw Error(ErrorCode::NoPairs, "no subject has two or more observations");

    // Kernel columns are evaluated once per distinct observation time.
    std::map<double, Index> slot_of;
    for (auto i : usable)
        for (Index j = 0; j < series[static_cast<std::size_t>(i)].size(); ++j)
            slot_of.emplace(series[static_cast<std::size_t>(i)].times[j] - origin, 0);
    const Index u = static_cast<Index>(slot_of.size());
    Vector tau_u(u);
    {
        Index k = 0;
        for (auto& [t, slot] : slot_of) {
            tau_u[k] = t;
            slot = k++;
        }
    }
    const Matrix ku = kernel_matrix(points, tau_u, family, bandwidth);
    Vector count = Vector::Zero(u), e2 = Vector::Zero(u);

    const Index n = static_cast<Index>(usable.size());
    Matrix m0(g, n), m1(g, n), m2(g, n), m3(g, n), m4(g, n);
    for (Index c = 0; c < n; ++c) {
        const auto& s = series[static_cast<std::size_t>(usable[static_cast<std::size_t>(c)])];
        const Index m = s.size();
        Matrix k(g, m);
        Vector tau(m), resid(m);
        for (Index j = 0; j < m; ++j) {
            tau[j] = s.times[j] - origin;
            const Index slot = slot_of.at(tau[j]);
            k.col(j) = ku.col(slot);
            resid[j] = s.values[j] - mean(s.times[j]);
            count[slot] += 1.0;
            e2[slot] += resid[j] * resid[j];
        }
        m0.col(c) = k.rowwise().sum();
        m1.col(c) = k * tau;
        m2.col(c) = k * tau.cwiseAbs2();
        m3.col(c) = k * resid;
        m4.col(c) = k * tau.cwiseProduct(resid);
    }

    Matrix p0 = m0 * m0.transpose();
    Matrix pa = m1 * m0.transpose();
    Matrix paa = m2 * m0.transpose();
    Matrix pab = m1 * m1.transpose();
    Matrix pu = m3 * m3.transpose();
    Matrix pau = m4 * m3.transpose();

    // Diagonal (j1 == j2) contributions, aggregated over distinct times.
    auto diag_moment = [&](const Vector& f) -> Matrix { return ku * f.asDiagonal() * ku.transpose(); };
    p0 -= diag_moment(count);
    const Matrix d_tau = diag_moment(count.cwiseProduct(tau_u));
    const Matrix d_tau2 = diag_moment(count.cwiseProduct(tau_u.cwiseAbs2()));
    pa -= d_tau;
    paa -= d_tau2;
    pab -= d_tau2;
    pu -= diag_moment(e2);
    pau -= diag_moment(e2.cwiseProduct(tau_u));
    // By symmetry of the pair set: pb = pa^T, pbb = paa^T, pbu = pau^T.

    Matrix surface(g, g);
    const double spread_floor = kMinRelativeSpread * bandwidth * bandwidth;
    for (Index b = 0; b < g; ++b) {
        for (Index a = 0; a < g; ++a) {
            const double mass = p0(a, b);
            if (!(mass >= kMinWindowMass)) degenerate_at(grid.points[a], bandwidth);
            const double abar = pa(a, b) / mass;
            const double bbar = pa(b, a) / mass;
            const double ubar = pu(a, b) / mass;
            const double cxx = paa(a, b) / mass - abar * abar;
            const double cyy = paa(b, a) / mass - bbar * bbar;
            const double cxy = pab(a, b) / mass - abar * bbar;
            const double cxu = pau(a, b) / mass - abar * ubar;
            const double cyu = pau(b, a) / mass - bbar * ubar;
            const double det = cxx * cyy - cxy * cxy;
            if (!(cxx >= spread_floor && cyy >= spread_floor && det >= spread_floor * spread_floor))
                degenerate_at(grid.points[a], bandwidth);
            const double slope_a = (cyy * cxu - cxy * cyu) / det;
            const double slope_b = (cxx * cyu - cxy * cxu) / det;
            surface(a, b) = ubar - slope_a * (abar - points[a]) - slope_b * (bbar - points[b]);
            if (!std::isfinite(surface(a, b)))
                throw Error(ErrorCode::NonFiniteFit, "covariance fit not finite at t=" + format_double(grid.points[a]));
        }
    }
    Matrix symmetric = 0.5 * (surface + surface.transpose());
    return CovarianceSurface{grid, std::move(symmetric), bandwidth};
}

CovarianceSurface smooth_covariance(const std::vector<ObservationSeries>& series, const MeanFunction& mean,
                                    const KernelSpec& kernel, const EvalGrid& grid) {
    validate_kernel(kernel, grid.domain);
    const double h = kernel.bandwidth_cov
                         ? *kernel.bandwidth_cov
                         : select_bandwidth(series, kernel.family, grid, BandwidthTarget::Covariance, &mean);
    return smooth_covariance(series, mean, kernel.family, h, grid);
}

ClippedDiagonal variance_function(const CovarianceSurface& surface, double level) {
    ClippedDiagonal out;
    out.values = surface.values.diagonal();
    const double reference = std::max(out.values.maxCoeff(), level);
    out.floor = reference > 0.0 ? 1e-8 * reference : 1e-8;
    for (Index g = 0; g < out.values.size(); ++g) {
        if (!(out.values[g] >= out.floor)) {
            out.values[g] = out.floor;
            ++out.clipped;
        }
    }
    return out;
}

StandardizationParams make_standardization(const MeanFunction& mean, const CovarianceSurface& surface) {
    const auto diag = variance_function(surface, mean.values.cwiseAbs2().maxCoeff());
    return StandardizationParams{mean.grid, mean.values, diag.values, diag.clipped};
}

ObservationSeries standardize(const ObservationSeries& series, const StandardizationParams& params) {
    ObservationSeries out{series.times, Vector(series.size())};
    for (Index j = 0; j < series.size(); ++j) {
        const double t = series.times[j];
        out.values[j] = (series.values[j] - interpolate(params.grid, params.mean, t)) /
                        std::sqrt(interpolate(params.grid, params.variance, t));
    }
    return out;
}

ObservationSeries destandardize(const ObservationSeries& series, const StandardizationParams& params) {
    ObservationSeries out{series.times, Vector(series.size())};
    for (Index j = 0; j < series.size(); ++j) {
        const double t = series.times[j];
        out.values[j] = series.values[j] * std::sqrt(interpolate(params.grid, params.variance, t)) +
                        interpolate(params.grid, params.mean, t);
    }
    return out;
}

Vector destandardize_on_grid(const Vector& z, const StandardizationParams& params) {
    return z.cwiseProduct(params.variance.cwiseSqrt()) + params.mean;
}

}  // namespace fofr
