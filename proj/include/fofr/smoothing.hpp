#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fofr/core.hpp"
#include "fofr/grid.hpp"

namespace fofr {

enum class KernelFamily { Gaussian, Epanechnikov };

std::string to_string(KernelFamily family);
KernelFamily parse_kernel_family(const std::string& name);

/// Unnormalized kernel profile with K(0) = 1.
inline double kernel_weight(KernelFamily family, double u) {
    switch (family) {
    case KernelFamily::Gaussian: return std::exp(-0.5 * u * u);
    case KernelFamily::Epanechnikov: return u * u < 1.0 ? 1.0 - u * u : 0.0;
    }
    return 0.0;
}

/// Kernel choice; an empty bandwidth requests cross-validated selection.
struct KernelSpec {
    KernelFamily family = KernelFamily::Gaussian;
    std::optional<double> bandwidth_mean;
    std::optional<double> bandwidth_cov;
};

/// Throws BadConfig unless each explicit bandwidth lies in (0, domain length).
void validate_kernel(const KernelSpec& kernel, const Interval& domain);

struct MeanFunction {
    EvalGrid grid;
    Vector values;
    double bandwidth = 0.0;

    double operator()(double t) const { return interpolate(grid, values, t); }
};

struct CovarianceSurface {
    EvalGrid grid;
    Matrix values;
    double bandwidth = 0.0;
};

/// Local-linear estimate of the mean: at each grid point, the intercept of
/// the kernel-weighted line through the pooled (time, value) pairs.
MeanFunction smooth_mean(const std::vector<ObservationSeries>& series, KernelFamily family, double bandwidth,
                         const EvalGrid& grid);
MeanFunction smooth_mean(const std::vector<ObservationSeries>& series, const KernelSpec& kernel, const EvalGrid& grid);

/// Local-plane estimate of the covariance surface from within-subject raw
/// products of residuals, off-diagonal pairs only (j1 != j2). Uses the
/// product kernel K(u)K(v); the returned matrix is exactly symmetric.
CovarianceSurface smooth_covariance(const std::vector<ObservationSeries>& series, const MeanFunction& mean,
                                    KernelFamily family, double bandwidth, const EvalGrid& grid);
CovarianceSurface smooth_covariance(const std::vector<ObservationSeries>& series, const MeanFunction& mean,
                                    const KernelSpec& kernel, const EvalGrid& grid);

struct ClippedDiagonal {
    Vector values;
    std::size_t clipped = 0;
    double floor = 0.0;
};

/// Diagonal of the surface, floored at 1e-8 * max(max diagonal, level).
/// `level` is the squared magnitude of the channel (max mu^2); a floor of
/// 1e-8 is used when both are zero.
ClippedDiagonal variance_function(const CovarianceSurface& surface, double level = 0.0);

/// Per-channel point-wise Z-score parameters tabulated on a grid.
struct StandardizationParams {
    EvalGrid grid;
    Vector mean;
    Vector variance;
    std::size_t clipped = 0;

    /// Every grid point hit the variance floor: the channel carries no signal.
    bool degenerate() const { return clipped == static_cast<std::size_t>(variance.size()); }
};

StandardizationParams make_standardization(const MeanFunction& mean, const CovarianceSurface& surface);

ObservationSeries standardize(const ObservationSeries& series, const StandardizationParams& params);
ObservationSeries destandardize(const ObservationSeries& series, const StandardizationParams& params);
/// Inverse transform for a z-scale curve tabulated on the params' own grid.
Vector destandardize_on_grid(const Vector& z, const StandardizationParams& params);

enum class BandwidthTarget { Mean, Covariance };

struct BandwidthSearch {
    std::size_t candidates = 10;
    std::size_t folds = 5;
};

/// Log-spaced candidates over [2 * median pooled gap, domain length / 2].
std::vector<double> bandwidth_candidates(const std::vector<ObservationSeries>& series, const Interval& domain,
                                         std::size_t count = 10);

struct BandwidthChoice {
    double bandwidth = 0.0;
    std::vector<double> candidates;
    std::vector<double> cv_error;  ///< NaN marks a degenerate candidate
};

/// Subject-level K-fold cross-validation over `candidates`. Near-ties
/// resolve to the smallest bandwidth. For the covariance target `mean` is
/// the (fixed) mean estimate used to form residual products.
BandwidthChoice cross_validate_bandwidth(const std::vector<ObservationSeries>& series, KernelFamily family,
                                         const EvalGrid& grid, BandwidthTarget target,
                                         const std::vector<double>& candidates, const MeanFunction* mean = nullptr,
                                         std::size_t folds = 5);

double select_bandwidth(const std::vector<ObservationSeries>& series, KernelFamily family, const EvalGrid& grid,
                        BandwidthTarget target, const MeanFunction* mean = nullptr, BandwidthSearch search = {});

}  // namespace fofr
