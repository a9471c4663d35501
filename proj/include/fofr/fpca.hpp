#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "fofr/grid.hpp"
#include "fofr/smoothing.hpp"

namespace fofr {

struct TruncationRule {
    double fve_cutoff = 0.99;
    std::size_t max_components = std::numeric_limits<std::size_t>::max();
};

void validate_rule(const TruncationRule& rule);

/// Cumulative fraction of variance explained by the leading k components.
Vector fve_curve(const Vector& eigenvalues);

/// Smallest k whose FVE reaches the cutoff, capped at max_components.
std::size_t select_truncation(const Vector& eigenvalues, const TruncationRule& rule);

/// Eigenvalues below this fraction of the largest are treated as zero.
inline constexpr double kEigenFloor = 1e-10;

struct UnivariateEigenSystem {
    std::string channel;
    EvalGrid grid;
    Vector eigenvalues;  ///< retained, non-increasing
    Matrix functions;    ///< row p is the p-th eigenfunction on the grid
    Vector spectrum;     ///< every eigenvalue above the floor (for FVE tables)

    Index size() const { return eigenvalues.size(); }
};

/// Flips each row so its largest-magnitude entry (earliest on ties) is positive.
void apply_sign_convention(Matrix& rows);

/// Eigendecomposition of the quadrature-weighted covariance operator
/// W^(1/2) G W^(1/2); eigenvectors u map back to functions W^(-1/2) u.
UnivariateEigenSystem univariate_fpca(const CovarianceSurface& surface, const TruncationRule& rule,
                                      std::string channel = {});

/// Scores of one standardized series: the series is carried onto the grid
/// (linear inside its span, constant outside) and integrated against each
/// eigenfunction.
Vector project_univariate(const ObservationSeries& series_z, const UnivariateEigenSystem& eig);

/// Sample covariance (divisor N - 1) of the rows of an N x P score matrix.
Matrix score_covariance(const Matrix& scores);

struct MultivariateEigenSystem {
    std::vector<std::string> channels;
    EvalGrid grid;
    Vector eigenvalues;                ///< retained eigenvalues of the score covariance
    std::vector<Matrix> functions;     ///< functions[d] is P x G, row p = phi_p^(d)
    Matrix block_vectors;              ///< P_+ x P, column p = c_p
    std::vector<Index> block_widths;   ///< P_d per channel
    Vector spectrum;                   ///< every eigenvalue of the score covariance above the floor

    Index size() const { return eigenvalues.size(); }
    std::size_t n_channels() const { return functions.size(); }
};

/// Combines per-channel univariate bases through the eigenvectors of the
/// stacked score covariance `xi` (P_+ x P_+).
MultivariateEigenSystem multivariate_fpca(const std::vector<UnivariateEigenSystem>& univariate, const Matrix& xi,
                                          const TruncationRule& rule);

/// Direct route: sum over channels of grid quadrature against phi_p^(d).
Vector project_multivariate(const std::vector<ObservationSeries>& sample_z, const MultivariateEigenSystem& eig);

/// Recombination route: C^T applied to stacked univariate scores.
Vector project_multivariate(const Vector& stacked_univariate_scores, const MultivariateEigenSystem& eig);

/// Per-channel curves sum_p scores_p * phi_p^(d) on the grid.
std::vector<Vector> reconstruct(const Vector& scores, const MultivariateEigenSystem& eig);

/// max |<phi_p, phi_q> - delta_pq| under the grid quadrature.
double orthonormality_error(const UnivariateEigenSystem& eig);
double orthonormality_error(const MultivariateEigenSystem& eig);

}  // namespace fofr
