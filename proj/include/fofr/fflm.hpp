#pragma once

#include <cstddef>

#include "fofr/types.hpp"

namespace fofr {

/// Linear map between score spaces: targets ~ B * inputs, B is P x L.
struct FflmParams {
    Matrix coefficients;

    Index input_dim() const { return coefficients.cols(); }
    Index output_dim() const { return coefficients.rows(); }
    Vector apply(const Vector& input) const { return coefficients * input; }
    /// Row i of the result is B applied to row i of `inputs`.
    Matrix apply(const Matrix& inputs) const { return inputs * coefficients.transpose(); }
};

/// Minimizes sum_i ||t_i - B x_i||^2 + ridge ||B||_F^2. With ridge = 0 the
/// minimal-norm least-squares solution is returned.
FflmParams fit_fflm(const Matrix& inputs, const Matrix& targets, double ridge = 0.0);

double fflm_objective(const FflmParams& params, const Matrix& inputs, const Matrix& targets, double ridge = 0.0);

inline std::size_t count_params(const FflmParams& params) {
    return static_cast<std::size_t>(params.coefficients.rows() * params.coefficients.cols());
}

inline std::size_t count_fflm_params(Index input_dim, Index output_dim) {
    return static_cast<std::size_t>(input_dim * output_dim);
}

}  // namespace fofr
