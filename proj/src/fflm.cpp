#include "fofr/fflm.hpp"

#include "fofr/error.hpp"

namespace fofr {

FflmParams fit_fflm(const Matrix& inputs, const Matrix& targets, double ridge) {
    if (inputs.rows() < 1) throw Error(ErrorCode::ShapeMismatch, "FFLM needs at least one sample");
    if (targets.rows() != inputs.rows()) throw Error(ErrorCode::ShapeMismatch, "inputs and targets differ in rows");
    if (!(ridge >= 0.0)) throw Error(ErrorCode::BadConfig, "ridge must be non-negative");
    Matrix bt;
    if (ridge > 0.0) {
        Matrix gram = inputs.transpose() * inputs;
        gram.diagonal().array() += ridge;
        bt = gram.ldlt().solve(inputs.transpose() * targets);
    } else {
        bt = inputs.completeOrthogonalDecomposition().solve(targets);
    }
    return FflmParams{bt.transpose()};
}

double fflm_objective(const FflmParams& params, const Matrix& inputs, const Matrix& targets, double ridge) {
    return (targets - params.apply(inputs)).squaredNorm() + ridge * params.coefficients.squaredNorm();
}

}  // namespace fofr
