#pragma once

#include <cstddef>

#include "fofr/core.hpp"
#include "fofr/types.hpp"

namespace fofr {

/// Equispaced evaluation grid with trapezoidal quadrature weights.
struct EvalGrid {
    Interval domain;
    Vector points;
    Vector weights;

    Index size() const { return points.size(); }
    double spacing() const { return domain.length() / static_cast<double>(points.size() - 1); }
};

/// `g` equispaced points over `domain`; endpoints carry weight h/2, interior h.
EvalGrid make_grid(const Interval& domain, Index g);

/// Trapezoid rule for a function tabulated on the grid.
template <typename Derived>
double integrate(const EvalGrid& grid, const Eigen::MatrixBase<Derived>& values) {
    return grid.weights.dot(values);
}

/// Weighted inner product <f, g> under the grid's quadrature.
template <typename A, typename B>
double inner(const EvalGrid& grid, const Eigen::MatrixBase<A>& f, const Eigen::MatrixBase<B>& g) {
    return (grid.weights.array() * f.array() * g.array()).sum();
}

/// Linear interpolation of grid-tabulated values at arbitrary `t`, clamped
/// to the grid's domain.
double interpolate(const EvalGrid& grid, const Vector& values, double t);
Vector interpolate(const EvalGrid& grid, const Vector& values, const Vector& times);

/// Series values carried onto the grid: linear between observations,
/// constant beyond the first/last observation.
struct GridSample {
    Vector values;
    std::size_t extrapolated = 0;  ///< grid points outside the observed span
};

GridSample sample_on_grid(const ObservationSeries& series, const EvalGrid& grid);

/// Piecewise-linear interpolation through (xs, ys) with constant extension.
double interpolate_linear(const Vector& xs, const Vector& ys, double t);

}  // namespace fofr
