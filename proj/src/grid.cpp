#include "fofr/grid.hpp"

#include <algorithm>

namespace fofr {

EvalGrid make_grid(const Interval& domain, Index g) {
    if (g < 2) throw Error(ErrorCode::BadGridSize, "grid needs at least 2 points, got " + std::to_string(g));
    EvalGrid grid;
    grid.domain = domain;
    grid.points = Vector::LinSpaced(g, domain.lo, domain.hi);
    grid.points[g - 1] = domain.hi;
    const double h = domain.length() / static_cast<double>(g - 1);
    grid.weights = Vector::Constant(g, h);
    grid.weights[0] = grid.weights[g - 1] = h / 2.0;
    return grid;
}

double interpolate(const EvalGrid& grid, const Vector& values, double t) {
    const Index g = grid.size();
    const double pos = (t - grid.domain.lo) / grid.spacing();
    if (pos <= 0.0) return values[0];
    if (pos >= static_cast<double>(g - 1)) return values[g - 1];
    const Index k = std::min<Index>(static_cast<Index>(pos), g - 2);
    const double frac = (t - grid.points[k]) / (grid.points[k + 1] - grid.points[k]);
    return values[k] + frac * (values[k + 1] - values[k]);
}

Vector interpolate(const EvalGrid& grid, const Vector& values, const Vector& times) {
    Vector out(times.size());
    for (Index j = 0; j < times.size(); ++j) out[j] = interpolate(grid, values, times[j]);
    return out;
}

double interpolate_linear(const Vector& xs, const Vector& ys, double t) {
    const Index m = xs.size();
    if (m == 1 || t <= xs[0]) return ys[0];
    if (t >= xs[m - 1]) return ys[m - 1];
    const auto* begin = xs.data();
    const Index k = static_cast<Index>(std::upper_bound(begin, begin + m, t) - begin) - 1;
    const double frac = (t - xs[k]) / (xs[k + 1] - xs[k]);
    return ys[k] + frac * (ys[k + 1] - ys[k]);
}

GridSample sample_on_grid(const ObservationSeries& series, const EvalGrid& grid) {
    GridSample out;
    out.values.resize(grid.size());
    const double first = series.times[0];
    const double last = series.times[series.size() - 1];
    for (Index g = 0; g < grid.size(); ++g) {
        const double t = grid.points[g];
        if (t < first || t > last) ++out.extrapolated;
        out.values[g] = interpolate_linear(series.times, series.values, t);
    }
    return out;
}

}  // namespace fofr
