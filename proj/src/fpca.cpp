#include "fofr/fpca.hpp"

#include <algorithm>
#include <cmath>

namespace fofr {

namespace {

struct SortedSpectrum {
    Vector values;   // non-increasing, floored
    Matrix vectors;  // matching columns
};

SortedSpectrum symmetric_eigen(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::EigenFailure, "symmetric eigensolver did not converge");
    const Index n = m.rows();
    SortedSpectrum out{solver.eigenvalues().reverse(), solver.eigenvectors().rowwise().reverse()};
    const double top = n > 0 ? out.values[0] : 0.0;
    if (!(top > 0.0)) throw Error(ErrorCode::EmptySpectrum, "no positive eigenvalue");
    const double floor = kEigenFloor * top;
    Index keep = 0;
    while (keep < n && out.values[keep] >= floor) ++keep;
    out.values.conservativeResize(keep);
    out.vectors.conservativeResize(Eigen::NoChange, keep);
    return out;
}

Index sign_anchor(const Eigen::Ref<const Vector>& v) {
    Index best = 0;
    double magnitude = -1.0;
    for (Index k = 0; k < v.size(); ++k) {
        if (std::abs(v[k]) > magnitude) {
            magnitude = std::abs(v[k]);
            best = k;
        }
    }
    return best;
}

}  // namespace

void validate_rule(const TruncationRule& rule) {
    if (!(rule.fve_cutoff > 0.0 && rule.fve_cutoff <= 1.0))
        throw Error(ErrorCode::BadConfig, "FVE cutoff must lie in (0, 1]");
    if (rule.max_components < 1) throw Error(ErrorCode::BadConfig, "max_components must be at least 1");
}

Vector fve_curve(const Vector& eigenvalues) {
    Vector out(eigenvalues.size());
    const double total = eigenvalues.sum();
    double running = 0.0;
    for (Index k = 0; k < eigenvalues.size(); ++k) {
        running += eigenvalues[k];
        out[k] = running / total;
    }
    return out;
}

std::size_t select_truncation(const Vector& eigenvalues, const TruncationRule& rule) {
    validate_rule(rule);
    if (eigenvalues.size() == 0 || !(eigenvalues.maxCoeff() > 0.0))
        throw Error(ErrorCode::EmptySpectrum, "no positive eigenvalue to truncate");
    const double total = eigenvalues.sum();
    double running = 0.0;
    std::size_t k = 0;
    while (k < static_cast<std::size_t>(eigenvalues.size())) {
        running += eigenvalues[static_cast<Index>(k)];
        ++k;
        if (running >= rule.fve_cutoff * total) break;
    }
    return std::min(k, rule.max_components);
}

void apply_sign_convention(Matrix& rows) {
    for (Index p = 0; p < rows.rows(); ++p) {
        const Vector row = rows.row(p).transpose();
        if (row[sign_anchor(row)] < 0.0) rows.row(p) *= -1.0;
    }
}

UnivariateEigenSystem univariate_fpca(const CovarianceSurface& surface, const TruncationRule& rule,
                                      std::string channel) {
    validate_rule(rule);
    const auto& grid = surface.grid;
    const Vector root_w = grid.weights.cwiseSqrt();
    const Matrix op = root_w.asDiagonal() * surface.values * root_w.asDiagonal();
    const auto spectrum = symmetric_eigen(0.5 * (op + op.transpose()));
    const auto p = static_cast<Index>(select_truncation(spectrum.values, rule));

    UnivariateEigenSystem eig;
    eig.channel = std::move(channel);
    eig.grid = grid;
    eig.spectrum = spectrum.values;
    eig.eigenvalues = spectrum.values.head(p);
    eig.functions = (root_w.cwiseInverse().asDiagonal() * spectrum.vectors.leftCols(p)).transpose();
    apply_sign_convention(eig.functions);
    return eig;
}

Vector project_univariate(const ObservationSeries& series_z, const UnivariateEigenSystem& eig) {
    if (series_z.size() < 2) throw Error(ErrorCode::TooSparse, "projection needs at least 2 observations");
    const auto sample = sample_on_grid(series_z, eig.grid);
    return eig.functions * eig.grid.weights.cwiseProduct(sample.values);
}

Matrix score_covariance(const Matrix& scores) {
    const Index n = scores.rows();
    if (n < 2) throw Error(ErrorCode::TooFewSubjects, "score covariance needs at least 2 subjects");
    const Matrix centered = scores.rowwise() - scores.colwise().mean();
    Matrix xi = (centered.transpose() * centered) / static_cast<double>(n - 1);
    return 0.5 * (xi + xi.transpose());
}

MultivariateEigenSystem multivariate_fpca(const std::vector<UnivariateEigenSystem>& univariate, const Matrix& xi,
                                          const TruncationRule& rule) {
    validate_rule(rule);
    if (univariate.empty()) throw Error(ErrorCode::BlockMismatch, "no channels");
    Index total = 0;
    for (const auto& u : univariate) total += u.size();
    if (xi.rows() != total || xi.cols() != total)
        throw Error(ErrorCode::BlockMismatch, "score covariance is " + std::to_string(xi.rows()) + "x" +
                                                  std::to_string(xi.cols()) + " but blocks sum to " +
                                                  std::to_string(total));
    const auto& grid = univariate.front().grid;
    for (const auto& u : univariate)
        if (u.grid.size() != grid.size()) throw Error(ErrorCode::BlockMismatch, "channels use different grids");

    const auto spectrum = symmetric_eigen(xi);
    const auto p = static_cast<Index>(select_truncation(spectrum.values, rule));

    MultivariateEigenSystem eig;
    eig.grid = grid;
    eig.spectrum = spectrum.values;
    eig.eigenvalues = spectrum.values.head(p);
    eig.block_vectors = spectrum.vectors.leftCols(p);

    // Sign convention over the concatenated channel values of each component.
    Index offset = 0;
    Matrix stacked(p, grid.size() * static_cast<Index>(univariate.size()));
    for (std::size_t d = 0; d < univariate.size(); ++d) {
        const Index width = univariate[d].size();
        Matrix f = Matrix::Zero(p, grid.size());
        if (width > 0) f = eig.block_vectors.middleRows(offset, width).transpose() * univariate[d].functions;
        stacked.middleCols(static_cast<Index>(d) * grid.size(), grid.size()) = f;
        eig.channels.push_back(univariate[d].channel);
        eig.block_widths.push_back(width);
        offset += width;
    }
    for (Index k = 0; k < p; ++k) {
        const Vector row = stacked.row(k).transpose();
        if (row[sign_anchor(row)] < 0.0) {
            stacked.row(k) *= -1.0;
            eig.block_vectors.col(k) *= -1.0;
        }
    }
    for (std::size_t d = 0; d < univariate.size(); ++d)
        eig.functions.push_back(stacked.middleCols(static_cast<Index>(d) * grid.size(), grid.size()));
    return eig;
}

Vector project_multivariate(const std::vector<ObservationSeries>& sample_z, const MultivariateEigenSystem& eig) {
    if (sample_z.size() != eig.n_channels())
        throw Error(ErrorCode::ChannelCountMismatch, "sample has " + std::to_string(sample_z.size()) +
                                                         " channels, eigen system has " +
                                                         std::to_string(eig.n_channels()));
    Vector scores = Vector::Zero(eig.size());
    for (std::size_t d = 0; d < sample_z.size(); ++d) {
        if (sample_z[d].size() < 2) throw Error(ErrorCode::TooSparse, "projection needs at least 2 observations");
        const auto sample = sample_on_grid(sample_z[d], eig.grid);
        scores += eig.functions[d] * eig.grid.weights.cwiseProduct(sample.values);
    }
    return scores;
}

Vector project_multivariate(const Vector& stacked_univariate_scores, const MultivariateEigenSystem& eig) {
    if (stacked_univariate_scores.size() != eig.block_vectors.rows())
        throw Error(ErrorCode::LengthMismatch, "stacked score length does not match block widths");
    return eig.block_vectors.transpose() * stacked_univariate_scores;
}

std::vector<Vector> reconstruct(const Vector& scores, const MultivariateEigenSystem& eig) {
    if (scores.size() != eig.size())
        throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(eig.size()) + " scores, got " +
                                                   std::to_string(scores.size()));
    std::vector<Vector> out;
    for (const auto& f : eig.functions) out.emplace_back(f.transpose() * scores);
    return out;
}

double orthonormality_error(const UnivariateEigenSystem& eig) {
    if (eig.size() == 0) return 0.0;
    const Matrix gram = eig.functions * eig.grid.weights.asDiagonal() * eig.functions.transpose();
    return (gram - Matrix::Identity(eig.size(), eig.size())).cwiseAbs().maxCoeff();
}

double orthonormality_error(const MultivariateEigenSystem& eig) {
    Matrix gram = Matrix::Zero(eig.size(), eig.size());
    if (eig.size() == 0) return 0.0;
    for (const auto& f : eig.functions) gram += f * eig.grid.weights.asDiagonal() * f.transpose();
    return (gram - Matrix::Identity(eig.size(), eig.size())).cwiseAbs().maxCoeff();
}

}  // namespace fofr
