#include <gtest/gtest.h>

#include <random>

#include "fofr/fflm.hpp"
#include "fofr/network.hpp"

using namespace fofr;

namespace {

Matrix random_matrix(Index r, Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return Matrix::NullaryExpr(r, c, [&]() { return n(rng); });
}

}  // namespace

TEST(FitFflm, ZeroTargets) {
    std::mt19937_64 rng(1);
    const auto b = fit_fflm(random_matrix(10, 3, rng), Matrix::Zero(10, 2));
    EXPECT_EQ(b.coefficients, Matrix::Zero(2, 3));
}

TEST(FitFflm, RecoversPlantedMap) {
    std::mt19937_64 rng(2);
    const Matrix x = random_matrix(50, 6, rng);
    const Matrix b0 = random_matrix(4, 6, rng);
    const auto b = fit_fflm(x, x * b0.transpose());
    EXPECT_LE((b.coefficients - b0).norm() / b0.norm(), 1e-8);
}

TEST(FitFflm, MatchesNormalEquations) {
    std::mt19937_64 rng(3);
    const Matrix x = random_matrix(30, 5, rng);
    const Matrix t = random_matrix(30, 3, rng);
    for (double ridge : {0.0, 0.5}) {
        // B^T = (X^T X + ridge I)^-1 X^T T, solved by Cholesky.
        const Matrix gram = x.transpose() * x + ridge * Matrix::Identity(5, 5);
        const Matrix oracle = gram.llt().solve(x.transpose() * t).transpose();
        EXPECT_LE((fit_fflm(x, t, ridge).coefficients - oracle).norm(), 1e-10 * oracle.norm());
    }
}

TEST(FitFflm, SingleSampleMinimalNorm) {
    const Matrix x = (Matrix(1, 3) << 1, 0, 0).finished();
    const Matrix t = (Matrix(1, 2) << 1, 0).finished();
    const auto b = fit_fflm(x, t);
    Matrix expect = Matrix::Zero(2, 3);
    expect(0, 0) = 1.0;
    EXPECT_LT((b.coefficients - expect).norm(), 1e-14);
}

TEST(FitFflm, RankDeficientIsMinimalNorm) {
    std::mt19937_64 rng(4);
    Matrix x = random_matrix(20, 4, rng);
    x.col(3) = x.col(0) + x.col(1);
    const Matrix t = random_matrix(20, 2, rng);
    const auto b = fit_fflm(x, t);
    // Minimal-norm solutions have rows in the row space of X: orthogonal to (1, 1, 0, -1).
    const Vector null = (Vector(4) << 1, 1, 0, -1).finished().normalized();
    EXPECT_LT((b.coefficients * null).norm(), 1e-9);
    EXPECT_LT(((x * b.coefficients.transpose() - t).transpose() * x).norm(), 1e-9);
}

TEST(FitFflm, PerturbationNeverImproves) {
    std::mt19937_64 rng(5);
    const Matrix x = random_matrix(25, 4, rng);
    const Matrix t = random_matrix(25, 3, rng);
    for (double ridge : {0.0, 0.1, 10.0}) {
        auto b = fit_fflm(x, t, ridge);
        const double best = fflm_objective(b, x, t, ridge);
        for (Index r = 0; r < 3; ++r)
            for (Index c = 0; c < 4; ++c)
                for (double d : {-1e-3, 1e-3}) {
                    auto probe = b;
                    probe.coefficients(r, c) += d;
                    EXPECT_GE(fflm_objective(probe, x, t, ridge), best);
                }
    }
}

TEST(FitFflm, WideNetworkNestsLinearModel) {
    std::mt19937_64 rng(6);
    const Matrix x = random_matrix(200, 3, rng);
    const Matrix t = x * random_matrix(2, 3, rng).transpose() + 0.1 * random_matrix(200, 2, rng);
    const auto b = fit_fflm(x, t);
    const double linear = fflm_objective(b, x, t) / static_cast<double>(t.size());
    TrainConfig config;
    config.epochs = 3000;
    config.learning_rate = 3e-3;
    const auto net = train_network(NetworkSpec{3, {32}, 2}, config, x, t);
    EXPECT_LE(mse_loss(net.params, x, t), 1.05 * linear);
}
