#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fofr/core.hpp"
#include "fofr/grid.hpp"
#include "fofr/model_io.hpp"

namespace fofr {

enum class MappingKind { Linear, Quadratic, Polynomial };

/// f(eta) = sum_k terms[k] * (eta elementwise-power (k + 1)); each term is P x L.
/// Linear has one term, quadratic two.
struct PlantedMapping {
    MappingKind kind = MappingKind::Linear;
    std::vector<Matrix> terms;

    Index output_dim() const { return terms.empty() ? 0 : terms.front().rows(); }
    Index input_dim() const { return terms.empty() ? 0 : terms.front().cols(); }
    Vector operator()(const Vector& eta) const;
};

struct SamplingPlan {
    enum class Kind { Dense, Irregular } kind = Kind::Dense;
    Index points = 51;           ///< dense: equispaced points per series
    double rate = 20.0;          ///< irregular: Poisson mean count per series
    std::size_t min_points = 5;  ///< irregular: lower bound on the count
};

struct SynthScenario {
    std::size_t n_subjects = 200;
    std::size_t covariate_channels = 1;
    std::size_t response_channels = 1;
    Interval covariate_domain{0.0, 1.0};
    Interval response_domain{0.0, 1.0};
    Vector covariate_eigenvalues;  ///< planted score variances, non-increasing and positive
    PlantedMapping mapping;        ///< covariate scores -> response scores
    double noise_sd = 0.0;
    SamplingPlan sampling;
    double mean_offset = 2.0;      ///< level of the planted mean functions
    double mean_amplitude = 0.5;
    std::uint64_t seed = 0;
};

void validate_scenario(const SynthScenario& scenario);
SynthScenario scenario_from_json(const Json& j);
Json scenario_to_json(const SynthScenario& scenario);

/// Orthonormal multivariate Fourier system: component p uses Fourier
/// function p / C (1, sin, cos, sin, ...) rescaled to the domain, spread
/// over the C channels by column p % C of an orthonormal DCT-II matrix.
/// Returns per-channel K x G tables.
std::vector<Matrix> planted_basis(std::size_t components, std::size_t channels, const EvalGrid& grid);
double planted_basis_value(std::size_t component, std::size_t channel, std::size_t channels, const Interval& domain,
                           double t);
/// Planted mean function of a channel.
double planted_mean(const SynthScenario& scenario, std::size_t channel, const Interval& domain, double t);

struct GroundTruth {
    SynthScenario scenario;
    Matrix covariate_scores;  ///< N x L planted eta
    Matrix response_scores;   ///< N x P, f(eta)
    /// Noise-free values at the sampled times, [subject][channel].
    std::vector<std::vector<Vector>> covariate_clean;
    std::vector<std::vector<Vector>> response_clean;
};

struct SynthResult {
    FunctionalDataset data;
    GroundTruth truth;
};

/// Seeded generator; subject i draws from its own stream derived from
/// (seed, i), so output does not depend on generation order.
SynthResult generate(const SynthScenario& scenario);

struct OracleScores {
    Vector covariate;
    Vector response;
};
OracleScores oracle_scores(const GroundTruth& truth, std::size_t subject);

Json ground_truth_to_json(const GroundTruth& truth);

/// A[p, q] = sum_c <planted_p^(c), scale_c * estimated_q^(c)> under the grid
/// quadrature. With scale = sqrt(v) it maps estimated z-scale scores to
/// planted scores; with scale = 1/sqrt(v) and the roles swapped it carries
/// planted scores into the estimated basis.
Matrix alignment_matrix(const std::vector<Matrix>& planted, const std::vector<Matrix>& estimated,
                        const std::vector<Vector>& scale, const EvalGrid& grid);

/// Files written by the synth command.
struct SynthFiles {
    std::filesystem::path data;
    std::filesystem::path schema;
    std::filesystem::path truth;
};
SynthFiles write_synth(const SynthResult& result, const std::filesystem::path& out_dir, Index grid_size = 101);

}  // namespace fofr
