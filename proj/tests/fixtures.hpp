#pragma once

#include "fofr/pipeline.hpp"
#include "fofr/synthgen.hpp"

namespace fofr::testing {

/// Small planted linear scenario: 2 covariate channels, 1 response channel.
inline SynthScenario small_scenario(std::uint64_t seed = 1, std::size_t n = 60) {
    SynthScenario s;
    s.n_subjects = n;
    s.covariate_channels = 2;
    s.response_channels = 1;
    s.covariate_eigenvalues = (Vector(3) << 1.0, 0.5, 0.25).finished();
    s.mapping.kind = MappingKind::Linear;
    s.mapping.terms = {(Matrix(2, 3) << 1.0, 0.3, 0.0, -0.2, 0.8, 0.5).finished()};
    s.noise_sd = 0.0;
    s.sampling.points = 31;
    s.seed = seed;
    return s;
}

/// Fast settings: fixed bandwidths, short training.
inline PipelineConfig small_config(RegressorKind kind = RegressorKind::Fflm) {
    PipelineConfig c;
    c.regressor = kind;
    for (SideConfig* side : {&c.covariate, &c.response}) {
        side->grid_size = 31;
        side->kernel = KernelSpec{KernelFamily::Gaussian, 0.05, 0.05};
        side->rule = TruncationRule{0.999};
    }
    c.hidden_widths = {8};
    c.training.epochs = 100;
    return c;
}

}  // namespace fofr::testing
