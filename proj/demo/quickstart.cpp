// SPDX-License-Identifier: MIT
//
// Simulates two years of SVCJ returns, evaluates the likelihood with the grid
// filter and the particle filter, and prints a few filtered states.

#include "svdnf/svdnf.hpp"

#include <cmath>
#include <cstdio>

int main() {
    using namespace svdnf;

    ParamValues v = default_start(ModelVariant::SVCJ);
    const ModelParams params(ModelVariant::SVCJ, v);
    const SimulatedPath path = simulate(params, 504, 2024);

    const GridSpec grid = GridSpec::for_variant(ModelVariant::SVCJ, 50);
    const FilterOutput f = run_filter(params, grid, path.returns);
    const SirResult sir = sir_likelihood(params, path.returns, 100'000, 7);

    std::printf("grid filter     loglik %.6f  (N=%zu K=%zu R=%zu)\n", f.total_loglik, grid.N, grid.K,
                grid.R);
    std::printf("particle filter loglik %.6f  (%zu particles)\n", sir.total_loglik, sir.particles);
    std::printf("APE %.4f%%\n\n", ape(f.total_loglik, sir.total_loglik));

    std::printf("%4s %10s %10s %10s %8s %10s\n", "t", "y", "true vol", "filt vol", "P(jump)", "E[j_v]");
    for (std::size_t t = 0; t < path.returns.size(); t += 42) {
        std::printf("%4zu %10.5f %10.5f %10.5f %8.3f %10.6f\n", t + 1, path.returns[t],
                    std::sqrt(path.variances[t + 1] * params.h()), std::sqrt(f.filtered_v[t] * params.h()),
                    f.filtered_jump_prob[t], f.filtered_jump_variance[t]);
    }
    return 0;
}
