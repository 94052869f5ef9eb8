// SPDX-License-Identifier: MIT
//
// Bootstrap particle filter with systematic resampling at every step.
#pragma once

#include "svdnf/errors.hpp"
#include "svdnf/model.hpp"
#include "svdnf/rng.hpp"
#include "svdnf/simulate.hpp"
#include "svdnf/summation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <tuple>
#include <vector>

namespace svdnf {

/// Default particle counts per variant.
[[nodiscard]] inline std::size_t default_particles(ModelVariant v) noexcept {
    switch (v) {
        case ModelVariant::SV: return 100'000;
        case ModelVariant::SVYJ: return 250'000;
        case ModelVariant::SVCJ:
        case ModelVariant::SVCJSI: return 1'000'000;
    }
    return 100'000;
}

/// Systematic resampling with offset u0 in [0, 1). Weights must sum to 1.
[[nodiscard]] inline std::vector<std::size_t> resample_systematic(std::span<const double> weights,
                                                                  double u0, std::size_t count) {
    std::vector<std::size_t> idx(count);
    if (weights.empty() || count == 0) return idx;
    const std::size_t n = weights.size();
    double cum = weights[0];
    std::size_t j = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double pos = (static_cast<double>(i) + u0) / static_cast<double>(count);
        while (pos >= cum && j + 1 < n) cum += weights[++j];
        idx[i] = j;
    }
    return idx;
}

[[nodiscard]] inline std::vector<std::size_t> resample_systematic(std::span<const double> weights,
                                                                  std::uint64_t seed) {
    RandomStream rng(seed, kResampleStream);
    return resample_systematic(weights, rng.uniform(), weights.size());
}

struct SirResult {
    std::vector<double> loglik_contribs;
    double total_loglik = 0.0;
    std::size_t particles = 0;
};

struct SirOptions {
    std::size_t chunk = 4096;  // part of the reproducibility contract
    InitialState init = InitialState::stationary();
};

/// Propagates every particle through the discretized dynamics, weights it by
/// the measurement density given the sampled shocks and resamples.
[[nodiscard]] inline SirResult sir_likelihood(const ModelParams& params, std::span<const double> y,
                                              std::size_t n_particles, std::uint64_t seed,
                                              const SirOptions& opt = {}) {
    if (n_particles < 100) throw DomainError("SIR needs at least 100 particles");
    if (y.empty()) throw DomainError("SIR needs a nonempty series");
    if (opt.chunk == 0) throw DomainError("SIR chunk size must be > 0");

    const detail::Propagator prop(params);
    const std::size_t n_chunks = (n_particles + opt.chunk - 1) / opt.chunk;
    std::vector<RandomStream> streams;
    streams.reserve(n_chunks);
    for (std::size_t c = 0; c < n_chunks; ++c) streams.emplace_back(seed, c);
    RandomStream resampler(seed, kResampleStream);

    std::vector<double> xv(n_particles), xl(n_particles);
    std::vector<double> logw(n_particles), w(n_particles);
    std::vector<double> tv(n_particles), tl(n_particles);

#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(n_chunks); ++c) {
        const std::size_t lo = static_cast<std::size_t>(c) * opt.chunk;
        const std::size_t hi = std::min(n_particles, lo + opt.chunk);
        for (std::size_t i = lo; i < hi; ++i)
            std::tie(xv[i], xl[i]) = detail::draw_initial(params, opt.init, streams[c]);
    }

    SirResult out;
    out.particles = n_particles;
    out.loglik_contribs.resize(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double yt = y[t];
#pragma omp parallel for schedule(static)
        for (std::int64_t c = 0; c < static_cast<std::int64_t>(n_chunks); ++c) {
            const std::size_t lo = static_cast<std::size_t>(c) * opt.chunk;
            const std::size_t hi = std::min(n_particles, lo + opt.chunk);
            RandomStream& rng = streams[static_cast<std::size_t>(c)];
            for (std::size_t i = lo; i < hi; ++i)
                logw[i] = detail::Propagator::log_weight(yt, prop.step(xv[i], xl[i], rng));
        }

        const double lse = log_sum_exp(logw);
        if (!std::isfinite(lse)) throw ParticleCollapseError(t + 1);
        out.loglik_contribs[t] = lse - std::log(static_cast<double>(n_particles));
        for (std::size_t i = 0; i < n_particles; ++i) w[i] = std::exp(logw[i] - lse);

        const auto idx = resample_systematic(w, resampler.uniform(), n_particles);
        for (std::size_t i = 0; i < n_particles; ++i) {
            tv[i] = xv[idx[i]];
            tl[i] = xl[idx[i]];
        }
        xv.swap(tv);
        xl.swap(tl);
    }
    out.total_loglik = pairwise_sum(out.loglik_contribs);
    return out;
}

}  // namespace svdnf
