// SPDX-License-Identifier: MIT
//
// State grids for the discrete filter. Each factor gets an ascending node
// vector spanning mean +- d * stddev of its long-run law, with d = 3 + ln(count),
// and a half-open interval per node split at midpoints.
#pragma once

#include "svdnf/errors.hpp"
#include "svdnf/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace svdnf {

struct GridSpec {
    std::size_t N = 50;      // variance nodes
    std::size_t M = 1;       // intensity nodes
    std::size_t K = 0;       // variance-jump nodes
    std::size_t R = 2;       // Poisson truncation
    double floor_eps = 1e-8;

    /// Defaults for a variant: K = ceil(N / 2.5) when variance jumps exist,
    /// M = N for stochastic intensity and 1 otherwise.
    static GridSpec for_variant(ModelVariant v, std::size_t n = 50) {
        GridSpec g;
        g.N = n;
        g.M = has_stochastic_intensity(v) ? n : 1;
        g.K = has_variance_jumps(v) ? static_cast<std::size_t>(std::ceil(static_cast<double>(n) / 2.5))
                                    : 0;
        g.R = has_return_jumps(v) ? 2 : 0;
        return g;
    }

    /// Checks the sizes against a variant; inactive dimensions are ignored.
    void validate(ModelVariant v) const {
        if (N < 2) throw DomainError("grid: N must be >= 2");
        if (M < 1) throw DomainError("grid: M must be >= 1");
        if (has_variance_jumps(v) && K < 1) throw DomainError("grid: K must be >= 1");
        if (!(floor_eps > 0.0)) throw DomainError("grid: floor_eps must be > 0");
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Node vector plus the N + 1 interval edges; node i covers [edges[i], edges[i+1]).
struct Axis {
    std::vector<double> nodes;
    std::vector<double> edges;

    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
};

struct StateGrid {
    Axis v;
    Axis lambda;
    Axis jump;  // empty without variance jumps
};

[[nodiscard]] inline double grid_width_factor(std::size_t count) {
    return 3.0 + std::log(static_cast<double>(count));
}

namespace detail {

/// Midpoint edges with the reflected left edge clamped to 0 and +inf on the right.
inline std::vector<double> midpoint_edges(const std::vector<double>& x) {
    std::vector<double> e(x.size() + 1);
    e.front() = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) e[i] = 0.5 * (x[i - 1] + x[i]);
    e.back() = std::numeric_limits<double>::infinity();
    return e;
}

/// Pushes nodes up so the sequence is strictly increasing.
inline void enforce_increasing(std::vector<double>& x) {
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (!(x[i] > x[i - 1])) {
            const double step = std::max(std::abs(x[i - 1]) * 1e-12, 1e-300);
            x[i] = std::max(x[i - 1] + step, std::nextafter(x[i - 1], std::numeric_limits<double>::infinity()));
        }
    }
}

/// Nodes uniform in sqrt(x) between clamped boundaries.
inline std::vector<double> sqrt_axis(double mean, double var, std::size_t count, double floor) {
    std::vector<double> x(count);
    if (count == 1) {
        x[0] = std::max(mean, floor);
        return x;
    }
    const double d = grid_width_factor(count);
    const double sd = std::sqrt(std::max(var, 0.0));
    const double lo = std::max(mean - d * sd, floor);
    const double hi = std::max(mean + d * sd, floor);
    const double slo = std::sqrt(lo);
    const double shi = std::sqrt(hi);
    x.front() = lo;
    x.back() = hi;
    for (std::size_t i = 1; i + 1 < count; ++i) {
        const double s = slo + (static_cast<double>(i) / static_cast<double>(count - 1)) * (shi - slo);
        x[i] = s * s;
    }
    enforce_increasing(x);
    return x;
}

inline std::vector<double> linear_axis(double mean, double var, std::size_t count) {
    std::vector<double> x(count);
    if (count == 1) {
        x[0] = std::max(mean, 0.0);
        return x;
    }
    const double d = grid_width_factor(count);
    const double sd = std::sqrt(std::max(var, 0.0));
    const double lo = std::max(mean - d * sd, 0.0);
    const double hi = std::max(mean + d * sd, 0.0);
    for (std::size_t i = 0; i < count; ++i)
        x[i] = lo + (static_cast<double>(i) / static_cast<double>(count - 1)) * (hi - lo);
    x.back() = hi;
    enforce_increasing(x);
    return x;
}

}  // namespace detail

/// Builds the variance, intensity and variance-jump axes for `params`.
[[nodiscard]] inline StateGrid build_grid(const ModelParams& params, const GridSpec& spec) {
    const ModelVariant variant = params.variant();
    spec.validate(variant);
    const StationaryMoments m = stationary_moments(params);

    StateGrid g;
    g.v.nodes = detail::sqrt_axis(m.mean_v, m.var_v, spec.N, spec.floor_eps);
    if (!(g.v.nodes.back() > spec.floor_eps))
        throw DomainError("grid: variance range collapses onto the floor");
    g.v.edges = detail::midpoint_edges(g.v.nodes);

    if (has_stochastic_intensity(variant)) {
        g.lambda.nodes = detail::sqrt_axis(m.mean_lambda, m.var_lambda, spec.M, spec.floor_eps);
    } else {
        g.lambda.nodes = {params.values().omega};
    }
    g.lambda.edges = detail::midpoint_edges(g.lambda.nodes);

    if (has_variance_jumps(variant)) {
        g.jump.nodes = detail::linear_axis(m.mean_jump, m.var_jump, spec.K);
        g.jump.edges = detail::midpoint_edges(g.jump.nodes);
    }
    return g;
}

}  // namespace svdnf
