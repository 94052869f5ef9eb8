// SPDX-License-Identifier: MIT
//
// Euler path simulation with full truncation: the internal states x_v and
// x_l may go negative, but only their positive parts enter drifts and square
// roots (x_t = x + kappa (theta - x+) h + sigma sqrt(x+ h) eps + jumps).
#pragma once

#include "svdnf/model.hpp"
#include "svdnf/rng.hpp"
#include "svdnf/summation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace svdnf {

/// How latent states are initialized at t = 0.
struct InitialState {
    enum class Kind { LongRunMean, Stationary, Fixed };

    Kind kind = Kind::LongRunMean;
    double v0 = 0.0;
    double lambda0 = 0.0;

    /// (theta, omega).
    static InitialState long_run_mean() { return {}; }
    /// Stationary square-root laws: v ~ Gamma(2 kappa theta / sigma^2, sigma^2 / (2 kappa)),
    /// and the analog for the intensity when it is stochastic.
    static InitialState stationary() { return {Kind::Stationary, 0.0, 0.0}; }
    static InitialState fixed(double v0, double lambda0 = 0.0) { return {Kind::Fixed, v0, lambda0}; }
};

struct SimulatedPath {
    std::vector<double> returns;          // T
    std::vector<double> variances;        // T + 1, v_0..v_T (positive part)
    std::vector<double> intensities;      // T + 1
    std::vector<unsigned> jump_counts;    // T
    std::vector<double> jump_returns;     // T
    std::vector<double> jump_variances;   // T
    std::uint64_t seed = 0;
};

namespace detail {

/// Draws initial (x_v, x_l) for one path.
inline std::pair<double, double> draw_initial(const ModelParams& params, const InitialState& init,
                                              RandomStream& rng) {
    const ParamValues& p = params.values();
    const bool stochastic = has_stochastic_intensity(params.variant());
    switch (init.kind) {
        case InitialState::Kind::LongRunMean:
            return {p.theta, p.omega};
        case InitialState::Kind::Fixed:
            return {init.v0, stochastic ? init.lambda0 : p.omega};
        case InitialState::Kind::Stationary: {
            double v = p.theta;
            if (p.kappa > 0.0 && p.theta > 0.0)
                v = rng.gamma(2.0 * p.kappa * p.theta / (p.sigma * p.sigma),
                              p.sigma * p.sigma / (2.0 * p.kappa));
            double l = p.omega;
            if (stochastic && p.xi > 0.0 && p.chi > 0.0 && p.omega > 0.0)
                l = rng.gamma(2.0 * p.chi * p.omega / (p.xi * p.xi), p.xi * p.xi / (2.0 * p.chi));
            return {v, l};
        }
    }
    return {p.theta, p.omega};
}

/// One Euler step of the latent states with the return-jump integrated out:
/// samples (n, j_v, eps_v, eps_l), returns the Gaussian moments of y_t given
/// those shocks and advances (x_v, x_l) in place.
class Propagator {
public:
    explicit Propagator(const ModelParams& params)
        : p_(params.values()),
          abar_(compensator(params)),
          dynamic_(has_stochastic_intensity(params.variant())),
          intensity_shock_(dynamic_ && p_.xi > 0.0),
          resid_(1.0 - p_.rho_v * p_.rho_v -
                 (intensity_shock_ ? p_.rho_lambda * p_.rho_lambda : 0.0)),
          var_jumps_(has_variance_jumps(params.variant()) && p_.nu > 0.0) {}

    struct Moments {
        double mean;
        double var;
    };

    Moments step(double& xv, double& xl, RandomStream& rng) const {
        const double h = p_.h;
        const double v = std::max(xv, 0.0);
        const double l = dynamic_ ? std::max(xl, 0.0) : xl;
        const unsigned n = rng.poisson(l * h);
        double jv = 0.0;
        if (var_jumps_)
            for (unsigned i = 0; i < n; ++i) jv += p_.nu * rng.exponential();
        const double eps_v = rng.normal();
        const double eps_l = intensity_shock_ ? rng.normal() : 0.0;
        const double sqrt_vh = std::sqrt(v * h);

        Moments m;
        m.mean = (p_.mu - 0.5 * v - abar_ * l) * h +
                 sqrt_vh * (p_.rho_v * eps_v + p_.rho_lambda * eps_l) + p_.alpha * n + p_.rho_z * jv;
        m.var = v * resid_ * h + n * p_.delta * p_.delta;

        xv = xv + p_.kappa * (p_.theta - v) * h + p_.sigma * sqrt_vh * eps_v + jv;
        if (dynamic_) xl = xl + p_.chi * (p_.omega - l) * h + p_.xi * std::sqrt(l * h) * eps_l;
        return m;
    }

    /// log N(y; m.mean, m.var); a degenerate variance gives -inf.
    static double log_weight(double y, const Moments& m) noexcept {
        if (!(m.var > 0.0)) return -std::numeric_limits<double>::infinity();
        return dist::normal_logpdf(y, m.mean, m.var);
    }

private:
    ParamValues p_;
    double abar_;
    bool dynamic_;
    bool intensity_shock_;
    double resid_;
    bool var_jumps_;
};

}  // namespace detail

/// Simulates T steps of the discretized model from a single stream (seed, 0).
[[nodiscard]] inline SimulatedPath simulate(const ModelParams& params, std::size_t steps,
                                            std::uint64_t seed,
                                            const InitialState& init = InitialState::long_run_mean()) {
    if (steps < 1) throw DomainError("simulate needs T >= 1");
    if (init.kind == InitialState::Kind::Fixed && (init.v0 < 0.0 || init.lambda0 < 0.0))
        throw DomainError("initial states must be >= 0");

    const ParamValues& p = params.values();
    const double h = p.h;
    const double abar = compensator(params);
    const double resid = std::sqrt(1.0 - p.rho_v * p.rho_v - p.rho_lambda * p.rho_lambda);
    const bool stochastic = has_stochastic_intensity(params.variant());

    RandomStream rng(seed, 0);
    auto [xv, xl] = detail::draw_initial(params, init, rng);

    SimulatedPath path;
    path.seed = seed;
    path.returns.resize(steps);
    path.variances.resize(steps + 1);
    path.intensities.resize(steps + 1);
    path.jump_counts.resize(steps);
    path.jump_returns.resize(steps);
    path.jump_variances.resize(steps);
    path.variances[0] = std::max(xv, 0.0);
    path.intensities[0] = std::max(xl, 0.0);

    for (std::size_t t = 0; t < steps; ++t) {
        const double v = std::max(xv, 0.0);
        const double l = std::max(xl, 0.0);
        const unsigned n = rng.poisson(l * h);
        double zv_sum = 0.0;
        double zy_sum = 0.0;
        for (unsigned i = 0; i < n; ++i) {
            const double zv = p.nu * rng.exponential();
            const double zy = p.alpha + p.rho_z * zv + p.delta * rng.normal();
            zv_sum += zv;
            zy_sum += zy;
        }
        const double e_perp = rng.normal();
        const double e_v = rng.normal();
        const double e_l = stochastic ? rng.normal() : 0.0;
        const double e_y = resid * e_perp + p.rho_v * e_v + p.rho_lambda * e_l;
        const double sqrt_vh = std::sqrt(v * h);

        path.returns[t] = (p.mu - 0.5 * v - abar * l) * h + sqrt_vh * e_y + zy_sum;
        xv = xv + p.kappa * (p.theta - v) * h + p.sigma * sqrt_vh * e_v + zv_sum;
        if (stochastic) xl = xl + p.chi * (p.omega - l) * h + p.xi * std::sqrt(l * h) * e_l;

        path.jump_counts[t] = n;
        path.jump_returns[t] = zy_sum;
        path.jump_variances[t] = zv_sum;
        path.variances[t + 1] = std::max(xv, 0.0);
        path.intensities[t + 1] = std::max(xl, 0.0);
    }
    return path;
}

struct OracleEstimate {
    double log_likelihood = 0.0;
    double standard_error = 0.0;  // of the log-likelihood, delta method
    std::size_t paths = 0;
    bool imprecise = false;       // relative SE above 1%
};

/// Brute-force likelihood: averages prod_t r(y_t | simulated latent path) over
/// unconditional latent paths. Paths are split in chunks of `chunk` with one
/// random stream per chunk.
[[nodiscard]] inline OracleEstimate mc_likelihood_oracle(
    const ModelParams& params, std::span<const double> y, std::size_t n_paths, std::uint64_t seed,
    const InitialState& init = InitialState::stationary(), std::size_t chunk = 4096) {
    if (y.empty()) throw DomainError("oracle needs a nonempty series");
    if (n_paths < 2) throw DomainError("oracle needs at least 2 paths");
    const detail::Propagator prop(params);
    std::vector<double> logw(n_paths);
    const auto n_chunks = static_cast<std::int64_t>((n_paths + chunk - 1) / chunk);

#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < n_chunks; ++c) {
        RandomStream rng(seed, static_cast<std::uint64_t>(c));
        const std::size_t lo = static_cast<std::size_t>(c) * chunk;
        const std::size_t hi = std::min(n_paths, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) {
            auto [xv, xl] = detail::draw_initial(params, init, rng);
            double lw = 0.0;
            for (double yt : y) {
                lw += detail::Propagator::log_weight(yt, prop.step(xv, xl, rng));
                if (lw == -std::numeric_limits<double>::infinity()) break;
            }
            logw[i] = lw;
        }
    }

    const double m = *std::max_element(logw.begin(), logw.end());
    if (!std::isfinite(m)) throw NumericalError("oracle: every path has zero weight");
    std::vector<double> w(n_paths);
    std::vector<double> w2(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) {
        w[i] = std::exp(logw[i] - m);
        w2[i] = w[i] * w[i];
    }
    const double n = static_cast<double>(n_paths);
    const double mean = pairwise_sum(w) / n;
    const double var = std::max(pairwise_sum(w2) / n - mean * mean, 0.0) * n / (n - 1.0);

    OracleEstimate est;
    est.paths = n_paths;
    est.log_likelihood = m + std::log(mean);
    est.standard_error = std::sqrt(var / n) / mean;
    est.imprecise = est.standard_error > 0.01;
    return est;
}

}  // namespace svdnf
