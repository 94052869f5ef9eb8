// SPDX-License-Identifier: MIT
//
// Accuracy and speed studies: APE distributions between the grid filter and
// the particle filter, grid-size sweeps against a fine-grid reference, and
// simulate-then-estimate bias studies.
#pragma once

#include "svdnf/dnf.hpp"
#include "svdnf/errors.hpp"
#include "svdnf/inference.hpp"
#include "svdnf/model.hpp"
#include "svdnf/rng.hpp"
#include "svdnf/simulate.hpp"
#include "svdnf/sir.hpp"
#include "svdnf/summation.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace svdnf {

/// 100 |(dnf - sir) / sir|.
[[nodiscard]] inline double ape(double loglik_dnf, double loglik_sir) {
    if (loglik_sir == 0.0) throw DomainError("ape: reference log-likelihood is 0");
    return 100.0 * std::abs((loglik_dnf - loglik_sir) / loglik_sir);
}

/// Sample quantile, linear interpolation between order statistics (type 7).
[[nodiscard]] inline double quantile(std::vector<double> x, double level) {
    if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(x.begin(), x.end());
    const double pos = level * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

[[nodiscard]] inline double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

inline constexpr std::array<double, 7> kApeLevels = {0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 0.995};

struct ParamBox {
    double lo;
    double hi;
};

/// Sampling box for random parameter draws.
inline constexpr std::array<ParamBox, kParamCount> kRandomParamBox = {{
    {-0.20, 0.20},   // mu
    {0.0, 10.0},     // kappa
    {0.0, 0.10},     // theta
    {0.10, 1.0},     // sigma
    {-0.95, 0.95},   // rho_v
    {0.0, 50.0},     // chi
    {0.0, 25.0},     // omega
    {0.10, 10.0},    // xi
    {-0.95, 0.95},   // rho_lambda, widened below to max(0.95, 1 - rho_v^2)
    {-0.05, 0.05},   // alpha
    {0.0, 0.10},     // delta
    {-5.0, 5.0},     // rho_z
    {0.0, 0.03},     // nu
}};

/// Uniform draw inside the box, restricted to `variant`, redrawn until the
/// parameters are valid and a grid can be built.
[[nodiscard]] inline ModelParams random_params(ModelVariant variant, std::uint64_t seed,
                                               double h = 1.0 / 252.0) {
    RandomStream rng(seed, 0);
    constexpr int kMaxTries = 10000;
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
        ParamValues p;
        p.h = h;
        for (std::size_t i = 0; i < kParamCount; ++i) {
            const ParamBox b = kRandomParamBox[i];
            p[static_cast<Param>(i)] = b.lo + (b.hi - b.lo) * rng.uniform();
        }
        const double bound = std::max(0.95, 1.0 - p.rho_v * p.rho_v);
        p.rho_lambda = -bound + 2.0 * bound * (p.rho_lambda + 0.95) / 1.9;
        p = restrict_to(variant, p);
        if (!(p.kappa > 0.0) || !(p.theta > 0.0)) continue;
        if (has_stochastic_intensity(variant) && !(p.chi > 0.0 && p.omega > 0.0)) continue;
        try {
            ModelParams mp(variant, p);
            (void)build_grid(mp, GridSpec::for_variant(variant, 2));
            return mp;
        } catch (const DomainError&) {
        }
    }
    throw NumericalError("random_params: no valid draw after " + std::to_string(kMaxTries) + " tries");
}

// ---------------------------------------------------------------------------
// APE study

struct ApeTrial {
    std::uint64_t seed = 0;
    ParamValues params;
    std::size_t series_len = 0;
    double loglik_dnf = 0.0;
    double loglik_ref = 0.0;
    double ape = 0.0;
};

struct ApeReport {
    ModelVariant variant = ModelVariant::SV;
    std::vector<ApeTrial> trials;
    std::array<double, 7> quantiles{};
    std::size_t excluded = 0;  // trials lost to zero-likelihood or collapse errors
    std::vector<std::string> errors;
};

struct ApeStudyConfig {
    GridSpec grid;
    std::size_t particles = 100'000;
    /// Compare against a second grid filter instead of the particle filter.
    bool dnf_reference = false;
    GridSpec reference_grid;
};

[[nodiscard]] inline ApeReport run_ape_study(ModelVariant variant, std::size_t n_trials,
                                             std::size_t series_len, const ApeStudyConfig& cfg,
                                             std::uint64_t seed) {
    ApeReport rep;
    rep.variant = variant;
    std::vector<double> apes;
    for (std::size_t i = 0; i < n_trials; ++i) {
        const std::uint64_t s = derive_seed(seed, i);
        ApeTrial tr;
        tr.seed = s;
        tr.series_len = series_len;
        try {
            const ModelParams p = random_params(variant, derive_seed(s, 0));
            tr.params = p.values();
            const SimulatedPath path = simulate(p, series_len, derive_seed(s, 1));
            tr.loglik_dnf = dnf_log_likelihood(p, cfg.grid, path.returns);
            tr.loglik_ref = cfg.dnf_reference
                                ? dnf_log_likelihood(p, cfg.reference_grid, path.returns)
                                : sir_likelihood(p, path.returns, cfg.particles, derive_seed(s, 2))
                                      .total_loglik;
            tr.ape = ape(tr.loglik_dnf, tr.loglik_ref);
        } catch (const NumericalError& e) {
            ++rep.excluded;
            rep.errors.push_back("trial " + std::to_string(i) + ": " + e.what());
            continue;
        }
        apes.push_back(tr.ape);
        rep.trials.push_back(tr);
    }
    for (std::size_t q = 0; q < kApeLevels.size(); ++q) rep.quantiles[q] = quantile(apes, kApeLevels[q]);
    return rep;
}

// ---------------------------------------------------------------------------
// Grid-size sweep

struct SweepPoint {
    std::size_t N = 0;
    double mape = 0.0;
    double seconds = 0.0;          // median wall time per evaluation
    std::vector<double> apes;      // one per parameter draw
    std::vector<double> times;
};

struct SirBudgetPoint {
    std::size_t particles = 0;
    double mape = 0.0;
    double seconds = 0.0;
    std::vector<double> apes;      // one per replication
    std::vector<double> times;
};

struct PowerFit {
    double a = 0.0;
    double b = 0.0;
    std::vector<double> residuals;  // in log space
};

struct SweepReport {
    ModelVariant variant = ModelVariant::SV;
    std::size_t reference_N = 0;
    std::vector<ParamValues> draws;
    std::vector<double> reference_loglik;
    std::vector<SweepPoint> points;
    std::vector<SirBudgetPoint> sir;
    PowerFit fit;
    std::size_t excluded = 0;
};

struct SweepConfig {
    std::vector<std::size_t> N_list;
    std::size_t reference_N = 800;
    std::size_t n_draws = 30;
    std::size_t timing_repeats = 4;  // extra timed evaluations per (draw, N)
    std::vector<std::size_t> sir_budgets;
    std::size_t sir_reps = 0;        // particle-filter runs per budget and draw
    std::size_t sir_draws = 1;       // draws (from the first) that get particle-filter runs
};

/// Least squares fit of log(y) = log(a) + b log(x) over positive y.
[[nodiscard]] inline PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    PowerFit f;
    const std::size_t n = lx.size();
    if (n < 2) {
        f.a = f.b = std::numeric_limits<double>::quiet_NaN();
        return f;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    f.b = sxy / sxx;
    const double la = my - f.b * mx;
    f.a = std::exp(la);
    for (std::size_t i = 0; i < n; ++i) f.residuals.push_back(ly[i] - (la + f.b * lx[i]));
    return f;
}

namespace detail {
inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace detail

/// MAPE and wall time per grid size against a fine-grid reference on a fixed
/// series y, over random parameter draws.
[[nodiscard]] inline SweepReport run_tradeoff_sweep(ModelVariant variant, std::span<const double> y,
                                                    const SweepConfig& cfg, std::uint64_t seed,
                                                    double h = 1.0 / 252.0) {
    SweepReport rep;
    rep.variant = variant;
    rep.reference_N = cfg.reference_N;
    rep.points.resize(cfg.N_list.size());
    for (std::size_t k = 0; k < cfg.N_list.size(); ++k) rep.points[k].N = cfg.N_list[k];

    for (std::size_t d = 0, attempt = 0; d < cfg.n_draws; ++attempt) {
        if (attempt > 100 * (cfg.n_draws + 1)) throw NumericalError("sweep: too many failed draws");
        const ModelParams p = random_params(variant, derive_seed(seed, attempt), h);
        double ref = 0.0;
        std::vector<double> lls(cfg.N_list.size());
        std::vector<std::vector<double>> times(cfg.N_list.size());
        try {
            ref = dnf_log_likelihood(p, GridSpec::for_variant(variant, cfg.reference_N), y);
            for (std::size_t k = 0; k < cfg.N_list.size(); ++k) {
                const DnfFilter f(p, GridSpec::for_variant(variant, cfg.N_list[k]));
                for (std::size_t r = 0; r < 1 + cfg.timing_repeats; ++r) {
                    const auto t0 = std::chrono::steady_clock::now();
                    lls[k] = f.log_likelihood(y);
                    times[k].push_back(detail::seconds_since(t0));
                }
            }
        } catch (const NumericalError&) {
            ++rep.excluded;
            continue;
        }
        rep.draws.push_back(p.values());
        rep.reference_loglik.push_back(ref);
        for (std::size_t k = 0; k < cfg.N_list.size(); ++k) {
            rep.points[k].apes.push_back(ape(lls[k], ref));
            for (double t : times[k]) rep.points[k].times.push_back(t);
        }

        if (d < cfg.sir_draws && cfg.sir_reps > 0) {
            rep.sir.resize(cfg.sir_budgets.size());
            for (std::size_t b = 0; b < cfg.sir_budgets.size(); ++b) {
                SirBudgetPoint& sp = rep.sir[b];
                sp.particles = cfg.sir_budgets[b];
                for (std::size_t r = 0; r < cfg.sir_reps; ++r) {
                    const std::uint64_t s = derive_seed(derive_seed(seed, (1u << 20) + d), r);
                    const auto t0 = std::chrono::steady_clock::now();
                    double ll = 0.0;
                    try {
                        ll = sir_likelihood(p, y, sp.particles, s).total_loglik;
                    } catch (const NumericalError&) {
                        ll = -std::numeric_limits<double>::infinity();
                    }
                    sp.times.push_back(detail::seconds_since(t0));
                    sp.apes.push_back(std::isfinite(ll) ? ape(ll, ref) : std::numeric_limits<double>::infinity());
                }
            }
        }
        ++d;
    }
    for (SirBudgetPoint& sp : rep.sir) {
        sp.mape = pairwise_sum(sp.apes) / static_cast<double>(sp.apes.size());
        sp.seconds = median(sp.times);
    }

    std::vector<double> xs, ys;
    for (SweepPoint& pt : rep.points) {
        pt.mape = pairwise_sum(pt.apes) / static_cast<double>(pt.apes.size());
        pt.seconds = median(pt.times);
        xs.push_back(static_cast<double>(pt.N));
        ys.push_back(pt.mape);
    }
    rep.fit = fit_power_law(xs, ys);
    return rep;
}

// ---------------------------------------------------------------------------
// Bias study

struct BiasRow {
    Param param = Param::mu;
    double true_value = 0.0;
    double mean = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
};

struct BiasReport {
    ModelVariant variant = ModelVariant::SV;
    std::size_t T = 0;
    std::vector<BiasRow> rows;
    std::vector<ParamValues> estimates;  // converged replications
    std::vector<std::size_t> non_converged;
    std::vector<std::string> errors;
};

struct BiasConfig {
    GridSpec grid;
    EstimateOptions estimate;
};

[[nodiscard]] inline BiasReport run_bias_study(ModelVariant variant, std::size_t n_reps, std::size_t T,
                                               const ModelParams& true_params, std::uint64_t seed,
                                               BiasConfig cfg) {
    cfg.estimate.compute_std_errors = false;
    BiasReport rep;
    rep.variant = variant;
    rep.T = T;
    for (std::size_t r = 0; r < n_reps; ++r) {
        const SimulatedPath path = simulate(true_params, T, derive_seed(seed, r));
        try {
            const EstimationResult est = estimate(variant, path.returns, cfg.grid, std::nullopt, cfg.estimate);
            if (!est.convergence.converged) {
                rep.non_converged.push_back(r);
                continue;
            }
            rep.estimates.push_back(est.params_hat.values());
        } catch (const std::exception& e) {
            rep.non_converged.push_back(r);
            rep.errors.push_back("replication " + std::to_string(r) + ": " + e.what());
        }
    }
    for (Param q : active_params(variant)) {
        BiasRow row;
        row.param = q;
        row.true_value = true_params[q];
        std::vector<double> x, sq;
        for (const ParamValues& e : rep.estimates) {
            x.push_back(e[q]);
            sq.push_back((e[q] - row.true_value) * (e[q] - row.true_value));
        }
        const double n = static_cast<double>(x.size());
        row.mean = n > 0 ? pairwise_sum(x) / n : std::numeric_limits<double>::quiet_NaN();
        row.bias = row.mean - row.true_value;
        row.rmse = n > 0 ? std::sqrt(pairwise_sum(sq) / n) : std::numeric_limits<double>::quiet_NaN();
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace svdnf
