// SPDX-License-Identifier: MIT
//
// Discrete nonlinear filter. The posterior over (v, lambda) lives on the grid
// nodes; each step sums the closed-form transition and measurement terms over
// previous nodes, jump counts n <= R and variance-jump nodes, using the node as
// the representative point of its interval and cdf differences for interval
// probabilities.
//
// Everything that does not depend on the observation is precomputed once per
// parameter set. Transition probabilities are stored in bands: entries more
// than kBandSigmas standard deviations away from the transition mean are
// treated as zero.
#pragma once

#include "svdnf/distributions.hpp"
#include "svdnf/errors.hpp"
#include "svdnf/grid.hpp"
#include "svdnf/model.hpp"
#include "svdnf/summation.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace svdnf {

/// Posterior mass over grid nodes, stored v-major: mass[i * M + l].
struct PosteriorGrid {
    std::vector<double> mass;
    std::size_t N = 0;
    std::size_t M = 0;
    std::size_t t = 0;

    [[nodiscard]] double operator()(std::size_t i, std::size_t l) const { return mass[i * M + l]; }
};

struct FilterOutput {
    std::vector<double> loglik_contribs;
    double total_loglik = 0.0;
    std::vector<double> filtered_v;
    std::vector<double> filtered_lambda;
    std::vector<double> filtered_jump_prob;
    std::vector<double> filtered_jump_return;    // E[j_y | y_1..t]
    std::vector<double> filtered_jump_variance;  // E[j_v | y_1..t]
};

struct StepResult {
    double log_contrib = 0.0;
    PosteriorGrid posterior;
    double jump_prob = 0.0;
    double jump_return = 0.0;
    double jump_variance = 0.0;
};

inline constexpr double kBandSigmas = 10.0;

class DnfFilter {
public:
    DnfFilter(const ModelParams& params, const GridSpec& spec)
        : params_(params), spec_(spec), grid_(build_grid(params, spec)) {
        precompute();
    }

    [[nodiscard]] const ModelParams& params() const noexcept { return params_; }
    [[nodiscard]] const GridSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const StateGrid& grid() const noexcept { return grid_; }

    /// Stationary laws integrated over the grid cells, renormalized.
    [[nodiscard]] PosteriorGrid initial_posterior() const {
        const ParamValues& p = params_.values();
        std::vector<double> pv(N_);
        const double shape_v = 2.0 * p.kappa * p.theta / (p.sigma * p.sigma);
        const double scale_v = p.sigma * p.sigma / (2.0 * p.kappa);
        for (std::size_t i = 0; i < N_; ++i)
            pv[i] = dist::gamma_interval(grid_.v.edges[i], grid_.v.edges[i + 1], shape_v, scale_v);

        std::vector<double> pl(M_, 0.0);
        if (intensity_ && p.xi > 0.0 && p.omega > 0.0) {
            const double shape_l = 2.0 * p.chi * p.omega / (p.xi * p.xi);
            const double scale_l = p.xi * p.xi / (2.0 * p.chi);
            for (std::size_t l = 0; l < M_; ++l)
                pl[l] = dist::gamma_interval(grid_.lambda.edges[l], grid_.lambda.edges[l + 1], shape_l,
                                             scale_l);
        } else {
            pl[cell_of(grid_.lambda.edges, p.omega)] = 1.0;
        }

        PosteriorGrid u;
        u.N = N_;
        u.M = M_;
        u.mass.resize(N_ * M_);
        for (std::size_t i = 0; i < N_; ++i)
            for (std::size_t l = 0; l < M_; ++l) u.mass[i * M_ + l] = pv[i] * pl[l];
        const double total = pairwise_sum(u.mass);
        if (!(total > 0.0)) throw NumericalError("initial posterior has no mass on the grid");
        for (double& x : u.mass) x /= total;
        return u;
    }

    /// One prediction-update step. Throws ZeroLikelihoodError on a zero or
    /// non-finite contribution.
    [[nodiscard]] StepResult step(const PosteriorGrid& prev, double y) const {
        check_posterior(prev);
        StepResult r;
        r.posterior.N = N_;
        r.posterior.M = M_;
        r.posterior.t = prev.t + 1;
        r.posterior.mass.resize(N_ * M_);
        Stats s;
        r.log_contrib = kernel<true>(prev.mass, y, prev.t + 1, r.posterior.mass, &s);
        r.jump_prob = s.jump_prob;
        r.jump_return = s.jump_return;
        r.jump_variance = s.jump_variance;
        return r;
    }

    [[nodiscard]] FilterOutput run(std::span<const double> y) const {
        if (y.empty()) throw DomainError("filter needs a nonempty series");
        const std::size_t T = y.size();
        FilterOutput out;
        out.loglik_contribs.resize(T);
        out.filtered_v.resize(T);
        out.filtered_lambda.resize(T);
        out.filtered_jump_prob.resize(T);
        out.filtered_jump_return.resize(T);
        out.filtered_jump_variance.resize(T);

        PosteriorGrid u = initial_posterior();
        std::vector<double> next(N_ * M_);
        std::vector<double> scratch(N_ * M_);
        for (std::size_t t = 0; t < T; ++t) {
            Stats s;
            out.loglik_contribs[t] = kernel<true>(u.mass, y[t], t + 1, next, &s);
            u.mass.swap(next);
            u.t = t + 1;
            for (std::size_t k = 0; k < N_ * M_; ++k) scratch[k] = u.mass[k] * grid_.v.nodes[k / M_];
            out.filtered_v[t] = pairwise_sum(scratch);
            for (std::size_t k = 0; k < N_ * M_; ++k)
                scratch[k] = u.mass[k] * grid_.lambda.nodes[k % M_];
            out.filtered_lambda[t] = pairwise_sum(scratch);
            out.filtered_jump_prob[t] = std::clamp(s.jump_prob, 0.0, 1.0);
            out.filtered_jump_return[t] = s.jump_return;
            out.filtered_jump_variance[t] = s.jump_variance;
        }
        out.total_loglik = pairwise_sum(out.loglik_contribs);
        return out;
    }

    /// Per-step log contributions only.
    [[nodiscard]] std::vector<double> log_contributions(std::span<const double> y) const {
        if (y.empty()) throw DomainError("filter needs a nonempty series");
        std::vector<double> contribs(y.size());
        std::vector<double> u = initial_posterior().mass;
        std::vector<double> next(N_ * M_);
        for (std::size_t t = 0; t < y.size(); ++t) {
            contribs[t] = kernel<false>(u, y[t], t + 1, next, nullptr);
            u.swap(next);
        }
        return contribs;
    }

    [[nodiscard]] double log_likelihood(std::span<const double> y) const {
        const std::vector<double> c = log_contributions(y);
        return pairwise_sum(c);
    }

private:
    struct Stats {
        double jump_prob = 0.0;
        double jump_return = 0.0;
        double jump_variance = 0.0;
    };

    struct Band {
        std::size_t lo = 0;
        std::size_t hi = 0;      // exclusive
        std::size_t offset = 0;  // into the packed value array
    };

    static std::size_t cell_of(const std::vector<double>& edges, double x) {
        // edges[0] = 0, edges.back() = inf
        const auto it = std::upper_bound(edges.begin(), edges.end(), std::max(x, 0.0));
        const auto idx = static_cast<std::size_t>(it - edges.begin());
        return std::min(idx == 0 ? 0 : idx - 1, edges.size() - 2);
    }

    /// Cells touched by N(mean, sd^2) within kBandSigmas sd.
    static std::pair<std::size_t, std::size_t> band_of(const std::vector<double>& edges, double mean,
                                                       double sd) {
        const std::size_t cells = edges.size() - 1;
        if (sd <= 0.0) {
            if (mean < 0.0) return {0, 0};
            const std::size_t c = cell_of(edges, mean);
            return {c, c + 1};
        }
        const double lo = mean - kBandSigmas * sd;
        const double hi = mean + kBandSigmas * sd;
        if (hi <= 0.0) return {0, 0};
        std::size_t a = cell_of(edges, lo);
        std::size_t b = cell_of(edges, hi) + 1;
        return {a, std::min(b, cells)};
    }

    void check_posterior(const PosteriorGrid& u) const {
        if (u.N != N_ || u.M != M_ || u.mass.size() != N_ * M_)
            throw DomainError("posterior does not match the grid");
    }

    void precompute() {
        const ParamValues& p = params_.values();
        const ModelVariant variant = params_.variant();
        const double h = p.h;
        N_ = grid_.v.size();
        M_ = grid_.lambda.size();
        intensity_ = has_stochastic_intensity(variant);
        intensity_shock_ = intensity_ && p.xi > 0.0;
        R_ = has_return_jumps(variant) ? spec_.R : 0;
        var_jumps_ = has_variance_jumps(variant) && p.nu > 0.0 && !grid_.jump.nodes.empty();
        if (var_jumps_) {
            jnodes_ = grid_.jump.nodes;
        } else {
            jnodes_ = {0.0};
        }
        K_ = jnodes_.size();
        c_rho_ = p.rho_v / p.sigma;
        jcoef_ = p.rho_z - c_rho_;
        const double abar = compensator(params_);
        const double resid =
            1.0 - p.rho_v * p.rho_v - (intensity_shock_ ? p.rho_lambda * p.rho_lambda : 0.0);
        const std::size_t R1 = R_ + 1;

        // Jump-size probabilities Qj(k | n) for n >= 1.
        qj_.assign(R_ * K_, 0.0);
        for (std::size_t n = 1; n <= R_; ++n)
            for (std::size_t k = 0; k < K_; ++k)
                qj_[(n - 1) * K_ + k] =
                    var_jumps_ ? dist::gamma_interval(grid_.jump.edges[k], grid_.jump.edges[k + 1],
                                                      static_cast<double>(n), p.nu)
                               : 1.0;

        // Variance transitions, one slot per jump value (slot 0: no jump).
        slots_ = var_jumps_ ? K_ + 1 : 1;
        const auto& ve = grid_.v.edges;
        vband_.assign(slots_ * N_, Band{});
        qv_.clear();
        for (std::size_t s = 0; s < slots_; ++s) {
            const double j = s == 0 ? 0.0 : jnodes_[s - 1];
            for (std::size_t b = 0; b < N_; ++b) {
                const double vb = grid_.v.nodes[b];
                const double mean = vb + p.kappa * (p.theta - vb) * h + j;
                const double sd = p.sigma * std::sqrt(vb * h);
                auto [lo, hi] = band_of(ve, mean, sd);
                Band& band = vband_[s * N_ + b];
                band.lo = lo;
                band.hi = hi;
                band.offset = qv_.size();
                for (std::size_t a = lo; a < hi; ++a)
                    qv_.push_back(dist::normal_interval(ve[a], ve[a + 1], mean, sd));
            }
        }
        // For every output node a, the range of inputs b that can reach it.
        benv_lo_.assign(N_, N_);
        benv_hi_.assign(N_, 0);
        for (std::size_t s = 0; s < slots_; ++s)
            for (std::size_t b = 0; b < N_; ++b) {
                const Band& band = vband_[s * N_ + b];
                for (std::size_t a = band.lo; a < band.hi; ++a) {
                    benv_lo_[a] = std::min(benv_lo_[a], b);
                    benv_hi_[a] = std::max(benv_hi_[a], b + 1);
                }
            }

        // Intensity transitions Ql(c | d), dense M x M with per-c envelopes.
        const auto& le = grid_.lambda.edges;
        ql_.assign(M_ * M_, 0.0);
        eps_l_.assign(M_ * M_, 0.0);
        denv_lo_.assign(M_, M_);
        denv_hi_.assign(M_, 0);
        for (std::size_t d = 0; d < M_; ++d) {
            const double ld = grid_.lambda.nodes[d];
            if (!intensity_) {
                ql_[d * M_ + d] = 1.0;
                denv_lo_[d] = d;
                denv_hi_[d] = d + 1;
                continue;
            }
            const double mean = ld + p.chi * (p.omega - ld) * h;
            const double sd = p.xi * std::sqrt(ld * h);
            auto [lo, hi] = band_of(le, mean, sd);
            for (std::size_t c = lo; c < hi; ++c) {
                ql_[d * M_ + c] = dist::normal_interval(le[c], le[c + 1], mean, sd);
                if (sd > 0.0) eps_l_[d * M_ + c] = (grid_.lambda.nodes[c] - mean) / sd;
                denv_lo_[c] = std::min(denv_lo_[c], d);
                denv_hi_[c] = std::max(denv_hi_[c], d + 1);
            }
        }

        // Jump-count probabilities P(n | lambda_d).
        pn_.assign(M_ * R1, 0.0);
        for (std::size_t d = 0; d < M_; ++d)
            for (std::size_t n = 0; n <= R_; ++n)
                pn_[d * R1 + n] =
                    dist::poisson_pmf(static_cast<unsigned>(n), grid_.lambda.nodes[d] * h);

        // Measurement moments that depend only on (b, d, n).
        gl_.assign(N_, 0.0);
        inv2s2_.assign(N_ * R1, 0.0);
        gain_.assign(N_ * R1, 0.0);
        normfac_.assign(N_ * R1, 0.0);
        std::vector<double> lognorm(N_ * R1);
        for (std::size_t b = 0; b < N_; ++b) {
            const double vb = grid_.v.nodes[b];
            if (intensity_shock_) gl_[b] = p.rho_lambda * std::sqrt(vb * h);
            for (std::size_t n = 0; n <= R_; ++n) {
                const double nd = static_cast<double>(n);
                const double s2 = vb * resid * h + nd * p.delta * p.delta;
                inv2s2_[b * R1 + n] = 0.5 / s2;
                gain_[b * R1 + n] = nd * p.delta * p.delta / s2;
                lognorm[b * R1 + n] = -dist::kLogSqrt2Pi - 0.5 * std::log(s2);
            }
        }
        shift_ = *std::max_element(lognorm.begin(), lognorm.end());
        for (std::size_t i = 0; i < lognorm.size(); ++i) normfac_[i] = std::exp(lognorm[i] - shift_);

        base_.assign(N_ * M_ * R1, 0.0);
        for (std::size_t b = 0; b < N_; ++b) {
            const double vb = grid_.v.nodes[b];
            const double mb = vb + p.kappa * (p.theta - vb) * h;
            for (std::size_t d = 0; d < M_; ++d) {
                const double ld = grid_.lambda.nodes[d];
                for (std::size_t n = 0; n <= R_; ++n)
                    base_[(b * M_ + d) * R1 + n] = (p.mu - 0.5 * vb - abar * ld) * h +
                                                   p.alpha * static_cast<double>(n) - c_rho_ * mb;
            }
        }
        alpha_ = p.alpha;
        rho_z_ = p.rho_z;
    }

    /// Computes next = posterior after observing y and returns log f(y | past).
    template <bool Collect>
    double kernel(const std::vector<double>& u, double y, std::size_t t, std::vector<double>& next,
                  Stats* stats) const {
        const std::size_t R1 = R_ + 1;
        const std::size_t NM = N_ * M_;

        // w(b, d, n) = P(n | lambda_d) u(b, d) exp(lognorm(b, n) - shift)
        std::vector<double> w(NM * R1);
        for (std::size_t b = 0; b < N_; ++b)
            for (std::size_t d = 0; d < M_; ++d)
                for (std::size_t n = 0; n <= R_; ++n)
                    w[(b * M_ + d) * R1 + n] =
                        pn_[d * R1 + n] * u[b * M_ + d] * normfac_[b * R1 + n];

        std::vector<double> jp_mass, jy_mass, jv_mass;
        if constexpr (Collect) {
            jp_mass.assign(NM, 0.0);
            jy_mass.assign(NM, 0.0);
            jv_mass.assign(NM, 0.0);
        }

#pragma omp parallel
        {
            std::vector<double> buf;
            std::vector<double> bjp, bjy, bjv;
            buf.reserve(NM);
            if constexpr (Collect) {
                bjp.reserve(NM);
                bjy.reserve(NM);
                bjv.reserve(NM);
            }
#pragma omp for schedule(static)
            for (std::int64_t oi = 0; oi < static_cast<std::int64_t>(NM); ++oi) {
                const auto o = static_cast<std::size_t>(oi);
                const std::size_t a = o / M_;
                const std::size_t c = o % M_;
                const double ya = y - c_rho_ * grid_.v.nodes[a];
                buf.clear();
                if constexpr (Collect) {
                    bjp.clear();
                    bjy.clear();
                    bjv.clear();
                }
                for (std::size_t d = denv_lo_[c]; d < denv_hi_[c]; ++d) {
                    const double ql = ql_[d * M_ + c];
                    if (ql == 0.0) continue;
                    const double el = eps_l_[d * M_ + c];
                    for (std::size_t b = benv_lo_[a]; b < benv_hi_[a]; ++b) {
                        const std::size_t bd = (b * M_ + d) * R1;
                        const double yb = ya - gl_[b] * el;
                        double acc = 0.0;
                        double ajp = 0.0, ajy = 0.0, ajv = 0.0;

                        // n = 0: no jump, j_v = 0 exactly.
                        {
                            const Band& band = vband_[b];
                            if (a >= band.lo && a < band.hi && w[bd] != 0.0) {
                                const double q = qv_[band.offset + (a - band.lo)];
                                const double z = yb - base_[bd];
                                acc += w[bd] * q * std::exp(-z * z * inv2s2_[b * R1]);
                            }
                        }
                        for (std::size_t n = 1; n <= R_; ++n) {
                            const double wn = w[bd + n];
                            if (wn == 0.0) continue;
                            const double inv = inv2s2_[b * R1 + n];
                            const double zb = yb - base_[bd + n];
                            const double* qj = &qj_[(n - 1) * K_];
                            for (std::size_t k = 0; k < K_; ++k) {
                                const std::size_t s = var_jumps_ ? k + 1 : 0;
                                const Band& band = vband_[s * N_ + b];
                                if (a < band.lo || a >= band.hi) continue;
                                const double j = jnodes_[k];
                                const double z = zb - jcoef_ * j;
                                const double term = wn * qj[k] * qv_[band.offset + (a - band.lo)] *
                                                    std::exp(-z * z * inv);
                                acc += term;
                                if constexpr (Collect) {
                                    ajp += term;
                                    ajv += term * j;
                                    ajy += term * (alpha_ * static_cast<double>(n) + rho_z_ * j +
                                                   gain_[b * R1 + n] * z);
                                }
                            }
                        }
                        buf.push_back(acc * ql);
                        if constexpr (Collect) {
                            bjp.push_back(ajp * ql);
                            bjy.push_back(ajy * ql);
                            bjv.push_back(ajv * ql);
                        }
                    }
                }
                next[o] = pairwise_sum(buf);
                if constexpr (Collect) {
                    jp_mass[o] = pairwise_sum(bjp);
                    jy_mass[o] = pairwise_sum(bjy);
                    jv_mass[o] = pairwise_sum(bjv);
                }
            }
        }

        const double total = pairwise_sum(next);
        if (!(total > 0.0) || !std::isfinite(total)) throw ZeroLikelihoodError(t, y);
        for (double& x : next) x /= total;
        if constexpr (Collect) {
            stats->jump_prob = pairwise_sum(jp_mass) / total;
            stats->jump_return = pairwise_sum(jy_mass) / total;
            stats->jump_variance = pairwise_sum(jv_mass) / total;
        }
        return shift_ + std::log(total);
    }

    ModelParams params_;
    GridSpec spec_;
    StateGrid grid_;

    std::size_t N_ = 0, M_ = 0, K_ = 0, R_ = 0, slots_ = 0;
    bool intensity_ = false;
    bool intensity_shock_ = false;
    bool var_jumps_ = false;
    double c_rho_ = 0.0;
    double jcoef_ = 0.0;
    double alpha_ = 0.0;
    double rho_z_ = 0.0;
    double shift_ = 0.0;

    std::vector<double> jnodes_;
    std::vector<double> qj_;
    std::vector<Band> vband_;
    std::vector<double> qv_;
    std::vector<std::size_t> benv_lo_, benv_hi_;
    std::vector<double> ql_, eps_l_;
    std::vector<std::size_t> denv_lo_, denv_hi_;
    std::vector<double> pn_;
    std::vector<double> gl_, inv2s2_, gain_, normfac_;
    std::vector<double> base_;
};

/// Runs the filter over y with a fresh grid for `params`.
[[nodiscard]] inline FilterOutput run_filter(const ModelParams& params, const GridSpec& spec,
                                             std::span<const double> y) {
    return DnfFilter(params, spec).run(y);
}

[[nodiscard]] inline double dnf_log_likelihood(const ModelParams& params, const GridSpec& spec,
                                               std::span<const double> y) {
    return DnfFilter(params, spec).log_likelihood(y);
}

}  // namespace svdnf
