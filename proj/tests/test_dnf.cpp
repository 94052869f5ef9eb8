// SPDX-License-Identifier: MIT
#include "svdnf/dnf.hpp"
#include "svdnf/parallel.hpp"
#include "svdnf/simulate.hpp"
#include "svdnf/summation.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace svdnf;

namespace {

ParamValues table_svcjsi() {
    ParamValues p;
    p.mu = 0.035; p.kappa = 4.316; p.theta = 0.034; p.sigma = 0.452; p.rho_v = -0.666;
    p.chi = 2.706; p.omega = 3.232; p.xi = 6.947; p.rho_lambda = -0.411;
    p.alpha = -0.014; p.delta = 0.005; p.rho_z = -1.381; p.nu = 0.011;
    return p;
}

// Direct evaluation of sum_b u_b sum_n P(n) sum_k Q(k|n) sum_a Qv(a|b,j_k) r(y | ...),
// using only model-core functions.
double hand_contribution(const ModelParams& mp, const StateGrid& g, const std::vector<double>& u,
                         double y, std::size_t R) {
    const TransitionLaws q(mp);
    const ParamValues& p = mp.values();
    const bool vj = has_variance_jumps(mp.variant());
    double f = 0.0;
    for (std::size_t b = 0; b < g.v.size(); ++b) {
        for (unsigned n = 0; n <= R; ++n) {
            const double pn = q.poisson_pmf(n, p.omega);
            const std::size_t K = (n == 0 || !vj) ? 1 : g.jump.size();
            for (std::size_t k = 0; k < K; ++k) {
                const double j = (n == 0 || !vj) ? 0.0 : g.jump.nodes[k];
                const double pk = (n == 0 || !vj) ? 1.0 : q.jump_interval(g.jump.edges[k], g.jump.edges[k + 1], n);
                for (std::size_t a = 0; a < g.v.size(); ++a) {
                    const double qv = q.variance_interval(g.v.edges[a], g.v.edges[a + 1], g.v.nodes[b], j);
                    MeasurementPoint x;
                    x.v_prev = g.v.nodes[b];
                    x.v_t = g.v.nodes[a];
                    x.lambda_prev = x.lambda_t = p.omega;
                    x.jumps = n;
                    x.jump_variance = j;
                    f += u[b] * pn * pk * qv * measurement_density(y, mp, x);
                }
            }
        }
    }
    return f;
}

}  // namespace

TEST(Dnf, HandComputedStepSv) {
    ParamValues p = table_svcjsi();
    p.sigma = 1.2;  // wide transitions so every cell gets mass
    const ModelParams mp(ModelVariant::SV, p);
    GridSpec spec = GridSpec::for_variant(ModelVariant::SV, 3);
    const DnfFilter f(mp, spec);
    PosteriorGrid u;
    u.N = 3;
    u.M = 1;
    u.mass = {0.2, 0.5, 0.3};
    for (double y : {0.0, -0.02, 0.015}) {
        const StepResult r = f.step(u, y);
        EXPECT_NEAR(r.log_contrib, std::log(hand_contribution(mp, f.grid(), u.mass, y, 0)), 1e-12);
        EXPECT_NEAR(pairwise_sum(r.posterior.mass), 1.0, 1e-14);
        EXPECT_EQ(r.posterior.t, 1u);
    }
}

TEST(Dnf, HandComputedStepSvcj) {
    ParamValues p = table_svcjsi();
    p.sigma = 1.2;
    p.nu = 0.05;
    p.delta = 0.02;
    p.omega = 20.0;
    const ModelParams mp(ModelVariant::SVCJ, p);
    GridSpec spec = GridSpec::for_variant(ModelVariant::SVCJ, 4);
    spec.K = 3;
    const DnfFilter f(mp, spec);
    PosteriorGrid u;
    u.N = 4;
    u.M = 1;
    u.mass = {0.1, 0.4, 0.3, 0.2};
    for (double y : {0.0, -0.05, 0.03}) {
        const StepResult r = f.step(u, y);
        EXPECT_NEAR(r.log_contrib, std::log(hand_contribution(mp, f.grid(), u.mass, y, spec.R)), 1e-11);
        EXPECT_GE(r.jump_prob, 0.0);
        EXPECT_LE(r.jump_prob, 1.0);
        EXPECT_GE(r.jump_variance, 0.0);
    }
}

TEST(Dnf, PosteriorStaysNormalized) {
    const ModelParams mp(ModelVariant::SVCJSI, table_svcjsi());
    const SimulatedPath path = simulate(mp, 60, 21);
    const DnfFilter f(mp, GridSpec::for_variant(ModelVariant::SVCJSI, 12));
    PosteriorGrid u = f.initial_posterior();
    EXPECT_NEAR(pairwise_sum(u.mass), 1.0, 1e-14);
    for (double y : path.returns) {
        StepResult r = f.step(u, y);
        EXPECT_NEAR(pairwise_sum(r.posterior.mass), 1.0, 1e-12);
        for (double m : r.posterior.mass) EXPECT_GE(m, 0.0);
        u = std::move(r.posterior);
    }
}

TEST(Dnf, RunIsConsistentWithSteps) {
    const ModelParams mp(ModelVariant::SVCJ, table_svcjsi());
    const SimulatedPath path = simulate(mp, 100, 22);
    const DnfFilter f(mp, GridSpec::for_variant(ModelVariant::SVCJ, 20));
    const FilterOutput out = f.run(path.returns);
    ASSERT_EQ(out.loglik_contribs.size(), 100u);
    EXPECT_DOUBLE_EQ(out.total_loglik, pairwise_sum(out.loglik_contribs));
    EXPECT_EQ(f.log_contributions(path.returns), out.loglik_contribs);
    EXPECT_EQ(f.log_likelihood(path.returns), out.total_loglik);
    for (std::size_t t = 0; t < 100; ++t) {
        EXPECT_GT(out.filtered_v[t], 0.0);
        EXPECT_GE(out.filtered_jump_prob[t], 0.0);
        EXPECT_LE(out.filtered_jump_prob[t], 1.0);
        EXPECT_GE(out.filtered_jump_variance[t], 0.0);
        EXPECT_NEAR(out.filtered_lambda[t], table_svcjsi().omega, 1e-12 * table_svcjsi().omega);
    }
}

TEST(Dnf, DeterministicAcrossRunsAndThreads) {
    const ModelParams mp(ModelVariant::SVCJSI, table_svcjsi());
    const SimulatedPath path = simulate(mp, 40, 23);
    const GridSpec spec = GridSpec::for_variant(ModelVariant::SVCJSI, 10);
    const int saved = thread_count();
    set_thread_count(1);
    const std::vector<double> a = DnfFilter(mp, spec).log_contributions(path.returns);
    const std::vector<double> b = DnfFilter(mp, spec).log_contributions(path.returns);
    set_thread_count(4);
    const std::vector<double> c = DnfFilter(mp, spec).log_contributions(path.returns);
    set_thread_count(saved);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}

TEST(Dnf, NestedSvcjsiCollapsesToSvcj) {
    ParamValues p = table_svcjsi();
    p.chi = 1.0;
    p.xi = 0.0;
    p.rho_lambda = 0.0;
    const SimulatedPath path = simulate(ModelParams(ModelVariant::SVCJ, p), 80, 24);
    GridSpec spec = GridSpec::for_variant(ModelVariant::SVCJ, 25);
    const double svcj = dnf_log_likelihood(ModelParams(ModelVariant::SVCJ, p), spec, path.returns);
    spec.M = 1;
    const double svcjsi = dnf_log_likelihood(ModelParams(ModelVariant::SVCJSI, p), spec, path.returns);
    EXPECT_NEAR(svcjsi, svcj, 1e-8);
}

TEST(Dnf, MatchesOracleOnShortSeries) {
    ParamValues p = table_svcjsi();
    p.mu = 0.042; p.kappa = 5.923; p.theta = 0.031; p.sigma = 0.514; p.rho_v = -0.696;
    const ModelParams mp(ModelVariant::SV, p);
    const SimulatedPath path = simulate(mp, 10, 25, InitialState::stationary());
    const double dnf = dnf_log_likelihood(mp, GridSpec::for_variant(ModelVariant::SV, 200), path.returns);
    const OracleEstimate o = mc_likelihood_oracle(mp, path.returns, 200000, 26);
    EXPECT_NEAR(dnf, o.log_likelihood, 3.0 * o.standard_error);
}

TEST(Dnf, ErrorShrinksWithGrid) {
    ParamValues p = table_svcjsi();
    const ModelParams mp(ModelVariant::SV, p);
    const SimulatedPath path = simulate(mp, 500, 27, InitialState::stationary());
    const double ref = dnf_log_likelihood(mp, GridSpec::for_variant(ModelVariant::SV, 400), path.returns);
    const double e10 = std::abs(dnf_log_likelihood(mp, GridSpec::for_variant(ModelVariant::SV, 10), path.returns) - ref);
    const double e40 = std::abs(dnf_log_likelihood(mp, GridSpec::for_variant(ModelVariant::SV, 40), path.returns) - ref);
    const double e100 = std::abs(dnf_log_likelihood(mp, GridSpec::for_variant(ModelVariant::SV, 100), path.returns) - ref);
    EXPECT_LT(e40, e10);
    EXPECT_LT(e100, e40);
}

TEST(Dnf, ZeroLikelihoodIsReported) {
    const ModelParams mp(ModelVariant::SV, table_svcjsi());
    const DnfFilter f(mp, GridSpec::for_variant(ModelVariant::SV, 20));
    const std::vector<double> y = {0.001, -0.002, 50.0, 0.0};
    try {
        (void)f.run(y);
        FAIL() << "expected ZeroLikelihoodError";
    } catch (const ZeroLikelihoodError& e) {
        EXPECT_EQ(e.t(), 3u);
        EXPECT_EQ(e.y(), 50.0);
    }
}

TEST(Dnf, RejectsMismatchedPosteriorAndEmptySeries) {
    const ModelParams mp(ModelVariant::SV, table_svcjsi());
    const DnfFilter f(mp, GridSpec::for_variant(ModelVariant::SV, 20));
    PosteriorGrid u;
    u.N = 3;
    u.M = 1;
    u.mass = {1, 0, 0};
    EXPECT_THROW((void)f.step(u, 0.0), DomainError);
    EXPECT_THROW((void)f.run(std::vector<double>{}), DomainError);
}

TEST(Dnf, DegenerateIntensityUsesPointMass) {
    ParamValues p = table_svcjsi();
    p.xi = 0.0;
    const DnfFilter f(ModelParams(ModelVariant::SVCJSI, p), GridSpec::for_variant(ModelVariant::SVCJSI, 6));
    const PosteriorGrid u = f.initial_posterior();
    double row_mass = 0.0;
    std::size_t nonzero_cols = 0;
    for (std::size_t l = 0; l < u.M; ++l) {
        double col = 0.0;
        for (std::size_t i = 0; i < u.N; ++i) col += u(i, l);
        if (col > 0.0) ++nonzero_cols;
        row_mass += col;
    }
    EXPECT_EQ(nonzero_cols, 1u);
    EXPECT_NEAR(row_mass, 1.0, 1e-14);
}
