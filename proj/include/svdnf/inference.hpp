// SPDX-License-Identifier: MIT
//
// Maximum likelihood over the grid filter: Nelder-Mead simplex (GSL
// nmsimplex2) in unconstrained coordinates, then outer-product-of-gradient
// standard errors from per-observation scores.
#pragma once

#include "svdnf/dnf.hpp"
#include "svdnf/errors.hpp"
#include "svdnf/model.hpp"
#include "svdnf/summation.hpp"
#include "svdnf/transforms.hpp"

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace svdnf {

inline constexpr double kInvalidPenalty = 1e12;

struct Convergence {
    bool converged = false;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    std::size_t restarts = 0;
    double simplex_size = 0.0;
    double start_loglik = 0.0;
};

struct EstimationResult {
    ModelParams params_hat;
    double loglik = 0.0;
    /// NaN where not applicable (inactive) or not computable.
    std::array<double, kParamCount> std_errors{};
    std::array<bool, kParamCount> se_computable{};
    Convergence convergence;
    GridSpec spec;
};

struct EstimateOptions {
    std::size_t max_iterations = 3000;
    double tolerance = 1e-5;  // simplex characteristic size in transformed space
    std::size_t restarts = 1;
    bool compute_std_errors = true;
};

/// Start values of typical daily equity-index magnitude.
[[nodiscard]] inline ParamValues default_start(ModelVariant v, double h = 1.0 / 252.0) {
    ParamValues p;
    p.h = h;
    switch (v) {
        case ModelVariant::SV:
            p.mu = 0.041; p.kappa = 5.923; p.theta = 0.031; p.sigma = 0.514; p.rho_v = -0.692;
            break;
        case ModelVariant::SVYJ:
            p.mu = 0.035; p.kappa = 6.357; p.theta = 0.027; p.sigma = 0.488; p.rho_v = -0.708;
            p.omega = 2.487; p.alpha = -0.014; p.delta = 0.008;
            break;
        case ModelVariant::SVCJ:
            p.mu = 0.038; p.kappa = 3.689; p.theta = 0.032; p.sigma = 0.446; p.rho_v = -0.745;
            p.omega = 5.125; p.alpha = -0.007; p.delta = 0.003; p.nu = 0.004; p.rho_z = -1.809;
            break;
        case ModelVariant::SVCJSI:
            p.mu = 0.035; p.kappa = 4.316; p.theta = 0.034; p.sigma = 0.452; p.rho_v = -0.666;
            p.chi = 2.706; p.omega = 3.232; p.xi = 6.947; p.rho_lambda = -0.411;
            p.alpha = -0.014; p.delta = 0.005; p.nu = 0.011; p.rho_z = -1.381;
            break;
    }
    return restrict_to(v, p);
}

/// Default start with (theta, mu) replaced by sample-moment values.
[[nodiscard]] inline ParamValues moment_start(ModelVariant v, std::span<const double> y,
                                              double h = 1.0 / 252.0) {
    ParamValues p = default_start(v, h);
    if (y.size() < 2) return p;
    const double n = static_cast<double>(y.size());
    const double mean = pairwise_sum(y) / n;
    std::vector<double> dev(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) dev[i] = (y[i] - mean) * (y[i] - mean);
    const double var = pairwise_sum(dev) / (n - 1.0);
    if (var > 0.0) {
        p.theta = var / h;
        p.mu = mean / h + 0.5 * p.theta;
    }
    return p;
}

/// Negative log-likelihood as a function of unconstrained coordinates.
class Objective {
public:
    Objective(ModelVariant variant, std::span<const double> y, const GridSpec& spec, double h)
        : transform_(variant), y_(y), spec_(spec) {
        base_ = restrict_to(variant, ParamValues{});
        base_.h = h;
    }

    [[nodiscard]] const ParamTransform& transform() const noexcept { return transform_; }

    [[nodiscard]] std::optional<ModelParams> params(const std::vector<double>& z) const {
        try {
            return ModelParams(transform_.variant(), transform_.from_unconstrained(z, base_));
        } catch (const DomainError&) {
            return std::nullopt;
        }
    }

    /// -loglik, or kInvalidPenalty outside the feasible region.
    double operator()(const std::vector<double>& z) {
        ++evaluations_;
        for (double x : z)
            if (!std::isfinite(x)) return kInvalidPenalty;
        const auto p = params(z);
        if (!p) return kInvalidPenalty;
        try {
            const double ll = dnf_log_likelihood(*p, spec_, y_);
            return std::isfinite(ll) ? -ll : kInvalidPenalty;
        } catch (const DomainError&) {
            return kInvalidPenalty;
        } catch (const NumericalError&) {
            return kInvalidPenalty;
        }
    }

    [[nodiscard]] std::size_t evaluations() const noexcept { return evaluations_; }

private:
    ParamTransform transform_;
    std::span<const double> y_;
    GridSpec spec_;
    ParamValues base_;
    std::size_t evaluations_ = 0;
};

namespace detail {

inline double gsl_objective(const gsl_vector* x, void* data) {
    auto* obj = static_cast<Objective*>(data);
    std::vector<double> z(x->size);
    for (std::size_t i = 0; i < x->size; ++i) z[i] = gsl_vector_get(x, i);
    return (*obj)(z);
}

/// Initial simplex step per unconstrained coordinate.
inline double initial_step(ModelVariant v, Param p) {
    switch (transform_kind(v, p)) {
        case TransformKind::Log: return 0.3;
        case TransformKind::Atanh:
        case TransformKind::Polar: return 0.2;
        case TransformKind::Identity: break;
    }
    switch (p) {
        case Param::mu: return 0.05;
        case Param::alpha: return 0.01;
        case Param::rho_z: return 0.5;
        default: return 0.1;
    }
}

struct GslVector {
    gsl_vector* v;
    explicit GslVector(std::size_t n) : v(gsl_vector_alloc(n)) {}
    ~GslVector() { gsl_vector_free(v); }
    GslVector(const GslVector&) = delete;
    GslVector& operator=(const GslVector&) = delete;
};

struct SimplexRun {
    std::vector<double> z;
    double fval = 0.0;
    double size = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

inline SimplexRun run_simplex(Objective& obj, const std::vector<double>& z0,
                              const EstimateOptions& opt) {
    const std::size_t n = z0.size();
    const auto& active = obj.transform().active();
    GslVector x(n), step(n);
    for (std::size_t i = 0; i < n; ++i) {
        gsl_vector_set(x.v, i, z0[i]);
        gsl_vector_set(step.v, i, initial_step(obj.transform().variant(), active[i]));
    }
    gsl_multimin_function f{&gsl_objective, n, &obj};
    std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n),
        &gsl_multimin_fminimizer_free);
    gsl_multimin_fminimizer_set(s.get(), &f, x.v, step.v);

    SimplexRun run;
    int status = GSL_CONTINUE;
    while (status == GSL_CONTINUE && run.iterations < opt.max_iterations) {
        ++run.iterations;
        if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
        run.size = gsl_multimin_fminimizer_size(s.get());
        status = gsl_multimin_test_size(run.size, opt.tolerance);
    }
    run.converged = status == GSL_SUCCESS;
    run.fval = s->fval;
    run.z.resize(n);
    for (std::size_t i = 0; i < n; ++i) run.z[i] = gsl_vector_get(s->x, i);
    return run;
}

}  // namespace detail

struct StdErrorResult {
    std::array<double, kParamCount> se{};
    std::array<bool, kParamCount> computable{};
};

/// OPG standard errors. Scores are central differences of the per-step log
/// contributions with relative step 1e-5 in unconstrained coordinates; the
/// covariance is mapped back through the Jacobian of the inverse transform.
[[nodiscard]] inline StdErrorResult robust_standard_errors(const ModelParams& params_hat,
                                                           std::span<const double> y,
                                                           const GridSpec& spec,
                                                           double rel_step = 1e-5) {
    StdErrorResult out;
    out.se.fill(std::numeric_limits<double>::quiet_NaN());
    out.computable.fill(false);

    const ParamTransform tr(params_hat.variant());
    const std::size_t k = tr.dim();
    const std::size_t T = y.size();
    const std::vector<double> z = tr.to_unconstrained(params_hat.values());
    auto at = [&](const std::vector<double>& zz) {
        return ModelParams(params_hat.variant(), tr.from_unconstrained(zz, params_hat.values()));
    };

    Eigen::MatrixXd scores(T, k);
    Eigen::MatrixXd jac(k, k);  // d theta_i / d z_j over active parameters
    try {
        for (std::size_t j = 0; j < k; ++j) {
            const double step = rel_step * std::max(std::abs(z[j]), 1.0);
            std::vector<double> zp = z, zm = z;
            zp[j] += step;
            zm[j] -= step;
            const ModelParams pp = at(zp);
            const ModelParams pm = at(zm);
            const auto cp = DnfFilter(pp, spec).log_contributions(y);
            const auto cm = DnfFilter(pm, spec).log_contributions(y);
            for (std::size_t t = 0; t < T; ++t) scores(t, j) = (cp[t] - cm[t]) / (2.0 * step);
            for (std::size_t i = 0; i < k; ++i)
                jac(i, j) = (pp[tr.active()[i]] - pm[tr.active()[i]]) / (2.0 * step);
        }
    } catch (const std::exception&) {
        return out;
    }

    const Eigen::MatrixXd G = scores.transpose() * scores;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    if (eig.info() != Eigen::Success) return out;
    const double max_ev = eig.eigenvalues().maxCoeff();
    if (!(max_ev > 0.0) || !(eig.eigenvalues().minCoeff() > 1e-12 * max_ev)) return out;
    const Eigen::MatrixXd cov_z = G.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd cov = jac * cov_z * jac.transpose();
    for (std::size_t i = 0; i < k; ++i) {
        const double var = cov(i, i);
        const auto idx = static_cast<std::size_t>(tr.active()[i]);
        if (var >= 0.0 && std::isfinite(var)) {
            out.se[idx] = std::sqrt(var);
            out.computable[idx] = true;
        }
    }
    return out;
}

/// Maximizes the grid-filter likelihood over the active parameters of `variant`.
[[nodiscard]] inline EstimationResult estimate(ModelVariant variant, std::span<const double> y,
                                               const GridSpec& spec,
                                               std::optional<ParamValues> start = std::nullopt,
                                               const EstimateOptions& opt = {}) {
    if (y.empty()) throw DomainError("estimate needs a nonempty series");
    gsl_set_error_handler_off();
    const ParamValues s0 = start ? restrict_to(variant, *start) : moment_start(variant, y);
    const ModelParams start_params(variant, s0);  // validates the start point
    spec.validate(variant);

    Objective obj(variant, y, spec, s0.h);
    std::vector<double> z = obj.transform().to_unconstrained(s0);
    const double f0 = obj(z);
    if (f0 >= kInvalidPenalty) throw NumericalError("likelihood is not finite at the start point");

    Convergence conv;
    conv.start_loglik = -f0;
    detail::SimplexRun run = detail::run_simplex(obj, z, opt);
    conv.iterations = run.iterations;
    for (std::size_t r = 0; r < opt.restarts; ++r) {
        detail::SimplexRun again = detail::run_simplex(obj, run.z, opt);
        conv.iterations += again.iterations;
        ++conv.restarts;
        if (again.fval <= run.fval) run = again;
        else run.converged = run.converged && again.converged;
    }
    conv.converged = run.converged;
    conv.simplex_size = run.size;
    conv.evaluations = obj.evaluations();

    // The start point is a valid candidate too.
    if (f0 < run.fval) {
        run.z = z;
        run.fval = f0;
    }

    EstimationResult res{*obj.params(run.z), -run.fval, {}, {}, conv, spec};
    res.std_errors.fill(std::numeric_limits<double>::quiet_NaN());
    res.se_computable.fill(false);
    if (opt.compute_std_errors) {
        const StdErrorResult se = robust_standard_errors(res.params_hat, y, spec);
        res.std_errors = se.se;
        res.se_computable = se.computable;
    }
    return res;
}

}  // namespace svdnf
