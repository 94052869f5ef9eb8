// SPDX-License-Identifier: MIT
//
// Model parameters, nested-variant restrictions and the closed-form laws of
// the Euler-discretized jump-diffusion:
//
//   y_t = (mu - v/2 - abar*lambda) h + sqrt(v h) eps_y + sum_i zy_i
//   v_t = v + kappa (theta - v) h + sigma sqrt(v h) eps_v + sum_i zv_i
//   l_t = l + chi (omega - l) h + xi sqrt(l h) eps_l
//
// with n_t ~ Poisson(l h), zv ~ Exp(nu), zy ~ N(alpha + rho_z zv, delta^2) and
// eps_y = sqrt(1 - rho_v^2 - rho_l^2) eps_perp + rho_v eps_v + rho_l eps_l.
#pragma once

#include "svdnf/distributions.hpp"
#include "svdnf/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace svdnf {

enum class ModelVariant { SV, SVYJ, SVCJ, SVCJSI };

[[nodiscard]] inline std::string_view to_string(ModelVariant v) noexcept {
    switch (v) {
        case ModelVariant::SV: return "sv";
        case ModelVariant::SVYJ: return "svyj";
        case ModelVariant::SVCJ: return "svcj";
        case ModelVariant::SVCJSI: return "svcjsi";
    }
    return "?";
}

[[nodiscard]] inline ModelVariant parse_variant(std::string_view s) {
    std::string lower(s);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "sv") return ModelVariant::SV;
    if (lower == "svyj") return ModelVariant::SVYJ;
    if (lower == "svcj") return ModelVariant::SVCJ;
    if (lower == "svcjsi") return ModelVariant::SVCJSI;
    throw DomainError("unknown model variant '" + std::string(s) + "'");
}

[[nodiscard]] constexpr bool has_return_jumps(ModelVariant v) noexcept {
    return v != ModelVariant::SV;
}
[[nodiscard]] constexpr bool has_variance_jumps(ModelVariant v) noexcept {
    return v == ModelVariant::SVCJ || v == ModelVariant::SVCJSI;
}
[[nodiscard]] constexpr bool has_stochastic_intensity(ModelVariant v) noexcept {
    return v == ModelVariant::SVCJSI;
}

enum class Param : std::size_t {
    mu, kappa, theta, sigma, rho_v, chi, omega, xi, rho_lambda, alpha, delta, rho_z, nu
};
inline constexpr std::size_t kParamCount = 13;

inline constexpr std::array<std::string_view, kParamCount> kParamNames = {
    "mu", "kappa", "theta", "sigma", "rho_v", "chi", "omega",
    "xi", "rho_lambda", "alpha", "delta", "rho_z", "nu"};

[[nodiscard]] inline std::string_view param_name(Param p) noexcept {
    return kParamNames[static_cast<std::size_t>(p)];
}

[[nodiscard]] inline Param parse_param(std::string_view name) {
    for (std::size_t i = 0; i < kParamCount; ++i)
        if (kParamNames[i] == name) return static_cast<Param>(i);
    throw DomainError("unknown parameter '" + std::string(name) + "'");
}

/// Raw 13-parameter vector plus the time step. No validation.
struct ParamValues {
    double mu = 0.0;
    double kappa = 0.0;
    double theta = 0.0;
    double sigma = 0.0;
    double rho_v = 0.0;
    double chi = 0.0;
    double omega = 0.0;
    double xi = 0.0;
    double rho_lambda = 0.0;
    double alpha = 0.0;
    double delta = 0.0;
    double rho_z = 0.0;
    double nu = 0.0;
    double h = 1.0 / 252.0;

    [[nodiscard]] double& operator[](Param p) noexcept {
        return (&mu)[static_cast<std::size_t>(p)];
    }
    [[nodiscard]] double operator[](Param p) const noexcept {
        return (&mu)[static_cast<std::size_t>(p)];
    }

    friend bool operator==(const ParamValues&, const ParamValues&) = default;
};

/// Parameters that are free under a variant, in canonical order.
[[nodiscard]] inline std::vector<Param> active_params(ModelVariant v) {
    using enum Param;
    switch (v) {
        case ModelVariant::SV: return {mu, kappa, theta, sigma, rho_v};
        case ModelVariant::SVYJ: return {mu, kappa, theta, sigma, rho_v, omega, alpha, delta};
        case ModelVariant::SVCJ:
            return {mu, kappa, theta, sigma, rho_v, omega, alpha, delta, rho_z, nu};
        case ModelVariant::SVCJSI:
            return {mu, kappa, theta, sigma, rho_v, chi, omega, xi, rho_lambda, alpha, delta, rho_z, nu};
    }
    return {};
}

[[nodiscard]] inline bool is_active(ModelVariant v, Param p) {
    for (Param q : active_params(v))
        if (q == p) return true;
    return false;
}

/// Forces the parameters a variant pins down to their restricted values.
[[nodiscard]] inline ParamValues restrict_to(ModelVariant variant, ParamValues p) noexcept {
    switch (variant) {
        case ModelVariant::SV:
            p.chi = p.omega = p.xi = p.rho_lambda = 0.0;
            p.alpha = p.delta = p.rho_z = p.nu = 0.0;
            break;
        case ModelVariant::SVYJ:
            p.chi = 1.0;
            p.xi = p.nu = p.rho_z = p.rho_lambda = 0.0;
            break;
        case ModelVariant::SVCJ:
            p.chi = 1.0;
            p.xi = p.rho_lambda = 0.0;
            break;
        case ModelVariant::SVCJSI:
            break;
    }
    return p;
}

/// Validated parameter set for one model variant. Inactive parameters are
/// forced to their restricted values on construction.
class ModelParams {
public:
    ModelParams(ModelVariant variant, const ParamValues& values)
        : variant_(variant), values_(restrict_to(variant, values)) {
        validate();
    }

    [[nodiscard]] ModelVariant variant() const noexcept { return variant_; }
    [[nodiscard]] const ParamValues& values() const noexcept { return values_; }
    [[nodiscard]] double operator[](Param p) const noexcept { return values_[p]; }
    [[nodiscard]] double h() const noexcept { return values_.h; }

    /// Copy with one parameter replaced (re-validated).
    [[nodiscard]] ModelParams with(Param p, double value) const {
        ParamValues v = values_;
        v[p] = value;
        return ModelParams(variant_, v);
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;

private:
    void validate() const {
        const ParamValues& p = values_;
        for (std::size_t i = 0; i < kParamCount; ++i) {
            if (!std::isfinite(p[static_cast<Param>(i)]))
                throw DomainError(std::string(kParamNames[i]) + " is not finite");
        }
        auto nonneg = [](double x, const char* name) {
            if (x < 0.0) throw DomainError(std::string(name) + " must be >= 0");
        };
        nonneg(p.kappa, "kappa");
        nonneg(p.theta, "theta");
        nonneg(p.chi, "chi");
        nonneg(p.omega, "omega");
        nonneg(p.xi, "xi");
        nonneg(p.nu, "nu");
        nonneg(p.delta, "delta");
        if (!(p.sigma > 0.0)) throw DomainError("sigma must be > 0");
        if (!(p.h > 0.0) || !std::isfinite(p.h)) throw DomainError("h must be > 0");
        if (!(p.rho_v * p.rho_v + p.rho_lambda * p.rho_lambda < 1.0))
            throw DomainError("rho_v^2 + rho_lambda^2 must be < 1");
        if (!(p.rho_z * p.nu < 1.0)) throw DomainError("rho_z * nu must be < 1");
    }

    ModelVariant variant_;
    ParamValues values_;
};

/// Jump compensator abar = exp(alpha + delta^2/2) / (1 - rho_z nu) - 1.
[[nodiscard]] inline double compensator(const ParamValues& p) {
    const double denom = 1.0 - p.rho_z * p.nu;
    if (!(denom > 0.0)) throw DomainError("compensator: rho_z * nu must be < 1");
    return std::exp(p.alpha + 0.5 * p.delta * p.delta) / denom - 1.0;
}

[[nodiscard]] inline double compensator(const ModelParams& params) {
    if (!has_return_jumps(params.variant())) return 0.0;
    return compensator(params.values());
}

/// Long-run moments used to place grid boundaries.
struct StationaryMoments {
    double mean_v = 0.0;
    double var_v = 0.0;
    double mean_lambda = 0.0;
    double var_lambda = 0.0;
    double mean_jump = 0.0;  // per-step aggregate variance jump
    double var_jump = 0.0;
};

[[nodiscard]] inline StationaryMoments stationary_moments(const ModelParams& params) {
    const ParamValues& p = params.values();
    if (!(p.kappa > 0.0)) throw DomainError("stationary moments need kappa > 0");
    StationaryMoments m;
    m.mean_v = p.theta;
    m.var_v = p.sigma * p.sigma * p.theta / (2.0 * p.kappa);
    m.mean_lambda = p.omega;
    if (has_stochastic_intensity(params.variant())) {
        if (!(p.chi > 0.0)) throw DomainError("stationary moments need chi > 0");
        m.var_lambda = p.xi * p.xi * p.omega / (2.0 * p.chi);
    }
    // Compound-Poisson jump at the long-run intensity omega.
    m.mean_jump = p.omega * p.h * p.nu;
    m.var_jump = 2.0 * p.omega * p.h * p.nu * p.nu;
    return m;
}

/// Latent state of one time step.
struct LatentState {
    double v = 0.0;
    double lambda = 0.0;
    double jump_return = 0.0;
    double jump_variance = 0.0;
    unsigned jumps = 0;
};

/// Conditioning values of the measurement density r(y | ...).
struct MeasurementPoint {
    double v_t = 0.0;
    double v_prev = 0.0;
    double lambda_t = 0.0;
    double lambda_prev = 0.0;
    double jump_variance = 0.0;
    unsigned jumps = 0;
};

/// Mean and variance of y_t given the latent transition, with the return jump
/// integrated out. The diffusion shocks are recovered from the transition.
struct MeasurementMoments {
    double mean = 0.0;
    double var = 0.0;
};

[[nodiscard]] inline MeasurementMoments measurement_moments(const ModelParams& params,
                                                           const MeasurementPoint& x) {
    const ParamValues& p = params.values();
    if (!(x.v_prev > 0.0)) throw DomainError("measurement density needs v_prev > 0");
    const double h = p.h;
    const double abar = compensator(params);
    const double sqrt_vh = std::sqrt(x.v_prev * h);

    double shock = 0.0;
    const double eps_v =
        (x.v_t - x.v_prev - p.kappa * (p.theta - x.v_prev) * h - x.jump_variance) /
        (p.sigma * sqrt_vh);
    shock += p.rho_v * eps_v;
    if (has_stochastic_intensity(params.variant()) && p.xi > 0.0) {
        if (!(x.lambda_prev > 0.0))
            throw DomainError("measurement density needs lambda_prev > 0");
        const double eps_l = (x.lambda_t - x.lambda_prev - p.chi * (p.omega - x.lambda_prev) * h) /
                             (p.xi * std::sqrt(x.lambda_prev * h));
        shock += p.rho_lambda * eps_l;
    }

    MeasurementMoments m;
    m.mean = (p.mu - 0.5 * x.v_prev - abar * x.lambda_prev) * h + sqrt_vh * shock +
             p.alpha * x.jumps + p.rho_z * x.jump_variance;
    // With xi = 0 the intensity shock cannot be recovered from the transition
    // and stays in the unexplained return noise.
    const double rho_l2 = (has_stochastic_intensity(params.variant()) && p.xi > 0.0)
                              ? p.rho_lambda * p.rho_lambda
                              : 0.0;
    m.var = x.v_prev * (1.0 - p.rho_v * p.rho_v - rho_l2) * h + x.jumps * p.delta * p.delta;
    if (!(m.var > 0.0)) throw DomainError("measurement variance must be > 0");
    return m;
}

[[nodiscard]] inline double log_measurement_density(double y, const ModelParams& params,
                                                    const MeasurementPoint& x) {
    const MeasurementMoments m = measurement_moments(params, x);
    return dist::normal_logpdf(y, m.mean, m.var);
}

[[nodiscard]] inline double measurement_density(double y, const ModelParams& params,
                                                const MeasurementPoint& x) {
    return std::exp(log_measurement_density(y, params, x));
}

/// Closed-form one-step transition laws.
class TransitionLaws {
public:
    explicit TransitionLaws(const ModelParams& params) : p_(params.values()) {}

    /// P(n_t = n | lambda_prev) under Poisson(lambda_prev h).
    [[nodiscard]] double poisson_pmf(unsigned n, double lambda_prev) const noexcept {
        return dist::poisson_pmf(n, lambda_prev * p_.h);
    }

    [[nodiscard]] double variance_mean(double v_prev, double jump_variance) const noexcept {
        return v_prev + p_.kappa * (p_.theta - v_prev) * p_.h + jump_variance;
    }
    [[nodiscard]] double variance_sd(double v_prev) const noexcept {
        return p_.sigma * std::sqrt(v_prev * p_.h);
    }
    [[nodiscard]] double variance_cdf(double v, double v_prev, double jump_variance) const noexcept {
        return interval_below(v, variance_mean(v_prev, jump_variance), variance_sd(v_prev));
    }
    [[nodiscard]] double variance_interval(double lo, double hi, double v_prev,
                                           double jump_variance) const noexcept {
        return dist::normal_interval(lo, hi, variance_mean(v_prev, jump_variance),
                                     variance_sd(v_prev));
    }

    /// Aggregate variance jump given n jumps: Gamma(shape n, scale nu); n = 0
    /// is a point mass at 0.
    [[nodiscard]] double jump_cdf(double j, unsigned n) const {
        return dist::gamma_cdf(j, static_cast<double>(n), p_.nu);
    }
    [[nodiscard]] double jump_interval(double lo, double hi, unsigned n) const {
        return dist::gamma_interval(lo, hi, static_cast<double>(n), p_.nu);
    }

    [[nodiscard]] double intensity_mean(double lambda_prev) const noexcept {
        return lambda_prev + p_.chi * (p_.omega - lambda_prev) * p_.h;
    }
    [[nodiscard]] double intensity_sd(double lambda_prev) const noexcept {
        return p_.xi * std::sqrt(std::max(lambda_prev, 0.0) * p_.h);
    }
    [[nodiscard]] double intensity_cdf(double lambda, double lambda_prev) const noexcept {
        return interval_below(lambda, intensity_mean(lambda_prev), intensity_sd(lambda_prev));
    }
    [[nodiscard]] double intensity_interval(double lo, double hi, double lambda_prev) const noexcept {
        return dist::normal_interval(lo, hi, intensity_mean(lambda_prev), intensity_sd(lambda_prev));
    }

private:
    static double interval_below(double x, double mean, double sd) noexcept {
        if (sd <= 0.0) return x >= mean ? 1.0 : 0.0;
        return dist::normal_cdf((x - mean) / sd);
    }

    ParamValues p_;
};

}  // namespace svdnf
