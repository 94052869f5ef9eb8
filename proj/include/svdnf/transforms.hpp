// SPDX-License-Identifier: MIT
//
// Maps between the active parameters of a variant and an unconstrained
// vector. Positive parameters use log, a lone correlation uses atanh and the
// pair (rho_v, rho_lambda) uses the radial map z -> z tanh|z| / |z|, which
// keeps rho_v^2 + rho_lambda^2 < 1.
#pragma once

#include "svdnf/errors.hpp"
#include "svdnf/model.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace svdnf {

enum class TransformKind { Identity, Log, Atanh, Polar };

[[nodiscard]] inline TransformKind transform_kind(ModelVariant v, Param p) noexcept {
    switch (p) {
        case Param::kappa:
        case Param::theta:
        case Param::sigma:
        case Param::chi:
        case Param::omega:
        case Param::xi:
        case Param::nu:
        case Param::delta: return TransformKind::Log;
        case Param::rho_v:
        case Param::rho_lambda:
            return has_stochastic_intensity(v) ? TransformKind::Polar : TransformKind::Atanh;
        default: return TransformKind::Identity;
    }
}

/// Smallest value a log-transformed parameter is mapped from.
inline constexpr double kLogFloor = 1e-12;

class ParamTransform {
public:
    explicit ParamTransform(ModelVariant variant) : variant_(variant), active_(active_params(variant)) {}

    [[nodiscard]] ModelVariant variant() const noexcept { return variant_; }
    [[nodiscard]] const std::vector<Param>& active() const noexcept { return active_; }
    [[nodiscard]] std::size_t dim() const noexcept { return active_.size(); }

    [[nodiscard]] std::vector<double> to_unconstrained(const ParamValues& p) const {
        std::vector<double> z(active_.size());
        for (std::size_t i = 0; i < active_.size(); ++i) {
            const Param q = active_[i];
            const double x = p[q];
            switch (transform_kind(variant_, q)) {
                case TransformKind::Identity: z[i] = x; break;
                case TransformKind::Log: z[i] = std::log(std::max(x, kLogFloor)); break;
                case TransformKind::Atanh: z[i] = std::atanh(x); break;
                case TransformKind::Polar: {
                    const double r = std::hypot(p.rho_v, p.rho_lambda);
                    const double scale = r > 0.0 ? std::atanh(r) / r : 1.0;
                    z[i] = x * scale;
                    break;
                }
            }
        }
        return z;
    }

    /// Inverse map; parameters outside the active set are taken from `base`.
    [[nodiscard]] ParamValues from_unconstrained(const std::vector<double>& z,
                                                 ParamValues base = {}) const {
        if (z.size() != active_.size()) throw DomainError("transform: dimension mismatch");
        double zr_v = 0.0, zr_l = 0.0;
        for (std::size_t i = 0; i < active_.size(); ++i) {
            if (active_[i] == Param::rho_v) zr_v = z[i];
            if (active_[i] == Param::rho_lambda) zr_l = z[i];
        }
        const double r = std::hypot(zr_v, zr_l);
        const double polar_scale = r > 0.0 ? std::tanh(r) / r : 1.0;

        for (std::size_t i = 0; i < active_.size(); ++i) {
            const Param q = active_[i];
            double& x = base[q];
            switch (transform_kind(variant_, q)) {
                case TransformKind::Identity: x = z[i]; break;
                case TransformKind::Log: x = std::exp(z[i]); break;
                case TransformKind::Atanh: x = std::tanh(z[i]); break;
                case TransformKind::Polar: x = z[i] * polar_scale; break;
            }
        }
        return base;
    }

private:
    ModelVariant variant_;
    std::vector<Param> active_;
};

}  // namespace svdnf
