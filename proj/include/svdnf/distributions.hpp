// SPDX-License-Identifier: MIT
#pragma once

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace svdnf::dist {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

[[nodiscard]] inline double normal_logpdf(double x, double mean, double var) noexcept {
    const double z = x - mean;
    return -kLogSqrt2Pi - 0.5 * std::log(var) - 0.5 * z * z / var;
}

[[nodiscard]] inline double normal_cdf(double z) noexcept {
    return 0.5 * std::erfc(-z * kInvSqrt2);
}

/// P(lo <= X < hi) for X ~ N(mean, sd^2). Subtracts in whichever tail keeps
/// precision; sd == 0 is a point mass at the mean.
[[nodiscard]] inline double normal_interval(double lo, double hi, double mean, double sd) noexcept {
    if (sd <= 0.0) return (mean >= lo && mean < hi) ? 1.0 : 0.0;
    const double zlo = (lo - mean) / sd;
    const double zhi = (hi - mean) / sd;
    constexpr double r = kInvSqrt2;
    if (zlo >= 0.0) return 0.5 * (std::erfc(zlo * r) - std::erfc(zhi * r));
    if (zhi <= 0.0) return 0.5 * (std::erfc(-zhi * r) - std::erfc(-zlo * r));
    return 1.0 - 0.5 * (std::erfc(-zlo * r) + std::erfc(zhi * r));
}

[[nodiscard]] inline double poisson_pmf(unsigned n, double mean) noexcept {
    if (mean <= 0.0) return n == 0 ? 1.0 : 0.0;
    return std::exp(n * std::log(mean) - mean - std::lgamma(n + 1.0));
}

/// Gamma cdf with the given shape and scale; shape 0 is a point mass at 0.
[[nodiscard]] inline double gamma_cdf(double x, double shape, double scale) {
    if (x < 0.0) return 0.0;
    if (shape <= 0.0 || scale <= 0.0) return 1.0;
    if (x == kInf) return 1.0;
    return boost::math::gamma_p(shape, x / scale);
}

/// P(lo <= X < hi); the point mass of the degenerate case lands in the
/// interval containing 0.
[[nodiscard]] inline double gamma_interval(double lo, double hi, double shape, double scale) {
    if (shape <= 0.0 || scale <= 0.0) return (lo <= 0.0 && 0.0 < hi) ? 1.0 : 0.0;
    return gamma_cdf(hi, shape, scale) - gamma_cdf(lo, shape, scale);
}

}  // namespace svdnf::dist
