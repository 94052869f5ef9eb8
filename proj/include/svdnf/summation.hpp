// SPDX-License-Identifier: MIT
//
// Deterministic reductions. Every reduction in the library goes through a
// fixed pairwise tree so results do not depend on how work was split across
// threads.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace svdnf {

namespace detail {
inline constexpr std::size_t kPairwiseLeaf = 8;
}

/// Pairwise (cascade) sum. The tree shape depends only on the length.
[[nodiscard]] inline double pairwise_sum(std::span<const double> x) noexcept {
    const std::size_t n = x.size();
    if (n <= detail::kPairwiseLeaf) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

/// log(sum(exp(x))) with a pairwise inner sum. Returns -inf for an empty
/// input or when every element is -inf.
[[nodiscard]] inline double log_sum_exp(std::span<const double> x) {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    if (x.empty()) return kNegInf;
    const double m = *std::max_element(x.begin(), x.end());
    if (m == kNegInf) return kNegInf;
    if (!std::isfinite(m)) return m;
    // Same tree shape as pairwise_sum, exponentiating at the leaves.
    struct Exp {
        std::span<const double> x;
        double m;
        double sum(std::size_t lo, std::size_t hi) const {
            const std::size_t n = hi - lo;
            if (n <= detail::kPairwiseLeaf) {
                double s = 0.0;
                for (std::size_t i = lo; i < hi; ++i) s += std::exp(x[i] - m);
                return s;
            }
            const std::size_t mid = lo + n / 2;
            return sum(lo, mid) + sum(mid, hi);
        }
    };
    return m + std::log(Exp{x, m}.sum(0, x.size()));
}

/// log(mean(exp(x))).
[[nodiscard]] inline double log_mean_exp(std::span<const double> x) {
    return log_sum_exp(x) - std::log(static_cast<double>(x.size()));
}

}  // namespace svdnf
