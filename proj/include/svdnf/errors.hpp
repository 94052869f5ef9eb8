// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace svdnf {

/// Parameter or argument outside the domain of a model quantity.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed or inconsistent input data (CSV, config files).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure failed to produce a usable value.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The filter predicted zero (or non-finite) density for an observation.
class ZeroLikelihoodError : public NumericalError {
public:
    ZeroLikelihoodError(std::size_t t, double y)
        : NumericalError("zero-likelihood step at t=" + std::to_string(t) +
                         " (y=" + std::to_string(y) + ")"),
          t_(t), y_(y) {}

    [[nodiscard]] std::size_t t() const noexcept { return t_; }
    [[nodiscard]] double y() const noexcept { return y_; }

private:
    std::size_t t_;
    double y_;
};

/// Every particle weight underflowed to zero.
class ParticleCollapseError : public NumericalError {
public:
    explicit ParticleCollapseError(std::size_t t)
        : NumericalError("particle collapse at t=" + std::to_string(t)), t_(t) {}

    [[nodiscard]] std::size_t t() const noexcept { return t_; }

private:
    std::size_t t_;
};

}  // namespace svdnf
