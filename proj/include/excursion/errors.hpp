// Exception types shared by all excursion modules.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace excursion {

/// Precondition violated by the caller (bad parameter, out-of-range input).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical procedure failed (factorization, embedding, vanishing denominator).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A tabulated curve that must be monotone is not.
class MonotonicityViolation : public NumericalError {
public:
    MonotonicityViolation(std::string curve, std::size_t index, double t)
        : NumericalError("monotonicity violated on " + curve + " at index " +
                         std::to_string(index) + " (t=" + std::to_string(t) + ")"),
          curve_(std::move(curve)), index_(index), t_(t) {}

    const std::string& curve() const noexcept { return curve_; }
    std::size_t index() const noexcept { return index_; }
    double t() const noexcept { return t_; }

private:
    std::string curve_;
    std::size_t index_;
    double t_;
};

/// The tabulation grid ends before the curve reaches its limit.
class GridTooShort : public DomainError {
public:
    using DomainError::DomainError;
};

/// Survival-function regression could not be carried out.
class FitError : public NumericalError {
public:
    explicit FitError(const std::string& what, long replicate = -1)
        : NumericalError(what), replicate_(replicate) {}
    long replicate() const noexcept { return replicate_; }

private:
    long replicate_;
};

/// A trajectory produced no complete excursion at the requested level.
class EmptyExcursionSet : public DomainError {
public:
    using DomainError::DomainError;
};

/// Covariance-model checks failed; carries one message per failed check.
class ValidationError : public DomainError {
public:
    explicit ValidationError(std::vector<std::string> failures)
        : DomainError(join(failures)), failures_(std::move(failures)) {}
    const std::vector<std::string>& failures() const noexcept { return failures_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out = "covariance validation failed:";
        for (const auto& s : items) out += " " + s + ";";
        return out;
    }
    std::vector<std::string> failures_;
};

}  // namespace excursion
