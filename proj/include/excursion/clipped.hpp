// Covariance of the clipped stationary Gaussian process sgn(X(t) - u).
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "excursion/covariance.hpp"
#include "excursion/errors.hpp"
#include "excursion/numerics.hpp"

namespace excursion {

/// R_u(t) = 4 (B(u, r(t)) - Phi(u)^2) for a unit-variance process.
inline double clipped_covariance(const CovarianceModel& model, double u, double t) {
    if (!(t >= 0.0)) throw DomainError("clipped_covariance: t must be non-negative");
    const double p = norm_cdf(u);
    const double rho = t == 0.0 ? 1.0 : std::clamp(model.r(t), -1.0, 1.0);
    return 4.0 * (b_integral(u, rho) - p * p);
}

/// Zero-level closed form (2/pi) arcsin r(t).
inline double clipped_covariance_arcsin(const CovarianceModel& model, double t) {
    return 2.0 / std::numbers::pi * std::asin(std::clamp(model.r(t), -1.0, 1.0));
}

/// Clipped covariance tabulated on a grid for one level.
struct ClippedCovariance {
    double level = 0.0;
    CovarianceModel model;
    Grid cache;

    static ClippedCovariance tabulate(CovarianceModel model, double u, std::vector<double> grid) {
        std::vector<double> values(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) values[i] = clipped_covariance(model, u, grid[i]);
        Grid g(std::move(grid), std::move(values));
        return ClippedCovariance{u, std::move(model), std::move(g)};
    }

    /// Variance 1 - (1 - 2 Phi(u))^2.
    double variance() const {
        const double m = one_minus_two_cdf(level);
        return 1.0 - m * m;
    }

    double operator()(double t) const { return clipped_covariance(model, level, t); }
};

}  // namespace excursion
