// Slepian model of a stationary Gaussian process at a u-level crossing:
//
//   X_u(t) = u r(t) - R r'(t) / sqrt(-r''(0)) + Delta(t),
//
// with R ~ Rayleigh(1) independent of the zero-mean residual Delta whose
// covariance is r(t-s) - r(t) r(s) + r'(t) r'(s) / r''(0).
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "excursion/covariance.hpp"
#include "excursion/errors.hpp"
#include "excursion/numerics.hpp"
#include "excursion/parallel.hpp"

namespace excursion {

/// Below this lag the expected-value formulas are 0/0 and their limits are used.
inline constexpr double kSlepianTimeEps = 1e-8;

namespace detail {

// Residual standard deviation with clamping of round-off negatives.
inline double residual_sd(const CovarianceModel& model, double t) {
    const double var = model.residual_variance(t);
    if (var < -1e-12)
        throw NumericalError("residual variance " + std::to_string(var) + " < 0 at t=" +
                             std::to_string(t) + " for model " + model.name);
    return std::sqrt(std::max(var, 0.0));
}

}  // namespace detail

/// Expected value E_u^+(t) of sgn(X_u(t) - u), the clipped Slepian process at a
/// u-level up-crossing. Tends to 1 as t -> 0+ and to 1 - 2 Phi(u) as t -> inf.
inline double expected_clipped_up(const CovarianceModel& model, double u, double t) {
    if (!(t > 0.0)) throw DomainError("expected_clipped_up: t must be positive");
    if (t < kSlepianTimeEps) return 1.0;
    const double omr = model.one_minus_r(t);
    const double opr = 2.0 - omr;
    const double rp = model.r_prime(t);
    const double sd = detail::residual_sd(model, t);
    if (sd == 0.0 || omr <= 0.0)
        throw NumericalError("expected_clipped_up: degenerate residual at t=" + std::to_string(t));
    const double lam = std::sqrt(model.lambda2());
    const double level_term = one_minus_two_cdf(u * omr / sd);
    const double ratio = std::sqrt(omr / opr);
    const double slope_term = -2.0 / lam * rp / std::sqrt(omr * opr) *
                              std::exp(-0.5 * u * u * omr / opr) *
                              norm_cdf(-u / lam * ratio * rp / sd);
    return std::clamp(level_term + slope_term, -1.0, 1.0);
}

/// E_u^-(t) for the down-crossing model; equals -E_{-u}^+(t).
inline double expected_clipped_down(const CovarianceModel& model, double u, double t) {
    return -expected_clipped_up(model, -u, t);
}

/// E(sgn(X_u(t) - u) | R = s): the clipped expectation given the Rayleigh slope draw.
/// Integrating against the Rayleigh density s exp(-s^2/2) gives expected_clipped_up.
inline double conditional_expected_clipped(const CovarianceModel& model, double u, double t,
                                           double s) {
    if (!(t > 0.0) || !(s > 0.0))
        throw DomainError("conditional_expected_clipped: t and s must be positive");
    if (t < kSlepianTimeEps) return 1.0;
    const double sd = detail::residual_sd(model, t);
    if (sd == 0.0) return 1.0;
    const double lam = std::sqrt(model.lambda2());
    return one_minus_two_cdf((u * model.one_minus_r(t) + s * model.r_prime(t) / lam) / sd);
}

/// One sampled Slepian trajectory split into its three components.
struct SlepianPath {
    std::vector<double> grid;
    std::vector<double> deterministic_part;
    std::vector<double> slope_part;
    std::vector<double> residual_part;
    std::vector<double> total;
    double rayleigh_draw = 0.0;
    double level = 0.0;
};

/// Factor of the residual covariance on a time grid, reusable across draws.
/// Points with zero residual variance (t = 0) are pinned to exactly zero.
class SlepianResidualSampler {
public:
    SlepianResidualSampler(const CovarianceModel& model, std::vector<double> grid)
        : grid_(std::move(grid)) {
        if (grid_.empty() || grid_.front() != 0.0)
            throw DomainError("sample_slepian_path: grid must start at 0");
        for (std::size_t i = 1; i < grid_.size(); ++i)
            if (!(grid_[i] > grid_[i - 1]))
                throw DomainError("sample_slepian_path: grid must be strictly increasing");

        for (std::size_t i = 0; i < grid_.size(); ++i)
            if (grid_[i] > 0.0) free_.push_back(i);
        const auto n = static_cast<Eigen::Index>(free_.size());
        Eigen::MatrixXd cov(n, n);
        for (Eigen::Index a = 0; a < n; ++a) {
            const double ta = grid_[free_[static_cast<std::size_t>(a)]];
            cov(a, a) = model.residual_variance(ta);
            for (Eigen::Index b = 0; b < a; ++b) {
                const double tb = grid_[free_[static_cast<std::size_t>(b)]];
                const double c = model.r(ta - tb) - model.r(ta) * model.r(tb) +
                                 model.r_prime(ta) * model.r_prime(tb) / model.r_pp0;
                cov(a, b) = c;
                cov(b, a) = c;
            }
        }
        for (double jitter : {0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10}) {
            Eigen::MatrixXd m = cov;
            m.diagonal().array() += jitter;
            Eigen::LLT<Eigen::MatrixXd> llt(m);
            if (llt.info() == Eigen::Success) {
                factor_ = llt.matrixL();
                jitter_ = jitter;
                return;
            }
        }
        throw NumericalError("sample_slepian_path: residual covariance not factorizable with jitter <= 1e-10");
    }

    const std::vector<double>& grid() const noexcept { return grid_; }
    double jitter() const noexcept { return jitter_; }

    std::vector<double> draw(Rng& rng) const {
        std::normal_distribution<double> normal;
        Eigen::VectorXd z(factor_.rows());
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
        const Eigen::VectorXd x = factor_ * z;
        std::vector<double> out(grid_.size(), 0.0);
        for (std::size_t k = 0; k < free_.size(); ++k) out[free_[k]] = x(static_cast<Eigen::Index>(k));
        return out;
    }

private:
    std::vector<double> grid_;
    std::vector<std::size_t> free_;
    Eigen::MatrixXd factor_;
    double jitter_ = 0.0;
};

/// Draws `count` Slepian paths at level u. Path i uses seed derive_seed(seed, i).
inline std::vector<SlepianPath> sample_slepian_path(const CovarianceModel& model, double u,
                                                    const std::vector<double>& grid,
                                                    std::size_t count, std::uint64_t seed) {
    const SlepianResidualSampler residual(model, grid);
    const double lam = std::sqrt(model.lambda2());
    std::vector<double> det(grid.size()), slope_shape(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        det[i] = u * model.r(grid[i]);
        slope_shape[i] = -model.r_prime(grid[i]) / lam;
    }

    std::vector<SlepianPath> paths(count);
    parallel_for(count, [&](std::size_t p) {
        Rng rng = make_rng(derive_seed(seed, p));
        SlepianPath& path = paths[p];
        path.level = u;
        path.grid = grid;
        path.rayleigh_draw = std::sqrt(-2.0 * std::log(uniform_open(rng)));
        path.deterministic_part = det;
        path.slope_part.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            path.slope_part[i] = path.rayleigh_draw * slope_shape[i];
        path.residual_part = residual.draw(rng);
        path.total.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            path.total[i] = path.deterministic_part[i] + path.slope_part[i] + path.residual_part[i];
    });
    return paths;
}

}  // namespace excursion
