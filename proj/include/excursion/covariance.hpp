// Stationary covariance models with analytic derivatives.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "excursion/errors.hpp"

namespace excursion {

/// Normalized stationary covariance r (r(0) = 1) with exact derivative,
/// curvature at the origin and optional spectral density.
///
/// `one_minus_r` and `residual_variance` may be supplied in closed form when the
/// generic expressions 1 - r(t) and 1 - r(t)^2 + r'(t)^2 / r''(0) lose precision
/// near t = 0 (the latter is O(t^4) for smooth models).
struct CovarianceModel {
    std::string name;
    std::function<double(double)> r;
    std::function<double(double)> r_prime;
    double r_pp0 = -1.0;
    std::optional<std::function<double(double)>> spectrum;
    std::function<double(double)> one_minus_r_fn;
    std::function<double(double)> residual_variance_fn;

    /// Spectral moment -r''(0).
    double lambda2() const { return -r_pp0; }

    double one_minus_r(double t) const { return one_minus_r_fn ? one_minus_r_fn(t) : 1.0 - r(t); }

    /// Variance of the Slepian residual at lag t: 1 - r^2 + r'^2 / r''(0).
    double residual_variance(double t) const {
        if (residual_variance_fn) return residual_variance_fn(t);
        const double omr = one_minus_r(t);
        const double rp = r_prime(t);
        return omr * (2.0 - omr) + rp * rp / r_pp0;
    }
};

namespace detail {

// sech(x) for x >= 0 without overflow.
inline double sech(double x) {
    x = std::abs(x);
    const double e = std::exp(-x);
    return 2.0 * e / (1.0 + e * e);
}

// log cosh(x), accurate for small |x|.
inline double log_cosh(double x) {
    x = std::abs(x);
    if (x < 1.0) {
        const double sh = std::sinh(0.5 * x);
        return std::log1p(2.0 * sh * sh);
    }
    return x + std::log1p(std::exp(-2.0 * x)) - std::numbers::ln2;
}

}  // namespace detail

/// Time covariance of the d-dimensional diffusing field: r(t) = sech^{d/2}(t/2).
/// For d = 2 the spectral density sech(pi*omega) (angular frequency) is attached.
inline CovarianceModel diffusion_covariance(int d) {
    if (d < 1) throw DomainError("diffusion_covariance: dimension must be >= 1");
    const double k = 0.5 * d;
    CovarianceModel m;
    m.name = "diffusion(d=" + std::to_string(d) + ")";
    m.r = [k](double t) { return std::pow(detail::sech(0.5 * t), k); };
    m.r_prime = [k](double t) {
        return -0.5 * k * std::pow(detail::sech(0.5 * t), k) * std::tanh(0.5 * t);
    };
    m.r_pp0 = -d / 8.0;
    m.one_minus_r_fn = [k](double t) { return -std::expm1(-k * detail::log_cosh(0.5 * t)); };
    if (d == 2) {
        // sech^2 + tanh^2 = 1 collapses the residual variance to tanh^4(t/2).
        m.residual_variance_fn = [](double t) {
            const double th = std::tanh(0.5 * t);
            return th * th * th * th;
        };
        m.spectrum = [](double w) { return detail::sech(std::numbers::pi * w); };
    }
    return m;
}

/// Gaussian-shaped covariance r(t) = exp(-t^2 / 2) with spectrum N(0, 1) density.
inline CovarianceModel gaussian_covariance() {
    CovarianceModel m;
    m.name = "gaussian";
    m.r = [](double t) { return std::exp(-0.5 * t * t); };
    m.r_prime = [](double t) { return -t * std::exp(-0.5 * t * t); };
    m.r_pp0 = -1.0;
    m.one_minus_r_fn = [](double t) { return -std::expm1(-0.5 * t * t); };
    m.residual_variance_fn = [](double t) {
        // 1 - e^{-x}(1 + x) with x = t^2.
        const double x = t * t;
        if (x < 0.1) {
            // sum_{n>=2} (-1)^n (n-1) x^n / n!; term holds (-1)^{n-1} x^n / n!
            double term = x, sum = 0.0;
            for (int n = 2; n < 20; ++n) {
                term *= -x / n;
                sum -= (n - 1) * term;
            }
            return sum;
        }
        return -std::expm1(-x) - x * std::exp(-x);
    };
    m.spectrum = [](double w) { return std::exp(-0.5 * w * w) / std::sqrt(2.0 * std::numbers::pi); };
    return m;
}

/// Model lookup by name for CLI/config use.
inline CovarianceModel make_model(const std::string& name, int dim) {
    if (name == "diffusion") return diffusion_covariance(dim);
    if (name == "gaussian") return gaussian_covariance();
    throw DomainError("unknown covariance model '" + name + "'");
}

/// Outcome of validate(): names of the checks that were run.
struct ValidationReport {
    std::string model;
    std::vector<std::string> passed;
    double spectrum_mass = std::numeric_limits<double>::quiet_NaN();
    double spectrum_second_moment = std::numeric_limits<double>::quiet_NaN();
};

/// 10^3 log-spaced probe points on [1e-3, 50].
inline std::vector<double> probe_grid(std::size_t n = 1000, double lo = 1e-3, double hi = 50.0) {
    std::vector<double> t(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    return t;
}

/// Checks normalization, boundedness, derivative consistency, the Cauchy-Schwarz
/// bound behind the Slepian residual, and spectral mass/second moment.
/// Throws ValidationError listing every failed check.
inline ValidationReport validate(const CovarianceModel& model) {
    ValidationReport report{model.name, {}};
    std::vector<std::string> failures;
    auto check = [&](bool ok, const std::string& what) {
        (ok ? report.passed : failures).push_back(what);
    };

    check(std::abs(model.r(0.0) - 1.0) < 1e-12, "normalization");
    check(model.r_pp0 < 0.0, "negative curvature");
    check(std::abs(model.r_prime(0.0)) < 1e-12, "zero slope at origin");

    const auto probes = probe_grid();
    constexpr double h = 1e-4;
    bool bounded = true, slope = true, cauchy = true;
    for (double t : probes) {
        const double r = model.r(t);
        if (!(std::abs(r) <= 1.0)) bounded = false;
        const double fd = (model.r(t + h) - model.r(t - h)) / (2.0 * h);
        if (!(std::abs(fd - model.r_prime(t)) < 1e-6)) slope = false;
        if (!(model.residual_variance(t) >= -1e-12)) cauchy = false;
    }
    check(bounded, "bounded by one");
    check(slope, "first derivative");
    check(cauchy, "cauchy-schwarz");

    const double curv = 2.0 * (model.r(h) - model.r(0.0)) / (h * h);
    check(std::abs(curv - model.r_pp0) < 1e-5, "second derivative at zero");

    if (model.spectrum) {
        using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
        const auto& S = *model.spectrum;
        const double inf = std::numeric_limits<double>::infinity();
        report.spectrum_mass = GK::integrate(S, -inf, inf, 15, 1e-12);
        report.spectrum_second_moment =
            GK::integrate([&](double w) { return w * w * S(w); }, -inf, inf, 15, 1e-12);
        check(std::abs(report.spectrum_mass - 1.0) < 1e-6, "spectrum mass");
        check(std::abs(report.spectrum_second_moment - model.lambda2()) < 1e-4,
              "spectrum second moment");
    }
    if (!failures.empty()) throw ValidationError(std::move(failures));
    return report;
}

}  // namespace excursion
