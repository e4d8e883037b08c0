// Scalar special functions and numerical kernels: the normal CDF, the
// Rayleigh-normal probability, the bivariate orthant integral, Laplace
// transforms of tabulated curves, Gaver-Stehfest inversion and inverse-CDF
// sampling from tabulated distributions.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "excursion/errors.hpp"

namespace excursion {

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

/// Tabulated function: strictly increasing non-negative abscissae with aligned values.
class Grid {
public:
    Grid() = default;
    Grid(std::vector<double> points, std::vector<double> values)
        : points_(std::move(points)), values_(std::move(values)) {
        if (points_.size() != values_.size())
            throw DomainError("Grid: points and values differ in length");
        if (points_.size() < 2) throw DomainError("Grid: need at least two points");
        if (!(points_.front() >= 0.0)) throw DomainError("Grid: first point must be >= 0");
        for (std::size_t i = 1; i < points_.size(); ++i) {
            if (!(points_[i] > points_[i - 1]))
                throw DomainError("Grid: points must be strictly increasing (index " +
                                  std::to_string(i) + ")");
        }
    }

    /// Uniform grid 0, step, 2*step, ... up to and including t_max.
    static std::vector<double> uniform_points(double t_max, double step) {
        if (!(step > 0.0) || !(t_max > step))
            throw DomainError("Grid: need 0 < step < t_max");
        const auto n = static_cast<std::size_t>(std::llround(t_max / step));
        std::vector<double> pts(n + 1);
        for (std::size_t i = 0; i <= n; ++i) pts[i] = static_cast<double>(i) * step;
        return pts;
    }

    const std::vector<double>& points() const noexcept { return points_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return points_.size(); }
    double front_point() const { return points_.front(); }
    double back_point() const { return points_.back(); }

    /// Linear interpolation, clamped to the end values outside the grid.
    double interpolate(double t) const {
        if (t <= points_.front()) return values_.front();
        if (t >= points_.back()) return values_.back();
        const auto it = std::upper_bound(points_.begin(), points_.end(), t);
        const auto j = static_cast<std::size_t>(it - points_.begin());
        const double w = (t - points_[j - 1]) / (points_[j] - points_[j - 1]);
        return values_[j - 1] + w * (values_[j] - values_[j - 1]);
    }

private:
    std::vector<double> points_;
    std::vector<double> values_;
};

/// Behaviour of a tabulated curve past its last grid point:
/// f(t) = asymptote + amplitude * exp(-rate * (t - t_end)).
struct ExponentialTail {
    double asymptote = 0.0;
    double amplitude = 0.0;
    double rate = 1.0;
};

/// Fits the exponential tail of |f - asymptote| over the last decade (10%) of
/// the points where the residual is still resolvable (above 1e-12).
inline ExponentialTail fit_exponential_tail(const Grid& f, double asymptote = 0.0) {
    const auto& t = f.points();
    const auto& v = f.values();
    std::size_t last = t.size();
    while (last > 0 && std::abs(v[last - 1] - asymptote) <= 1e-12) --last;
    ExponentialTail tail{asymptote, 0.0, 1.0};
    if (last < 3) return tail;
    const std::size_t span = std::max<std::size_t>(2, last / 10);
    const std::size_t first = last - span;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (std::size_t i = first; i < last; ++i) {
        const double y = std::log(std::abs(v[i] - asymptote));
        sx += t[i];
        sy += y;
        sxx += t[i] * t[i];
        sxy += t[i] * y;
        n += 1;
    }
    const double den = n * sxx - sx * sx;
    const double slope = den > 0 ? (n * sxy - sx * sy) / den : 0.0;
    if (slope < 0.0) tail.rate = -slope;
    // Amplitude at the grid end; sign follows the last tabulated residual.
    if (last == t.size()) tail.amplitude = v.back() - asymptote;
    return tail;
}

// ---------------------------------------------------------------------------
// Scalar special functions
// ---------------------------------------------------------------------------

/// Standard normal CDF.
inline double norm_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

/// Standard normal density.
inline double norm_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// 1 - 2*Phi(x), evaluated without cancellation.
inline double one_minus_two_cdf(double x) noexcept {
    return -std::erf(x * std::numbers::sqrt2 / 2.0);
}

/// P(R < W) for R ~ Rayleigh(1) and W ~ N(mu, sigma_w^2), parametrized by
/// (mu_t, sigma_t) = (mu, 1) / sigma_w.
inline double xi(double mu_t, double sigma_t) {
    if (!(sigma_t > 0.0)) throw DomainError("xi: sigma_t must be positive");
    if (mu_t == std::numeric_limits<double>::infinity()) return 1.0;
    const double k = sigma_t / std::sqrt(1.0 + sigma_t * sigma_t);
    const double value = norm_cdf(mu_t) - k * norm_cdf(mu_t * k) *
                                              std::exp(-mu_t * mu_t / (2.0 * (1.0 + sigma_t * sigma_t)));
    return std::clamp(value, 0.0, 1.0);
}

/// Bivariate orthant probability P(rho*Z + sqrt(1-rho^2)*Y <= u, Z <= u) with Z, Y
/// independent standard normals. Integrates d/drho = phi2(u, u; rho) from 0 with
/// rho = sin(theta), which leaves a smooth integrand on [0, asin rho].
inline double b_integral(double u, double rho) {
    if (!(std::abs(rho) <= 1.0)) throw DomainError("b_integral: |rho| must be <= 1");
    const double p = norm_cdf(u);
    if (rho == 1.0) return p;
    if (rho == -1.0) return std::max(0.0, 2.0 * p - 1.0);
    if (rho == 0.0) return p * p;
    auto integrand = [u](double theta) {
        const double den = 1.0 + std::sin(theta);
        return den > 0.0 ? std::exp(-u * u / den) : (u == 0.0 ? 1.0 : 0.0);
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double q = GK::integrate(integrand, 0.0, std::asin(rho), 12, 1e-14);
    return std::clamp(p * p + q / (2.0 * std::numbers::pi), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Laplace transforms
// ---------------------------------------------------------------------------

/// Integral of f(t) * exp(-s t) over the grid by composite Simpson (quadratic
/// through consecutive point triples, valid on non-uniform grids) plus the
/// closed-form integral of the exponential tail beyond the last point.
inline double numerical_laplace(const Grid& f, const ExponentialTail& tail, double s) {
    if (!(s > 0.0)) throw DomainError("numerical_laplace: s must be positive");
    if (!(tail.rate > 0.0)) throw DomainError("numerical_laplace: tail rate must be positive");
    const auto& t = f.points();
    const auto& v = f.values();
    const std::size_t n = t.size();
    auto g = [&](std::size_t i) { return v[i] * std::exp(-s * t[i]); };

    double sum = 0.0;
    std::size_t i = 0;
    for (; i + 2 < n; i += 2) {
        const double h0 = t[i + 1] - t[i];
        const double h1 = t[i + 2] - t[i + 1];
        const double hs = h0 + h1;
        sum += hs / 6.0 *
               ((2.0 - h1 / h0) * g(i) + hs * hs / (h0 * h1) * g(i + 1) + (2.0 - h0 / h1) * g(i + 2));
    }
    if (i + 2 == n) {
        // One interval left: quadratic through the last three points.
        const double h0 = t[i] - t[i - 1];
        const double h1 = t[i + 1] - t[i];
        sum += -h1 * h1 * h1 / (6.0 * h0 * (h0 + h1)) * g(i - 1) +
               h1 * (h1 + 3.0 * h0) / (6.0 * h0) * g(i) +
               h1 * (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1)) * g(i + 1);
    }
    const double decay = std::exp(-s * t.back());
    sum += tail.asymptote * decay / s + tail.amplitude * decay / (s + tail.rate);
    return sum;
}

/// A function of s > 0 known either in closed form or as the Laplace transform
/// of a tabulated curve with an exponential tail.
class LaplaceEvaluable {
public:
    using Fn = std::function<double(double)>;
    struct Tabulated {
        Grid curve;
        ExponentialTail tail;
    };

    static LaplaceEvaluable closed_form(Fn fn) { return LaplaceEvaluable(std::move(fn)); }
    static LaplaceEvaluable tabulated(Grid curve, ExponentialTail tail) {
        if (!(tail.rate > 0.0)) throw DomainError("LaplaceEvaluable: tail rate must be positive");
        return LaplaceEvaluable(Tabulated{std::move(curve), tail});
    }

    double operator()(double s) const {
        if (!(s > 0.0)) throw DomainError("LaplaceEvaluable: s must be positive");
        if (const auto* fn = std::get_if<Fn>(&impl_)) return (*fn)(s);
        const auto& tab = std::get<Tabulated>(impl_);
        return numerical_laplace(tab.curve, tab.tail, s);
    }

    bool is_tabulated() const noexcept { return std::holds_alternative<Tabulated>(impl_); }

private:
    explicit LaplaceEvaluable(Fn fn) : impl_(std::move(fn)) {}
    explicit LaplaceEvaluable(Tabulated tab) : impl_(std::move(tab)) {}
    std::variant<Fn, Tabulated> impl_;
};

namespace detail {

inline std::vector<long double> stehfest_weights(int order) {
    const int half = order / 2;
    auto fact = [](int k) {
        long double r = 1.0L;
        for (int i = 2; i <= k; ++i) r *= i;
        return r;
    };
    std::vector<long double> w(static_cast<std::size_t>(order) + 1, 0.0L);
    for (int k = 1; k <= order; ++k) {
        long double acc = 0.0L;
        for (int j = (k + 1) / 2; j <= std::min(k, half); ++j) {
            acc += std::pow(static_cast<long double>(j), half) * fact(2 * j) /
                   (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
        }
        w[static_cast<std::size_t>(k)] = ((k + half) % 2 == 0 ? 1.0L : -1.0L) * acc;
    }
    return w;
}

}  // namespace detail

/// Gaver-Stehfest estimate of the original function f(t) from its Laplace transform.
/// Weights are accumulated in extended precision.
template <typename Psi>
double gaver_stehfest_invert(const Psi& psi, double t, int order = 14) {
    if (order % 2 != 0 || order < 8 || order > 18)
        throw DomainError("gaver_stehfest_invert: order must be even and in [8, 18]");
    if (!(t > 0.0)) throw DomainError("gaver_stehfest_invert: t must be positive");
    const auto w = detail::stehfest_weights(order);
    const long double a = std::numbers::ln2_v<long double> / t;
    long double sum = 0.0L;
    for (int k = 1; k <= order; ++k)
        sum += w[static_cast<std::size_t>(k)] * static_cast<long double>(psi(static_cast<double>(a * k)));
    return static_cast<double>(a * sum);
}

// ---------------------------------------------------------------------------
// Inverse-CDF sampling
// ---------------------------------------------------------------------------

/// Piecewise-linear inverse of a tabulated CDF with an exponential tail above
/// the last tabulated probability. Validated once at construction.
class TabulatedInverseCdf {
public:
    TabulatedInverseCdf() = default;
    TabulatedInverseCdf(Grid cdf, double tail_rate) : cdf_(std::move(cdf)), tail_rate_(tail_rate) {
        if (!(tail_rate_ > 0.0)) throw DomainError("inverse cdf: tail rate must be positive");
        const auto& v = cdf_.values();
        if (v.front() < 0.0 || v.back() > 1.0 + 1e-12)
            throw DomainError("inverse cdf: values must lie in [0, 1]");
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] < v[i - 1]) throw MonotonicityViolation("cdf", i, cdf_.points()[i]);
    }

    const Grid& cdf() const noexcept { return cdf_; }
    double tail_rate() const noexcept { return tail_rate_; }

    double operator()(double u) const {
        const auto& t = cdf_.points();
        const auto& v = cdf_.values();
        if (u <= v.front()) return t.front();
        if (u > v.back()) {
            const double rest = 1.0 - v.back();
            if (!(rest > 0.0)) return t.back();
            return t.back() + std::log(rest / (1.0 - u)) / tail_rate_;
        }
        const auto it = std::lower_bound(v.begin(), v.end(), u);
        const auto j = static_cast<std::size_t>(it - v.begin());
        const double w = (u - v[j - 1]) / (v[j] - v[j - 1]);
        return t[j - 1] + w * (t[j] - t[j - 1]);
    }

private:
    Grid cdf_;
    double tail_rate_ = 1.0;
};

/// One-shot inverse-CDF draw; validates the table on every call.
inline double inverse_cdf_sample(const Grid& cdf, double tail_rate, double uniform) {
    if (!(uniform > 0.0 && uniform < 1.0))
        throw DomainError("inverse_cdf_sample: uniform must lie in (0, 1)");
    return TabulatedInverseCdf(cdf, tail_rate)(uniform);
}

}  // namespace excursion
