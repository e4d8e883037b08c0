// Slepian-based independent interval approximation.
//
// The clipped Slepian expectations E_u^+ and E_u^- play the role of the switch
// process expected values E_+ and E_-. When they are monotone the excursion
// lengths above and below u are approximated by geometric sums
//
//   T+ = X + sum_{k=1}^{nu_alpha - 1} Y_k,   T- = Y + sum_{k=1}^{nu_beta - 1} X_k,
//
// with alpha = Phi(u), beta = 1 - Phi(u), F_X = (1 - E_u^+) / (2 alpha) and
// F_Y = (1 + E_u^-) / (2 beta).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "excursion/covariance.hpp"
#include "excursion/errors.hpp"
#include "excursion/numerics.hpp"
#include "excursion/parallel.hpp"
#include "excursion/slepian.hpp"
#include "excursion/switchproc.hpp"

namespace excursion {

enum class Side { above, below };

inline const char* to_string(Side side) { return side == Side::above ? "above" : "below"; }

struct GridSpec {
    double t_max = 200.0;
    double step = 0.01;
};

/// Per-step increase tolerated in a curve that must be monotone.
inline constexpr double kMonotonicityTolerance = 1e-12;

struct IIAModel {
    double level = 0.0;
    double alpha = 0.5;
    double beta = 0.5;
    Grid f_x_cdf;
    Grid f_y_cdf;
    double tail_rate_x = 1.0;
    double tail_rate_y = 1.0;
    std::string model_name;
    Grid e_plus;
    Grid e_minus;
    TabulatedInverseCdf inverse_x;
    TabulatedInverseCdf inverse_y;
};

/// Tabulates E_u^+ and E_u^- on [0, t_max] (limits 1 and -1 at t = 0).
inline std::pair<Grid, Grid> tabulate_expected_clipped(const CovarianceModel& model, double u,
                                                       const GridSpec& spec) {
    auto pts = Grid::uniform_points(spec.t_max, spec.step);
    std::vector<double> up(pts.size()), down(pts.size());
    up[0] = 1.0;
    down[0] = -1.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        up[i] = expected_clipped_up(model, u, pts[i]);
        down[i] = expected_clipped_down(model, u, pts[i]);
    }
    return {Grid(pts, std::move(up)), Grid(pts, std::move(down))};
}

inline IIAModel build_iia(const CovarianceModel& model, double u, const GridSpec& spec = {}) {
    if (!std::isfinite(u)) throw DomainError("build_iia: level must be finite");
    auto [e_plus, e_minus] = tabulate_expected_clipped(model, u, spec);
    const auto& pts = e_plus.points();
    const auto& ep = e_plus.values();
    const auto& em = e_minus.values();

    const double limit = one_minus_two_cdf(u);
    if (std::abs(ep.back() - limit) >= 1e-6 || std::abs(em.back() - limit) >= 1e-6)
        throw GridTooShort("build_iia: E_u at t_max=" + std::to_string(spec.t_max) +
                           " is not within 1e-6 of its limit; increase the grid length");

    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (ep[i] - ep[i - 1] > kMonotonicityTolerance)
            throw MonotonicityViolation("E_plus", i, pts[i]);
    }
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (em[i - 1] - em[i] > kMonotonicityTolerance)
            throw MonotonicityViolation("E_minus", i, pts[i]);
    }

    IIAModel iia;
    iia.level = u;
    iia.alpha = norm_cdf(u);
    iia.beta = norm_cdf(-u);
    iia.model_name = model.name;

    std::vector<double> fx(pts.size()), fy(pts.size());
    double run_x = 0.0, run_y = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        // The running maximum absorbs sub-tolerance round-off wiggles.
        run_x = std::max(run_x, std::clamp((1.0 - ep[i]) / (2.0 * iia.alpha), 0.0, 1.0));
        run_y = std::max(run_y, std::clamp((1.0 + em[i]) / (2.0 * iia.beta), 0.0, 1.0));
        fx[i] = run_x;
        fy[i] = run_y;
    }
    if (fx.back() < 1.0 - 1e-6 || fy.back() < 1.0 - 1e-6)
        throw GridTooShort("build_iia: divisor CDFs do not reach 1 - 1e-6 at t_max");

    iia.f_x_cdf = Grid(pts, std::move(fx));
    iia.f_y_cdf = Grid(pts, std::move(fy));
    iia.tail_rate_x = fit_exponential_tail(iia.f_x_cdf, 1.0).rate;
    iia.tail_rate_y = fit_exponential_tail(iia.f_y_cdf, 1.0).rate;
    iia.inverse_x = TabulatedInverseCdf(iia.f_x_cdf, iia.tail_rate_x);
    iia.inverse_y = TabulatedInverseCdf(iia.f_y_cdf, iia.tail_rate_y);
    iia.e_plus = std::move(e_plus);
    iia.e_minus = std::move(e_minus);
    return iia;
}

/// Draws from the geometric law on {1, 2, ...} with success probability p.
inline std::uint64_t geometric_draw(double p, Rng& rng) {
    if (p >= 1.0) return 1;
    const double k = std::floor(std::log(uniform_open(rng)) / std::log1p(-p));
    return 1 + static_cast<std::uint64_t>(k);
}

namespace detail {
inline constexpr std::size_t kSampleChunk = 1 << 15;
}  // namespace detail

/// n draws of the geometric-sum excursion length on one side. Chunk c of
/// 2^15 draws uses derive_seed(seed, c), so output is thread-count invariant.
inline std::vector<double> sample_excursion(const IIAModel& iia, Side side, std::size_t n,
                                            std::uint64_t seed) {
    const bool above = side == Side::above;
    const double p = above ? iia.alpha : iia.beta;
    const TabulatedInverseCdf& first = above ? iia.inverse_x : iia.inverse_y;
    const TabulatedInverseCdf& other = above ? iia.inverse_y : iia.inverse_x;
    std::vector<double> out(n);
    const std::size_t chunks = (n + detail::kSampleChunk - 1) / detail::kSampleChunk;
    parallel_for(chunks, [&](std::size_t c) {
        Rng rng = make_rng(derive_seed(seed, c));
        const std::size_t lo = c * detail::kSampleChunk;
        const std::size_t hi = std::min(n, lo + detail::kSampleChunk);
        for (std::size_t i = lo; i < hi; ++i) {
            const std::uint64_t nu = geometric_draw(p, rng);
            double total = first(uniform_open(rng));
            for (std::uint64_t k = 1; k < nu; ++k) total += other(uniform_open(rng));
            out[i] = total;
        }
    });
    return out;
}

/// Laplace transform of E' from the tabulated E, by the initial-value shift
/// L(E')(s) = s L(E)(s) - E(0+).
inline LaplaceEvaluable laplace_derivative(const Grid& e, double asymptote) {
    const ExponentialTail tail = fit_exponential_tail(e, asymptote);
    const double e0 = e.values().front();
    auto tabulated = LaplaceEvaluable::tabulated(e, tail);
    return LaplaceEvaluable::closed_form(
        [tabulated, e0](double s) { return s * tabulated(s) - e0; });
}

/// Laplace transform E exp(-s T) of the approximated excursion length.
inline double psi_hat(const IIAModel& iia, Side side, double s) {
    if (!(s > 0.0)) throw DomainError("psi_hat: s must be positive");
    const double limit = one_minus_two_cdf(iia.level);
    const auto lp = laplace_derivative(iia.e_plus, limit);
    const auto lm = laplace_derivative(iia.e_minus, limit);
    const auto [plus, minus] = recover_psi(lp, lm, s);
    return side == Side::above ? plus : minus;
}

/// CDF of the approximated excursion length at t by Gaver-Stehfest inversion of psi_hat(s)/s.
inline double iia_cdf_inverted(const IIAModel& iia, Side side, double t, int order = 14) {
    return gaver_stehfest_invert([&](double s) { return psi_hat(iia, side, s) / s; }, t, order);
}

}  // namespace excursion
