// Binary switch processes: the +/-1 process that alternates after independent
// holding times T+ (in state +1) and T- (in state -1).
//
// The non-stationary process D(t) starts at the origin in state delta. The
// stationary process D~(t) starts in state delta with probability proportional
// to the state's mean holding time and first switches after a delay A whose
// density is (1 - F_delta(t)) / mu_delta.
//
// Laplace-domain identities for the expected value, the stationary covariance,
// the recovery of the holding-time transforms and the switch counts live here
// too; they are the closed-form side of every Monte Carlo check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "excursion/errors.hpp"
#include "excursion/numerics.hpp"
#include "excursion/parallel.hpp"

namespace excursion {

/// One holding-time law: sampler, CDF, mean and Laplace transform Psi(s) = E exp(-s T).
struct IntervalDistribution {
    std::string label;
    std::function<double(Rng&)> sampler;
    std::function<double(double)> cdf;
    double mean;
    LaplaceEvaluable psi;

    double sample(Rng& rng) const { return sampler(rng); }
};

inline IntervalDistribution exponential_interval(double rate) {
    if (!(rate > 0.0)) throw DomainError("exponential_interval: rate must be positive");
    return IntervalDistribution{
        "exp:" + std::to_string(rate),
        [rate](Rng& rng) { return -std::log(uniform_open(rng)) / rate; },
        [rate](double t) { return t <= 0.0 ? 0.0 : -std::expm1(-rate * t); },
        1.0 / rate,
        LaplaceEvaluable::closed_form([rate](double s) { return rate / (rate + s); }),
    };
}

/// Sum of `shape` independent Exp(rate) holding times.
inline IntervalDistribution erlang_interval(int shape, double rate) {
    if (shape < 1) throw DomainError("erlang_interval: shape must be >= 1");
    if (!(rate > 0.0)) throw DomainError("erlang_interval: rate must be positive");
    return IntervalDistribution{
        "erlang:" + std::to_string(shape) + ":" + std::to_string(rate),
        [shape, rate](Rng& rng) {
            double sum = 0.0;
            for (int i = 0; i < shape; ++i) sum -= std::log(uniform_open(rng));
            return sum / rate;
        },
        [shape, rate](double t) {
            if (t <= 0.0) return 0.0;
            double term = 1.0, acc = 0.0;
            for (int k = 0; k < shape; ++k) {
                if (k > 0) term *= rate * t / k;
                acc += term;
            }
            return std::clamp(1.0 - std::exp(-rate * t) * acc, 0.0, 1.0);
        },
        shape / rate,
        LaplaceEvaluable::closed_form([shape, rate](double s) { return std::pow(rate / (rate + s), shape); }),
    };
}

/// Point mass at `length`.
inline IntervalDistribution deterministic_interval(double length) {
    if (!(length > 0.0)) throw DomainError("deterministic_interval: length must be positive");
    return IntervalDistribution{
        "det:" + std::to_string(length),
        [length](Rng&) { return length; },
        [length](double t) { return t >= length ? 1.0 : 0.0; },
        length,
        LaplaceEvaluable::closed_form([length](double s) { return std::exp(-s * length); }),
    };
}

/// Parses "exp:RATE", "erlang:SHAPE:RATE" or "det:LENGTH".
inline IntervalDistribution parse_interval(const std::string& spec) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = spec.find(':', start);
        parts.push_back(spec.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    try {
        if (parts[0] == "exp" && parts.size() == 2) return exponential_interval(std::stod(parts[1]));
        if (parts[0] == "erlang" && parts.size() == 3)
            return erlang_interval(std::stoi(parts[1]), std::stod(parts[2]));
        if (parts[0] == "det" && parts.size() == 2) return deterministic_interval(std::stod(parts[1]));
    } catch (const DomainError&) {
        throw;
    } catch (const std::logic_error&) {
        // std::stod / std::stoi failures fall through to the error below.
    }
    throw DomainError("cannot parse interval distribution '" + spec + "'");
}

// ---------------------------------------------------------------------------
// Paths and simulation
// ---------------------------------------------------------------------------

struct SwitchPath {
    int initial_state = 1;
    std::vector<double> switch_epochs;
    double horizon = 0.0;
    std::optional<double> stationary_delay;

    /// Number of switches in (0, t].
    std::size_t switches_up_to(double t) const {
        return static_cast<std::size_t>(
            std::upper_bound(switch_epochs.begin(), switch_epochs.end(), t) - switch_epochs.begin());
    }

    int state_at(double t) const { return switches_up_to(t) % 2 == 0 ? initial_state : -initial_state; }
};

namespace detail {

inline void fill_epochs(const IntervalDistribution& plus, const IntervalDistribution& minus,
                        int state, double t, double horizon, Rng& rng, std::vector<double>& epochs) {
    for (;;) {
        t += (state > 0 ? plus : minus).sample(rng);
        if (t > horizon) return;
        epochs.push_back(t);
        state = -state;
    }
}

}  // namespace detail

/// Non-stationary switch process on [0, horizon], initial state +1 with probability p0.
inline SwitchPath simulate_switch(const IntervalDistribution& plus, const IntervalDistribution& minus,
                                  double p0, double horizon, std::uint64_t seed) {
    if (!(horizon > 0.0)) throw DomainError("simulate_switch: horizon must be positive");
    if (!(p0 >= 0.0 && p0 <= 1.0)) throw DomainError("simulate_switch: p0 must be a probability");
    Rng rng = make_rng(seed);
    SwitchPath path;
    path.horizon = horizon;
    path.initial_state = uniform_open(rng) < p0 ? 1 : -1;
    detail::fill_epochs(plus, minus, path.initial_state, 0.0, horizon, rng, path.switch_epochs);
    return path;
}

/// CDF of the stationary delay, (1/mu) * int_0^t (1 - F(x)) dx, by cumulative
/// trapezoid on the given points (which must start at 0).
inline std::vector<double> integrated_tail_cdf(const IntervalDistribution& dist,
                                               const std::vector<double>& points) {
    std::vector<double> out(points.size(), 0.0);
    double prev = 1.0 - dist.cdf(points.front());
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double cur = 1.0 - dist.cdf(points[i]);
        out[i] = out[i - 1] + 0.5 * (prev + cur) * (points[i] - points[i - 1]) / dist.mean;
        prev = cur;
    }
    return out;
}

/// Inverse-CDF sampler of the stationary delay for one holding-time law.
inline TabulatedInverseCdf stationary_delay_sampler(const IntervalDistribution& dist) {
    double horizon = dist.mean;
    while (1.0 - dist.cdf(horizon) > 1e-12 && horizon < 1e4 * dist.mean) horizon *= 2.0;
    const double step = dist.mean / 200.0;
    auto points = Grid::uniform_points(std::ceil(horizon / step) * step, step);
    auto cdf = integrated_tail_cdf(dist, points);
    const double total = cdf.back();
    if (!(total > 0.0)) throw NumericalError("stationary delay: degenerate integrated tail");
    // Trapezoid error leaves the total within O(step^2) of one; renormalize.
    for (double& v : cdf) v = std::min(v / total, 1.0);
    Grid g(std::move(points), std::move(cdf));
    const double rate = fit_exponential_tail(g, 1.0).rate;
    return TabulatedInverseCdf(std::move(g), rate);
}

/// Stationary switch process simulator; builds the delay tables once.
class StationarySwitchSimulator {
public:
    StationarySwitchSimulator(IntervalDistribution plus, IntervalDistribution minus)
        : plus_(std::move(plus)),
          minus_(std::move(minus)),
          delay_plus_(stationary_delay_sampler(plus_)),
          delay_minus_(stationary_delay_sampler(minus_)),
          p_plus_(plus_.mean / (plus_.mean + minus_.mean)) {
        if (!std::isfinite(plus_.mean) || !std::isfinite(minus_.mean))
            throw DomainError("stationary switch: holding-time means must be finite");
    }

    double probability_plus() const noexcept { return p_plus_; }

    SwitchPath simulate(double horizon, std::uint64_t seed) const {
        if (!(horizon > 0.0)) throw DomainError("simulate_stationary_switch: horizon must be positive");
        Rng rng = make_rng(seed);
        SwitchPath path;
        path.horizon = horizon;
        path.initial_state = uniform_open(rng) < p_plus_ ? 1 : -1;
        const double delay = (path.initial_state > 0 ? delay_plus_ : delay_minus_)(uniform_open(rng));
        path.stationary_delay = delay;
        if (delay <= horizon) {
            path.switch_epochs.push_back(delay);
            detail::fill_epochs(plus_, minus_, -path.initial_state, delay, horizon, rng,
                                path.switch_epochs);
        }
        return path;
    }

private:
    IntervalDistribution plus_;
    IntervalDistribution minus_;
    TabulatedInverseCdf delay_plus_;
    TabulatedInverseCdf delay_minus_;
    double p_plus_;
};

inline SwitchPath simulate_stationary_switch(const IntervalDistribution& plus,
                                             const IntervalDistribution& minus, double horizon,
                                             std::uint64_t seed) {
    return StationarySwitchSimulator(plus, minus).simulate(horizon, seed);
}

/// `count` independent paths; path i uses derive_seed(seed, i).
inline std::vector<SwitchPath> simulate_switch_batch(const IntervalDistribution& plus,
                                                     const IntervalDistribution& minus, double p0,
                                                     double horizon, std::size_t count,
                                                     std::uint64_t seed) {
    std::vector<SwitchPath> paths(count);
    parallel_for(count, [&](std::size_t i) {
        paths[i] = simulate_switch(plus, minus, p0, horizon, derive_seed(seed, i));
    });
    return paths;
}

inline std::vector<SwitchPath> simulate_stationary_batch(const IntervalDistribution& plus,
                                                         const IntervalDistribution& minus,
                                                         double horizon, std::size_t count,
                                                         std::uint64_t seed) {
    const StationarySwitchSimulator sim(plus, minus);
    std::vector<SwitchPath> paths(count);
    parallel_for(count, [&](std::size_t i) { paths[i] = sim.simulate(horizon, derive_seed(seed, i)); });
    return paths;
}

// ---------------------------------------------------------------------------
// Laplace-domain characteristics
// ---------------------------------------------------------------------------

namespace detail {

inline void require_positive_s(double s, const char* who) {
    if (!(s > 0.0)) throw DomainError(std::string(who) + ": s must be positive");
}

inline void require_delta(int delta, const char* who) {
    if (delta != 1 && delta != -1) throw DomainError(std::string(who) + ": delta must be +1 or -1");
}

// (1 - Psi+)(1 - Psi-) / (1 - Psi+ Psi-)
inline double renewal_ratio(double pp, double pm) { return (1.0 - pp) * (1.0 - pm) / (1.0 - pp * pm); }

}  // namespace detail

/// Laplace transform of P_delta(t) = P(D(t) = 1 | delta) for the non-stationary process.
inline double laplace_P_delta(const IntervalDistribution& plus, const IntervalDistribution& minus,
                              int delta, double s) {
    detail::require_positive_s(s, "laplace_P_delta");
    detail::require_delta(delta, "laplace_P_delta");
    const double pp = plus.psi(s), pm = minus.psi(s);
    return (1.0 - pp) / (s * (1.0 - pp * pm)) * (delta == 1 ? 1.0 : pm);
}

/// Laplace transform of E_delta(t) = E(D(t) | delta) for the non-stationary process.
inline double laplace_E_delta(const IntervalDistribution& plus, const IntervalDistribution& minus,
                              int delta, double s) {
    detail::require_positive_s(s, "laplace_E_delta");
    detail::require_delta(delta, "laplace_E_delta");
    const double pp = plus.psi(s), pm = minus.psi(s);
    return (pm - pp + delta * (1.0 - pm) * (1.0 - pp)) / (s * (1.0 - pp * pm));
}

/// Laplace transform of P~_delta(t) = P(D~(t) = 1 | D~(0) = delta) for the stationary process.
inline double laplace_stationary_P(const IntervalDistribution& plus, const IntervalDistribution& minus,
                                   int delta, double s) {
    detail::require_positive_s(s, "laplace_stationary_P");
    detail::require_delta(delta, "laplace_stationary_P");
    const double g = detail::renewal_ratio(plus.psi(s), minus.psi(s));
    if (delta == 1) return (1.0 - g / (plus.mean * s)) / s;
    return g / (minus.mean * s * s);
}

/// Laplace transform of the stationary covariance R(t) = Cov(D~(0), D~(t)).
inline double laplace_stationary_cov(const IntervalDistribution& plus, const IntervalDistribution& minus,
                                     double s) {
    detail::require_positive_s(s, "laplace_stationary_cov");
    const double mp = plus.mean, mm = minus.mean, total = mp + mm;
    const double g = detail::renewal_ratio(plus.psi(s), minus.psi(s));
    return 4.0 / (s * total) * (mp * mm / total - g / s);
}

/// Holding-time transforms recovered from the transforms of E_+' and E_-'.
inline std::pair<double, double> recover_psi(const LaplaceEvaluable& laplace_e_plus_prime,
                                             const LaplaceEvaluable& laplace_e_minus_prime, double s) {
    detail::require_positive_s(s, "recover_psi");
    const double lp = laplace_e_plus_prime(s);
    const double lm = laplace_e_minus_prime(s);
    const double den_plus = lm - 2.0;
    const double den_minus = lp + 2.0;
    if (std::abs(den_plus) < 1e-14 || std::abs(den_minus) < 1e-14)
        throw NumericalError("recover_psi: vanishing denominator at s=" + std::to_string(s));
    return {lp / den_plus, lm / den_minus};
}

/// Laplace transform of A_<(t) = E((1 - D~(t))/2 * (1 - D~(0))/2).
inline double laplace_A_less(const IntervalDistribution& plus, const IntervalDistribution& minus,
                             double s) {
    detail::require_positive_s(s, "laplace_A_less");
    const double g = detail::renewal_ratio(plus.psi(s), minus.psi(s));
    return (minus.mean - g / s) / (s * (plus.mean + minus.mean));
}

/// Laplace transform of N_<(t) = E(N~(t) | delta = -1), the mean switch count from state -1.
inline double laplace_N_less(const IntervalDistribution& plus, const IntervalDistribution& minus,
                             double s) {
    detail::require_positive_s(s, "laplace_N_less");
    const double pp = plus.psi(s), pm = minus.psi(s);
    return (1.0 + pp) * (1.0 - pm) / (s * s * minus.mean * (1.0 - pp * pm));
}

/// Laplace transform of N_>(t) = E(N~(t) | delta = +1).
inline double laplace_N_greater(const IntervalDistribution& plus, const IntervalDistribution& minus,
                                double s) {
    detail::require_positive_s(s, "laplace_N_greater");
    const double pp = plus.psi(s), pm = minus.psi(s);
    return (1.0 + pm) * (1.0 - pp) / (s * s * plus.mean * (1.0 - pp * pm));
}

// ---------------------------------------------------------------------------
// Switch-count distribution of the stationary process
// ---------------------------------------------------------------------------

/// Uniform convolution grid on [0, t] with at least 200 points per mean holding time.
inline std::vector<double> switch_count_grid(const IntervalDistribution& plus,
                                             const IntervalDistribution& minus, double t) {
    const double h0 = std::min(plus.mean, minus.mean) / 200.0;
    const auto n = static_cast<std::size_t>(std::max(2.0, std::ceil(t / h0)));
    std::vector<double> pts(n + 1);
    for (std::size_t i = 0; i <= n; ++i) pts[i] = t * static_cast<double>(i) / static_cast<double>(n);
    pts.back() = t;
    return pts;
}

namespace detail {

// CDF of X + T on the grid, X with CDF `c` and T with CDF values `f` on the same
// uniform grid: sum_j (F_{j+1} - F_j) * C(t_n - t_{j+1/2}), midpoint rule.
inline std::vector<double> convolve_cdf(const std::vector<double>& c, const std::vector<double>& f) {
    const std::size_t n = c.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        double acc = f[0] * c[m];
        for (std::size_t j = 0; j < m; ++j) {
            const double mass = f[j + 1] - f[j];
            acc += mass * 0.5 * (c[m - j - 1] + c[m - j]);
        }
        out[m] = acc;
    }
    return out;
}

}  // namespace detail

/// P(N~(t) = k | D~(0) = delta) for k = 0, 1, ... until the remaining mass is negligible.
///
/// With S_k the epoch of the k-th switch, the parity cases reduce to
/// P(N = k) = C_{k-1}(t) - C_k(t), where C_0 = F_{A|delta} and C_k is C_{k-1}
/// convolved with the holding-time law of the state entered at the k-th switch
/// (F_{-delta} for odd k, F_{delta} for even k); P(N = 0) = 1 - F_{A|delta}(t).
inline std::vector<double> switch_count_distribution(const IntervalDistribution& plus,
                                                     const IntervalDistribution& minus, int delta,
                                                     double t) {
    detail::require_delta(delta, "switch_count_pmf");
    if (!(t > 0.0)) throw DomainError("switch_count_pmf: t must be positive");
    const auto pts = switch_count_grid(plus, minus, t);
    const IntervalDistribution& own = delta == 1 ? plus : minus;
    const IntervalDistribution& other = delta == 1 ? minus : plus;

    auto tabulate = [&](const IntervalDistribution& d) {
        std::vector<double> v(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) v[i] = d.cdf(pts[i]);
        return v;
    };
    const auto f_own = tabulate(own);
    const auto f_other = tabulate(other);

    std::vector<double> cdf = integrated_tail_cdf(own, pts);
    std::vector<double> pmf{1.0 - cdf.back()};
    constexpr std::size_t max_switches = 100000;
    for (std::size_t k = 1; k <= max_switches; ++k) {
        auto next = detail::convolve_cdf(cdf, k % 2 == 1 ? f_other : f_own);
        pmf.push_back(cdf.back() - next.back());
        cdf = std::move(next);
        if (cdf.back() < 1e-14) break;
    }
    double positive = 0.0, negative = 0.0;
    for (double p : pmf) (p >= 0.0 ? positive : negative) += p;
    if (std::abs(positive - 1.0) > 1e-3 || negative < -1e-3)
        throw NumericalError("switch_count_pmf: grid too coarse (mass " + std::to_string(positive) + ")");
    return pmf;
}

inline double switch_count_pmf(const IntervalDistribution& plus, const IntervalDistribution& minus,
                               int delta, std::size_t k, double t) {
    const auto pmf = switch_count_distribution(plus, minus, delta, t);
    return k < pmf.size() ? pmf[k] : 0.0;
}

// ---------------------------------------------------------------------------
// Monte Carlo characteristic estimation
// ---------------------------------------------------------------------------

struct CharacteristicEstimate {
    std::vector<double> grid;
    std::vector<double> p_plus, p_minus;
    std::vector<double> e_plus, e_minus;
    std::vector<double> covariance;
    std::vector<double> counts_plus, counts_minus;
    std::vector<double> p_plus_se, p_minus_se;
    std::vector<double> e_plus_se, e_minus_se;
    std::vector<double> covariance_se;
    std::vector<double> counts_plus_se, counts_minus_se;
    std::size_t n_plus = 0, n_minus = 0;
};

/// Pointwise Monte Carlo estimates of P_delta, E_delta, R and E(N(t) | delta).
/// Standard errors are CLT-based (binomial for probabilities).
inline CharacteristicEstimate estimate_characteristics(const std::vector<SwitchPath>& paths,
                                                       const std::vector<double>& grid) {
    if (paths.size() < 2) throw DomainError("estimate_characteristics: need at least two paths");
    if (grid.empty()) throw DomainError("estimate_characteristics: empty grid");
    const std::size_t m = grid.size();
    struct Acc {
        std::vector<double> s, s2;
        explicit Acc(std::size_t m) : s(m, 0.0), s2(m, 0.0) {}
        void add(std::size_t i, double x) {
            s[i] += x;
            s2[i] += x * x;
        }
    };
    Acc up(m), um(m), cp(m), cm(m), d0dt(m), dt(m);
    double n_plus = 0, n_minus = 0, sum_d0 = 0;
    for (const auto& path : paths) {
        const int d0 = path.initial_state;
        (d0 > 0 ? n_plus : n_minus) += 1;
        sum_d0 += d0;
        std::size_t k = 0;
        for (std::size_t i = 0; i < m; ++i) {
            while (k < path.switch_epochs.size() && path.switch_epochs[k] <= grid[i]) ++k;
            const int state = k % 2 == 0 ? d0 : -d0;
            (d0 > 0 ? up : um).add(i, state);
            (d0 > 0 ? cp : cm).add(i, static_cast<double>(k));
            d0dt.add(i, d0 * state);
            dt.add(i, state);
        }
    }
    const double n = static_cast<double>(paths.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CharacteristicEstimate est;
    est.grid = grid;
    est.n_plus = static_cast<std::size_t>(n_plus);
    est.n_minus = static_cast<std::size_t>(n_minus);
    auto mean_se = [&](const Acc& a, double cnt, std::size_t i) -> std::pair<double, double> {
        if (cnt < 1) return {nan, nan};
        const double mu = a.s[i] / cnt;
        const double var = cnt > 1 ? std::max(0.0, (a.s2[i] - cnt * mu * mu) / (cnt - 1)) : 0.0;
        return {mu, std::sqrt(var / cnt)};
    };
    for (std::size_t i = 0; i < m; ++i) {
        auto [ep, ep_se] = mean_se(up, n_plus, i);
        auto [em, em_se] = mean_se(um, n_minus, i);
        est.e_plus.push_back(ep);
        est.e_plus_se.push_back(ep_se);
        est.e_minus.push_back(em);
        est.e_minus_se.push_back(em_se);
        // P(D = 1) = (1 + E D) / 2 within each conditioning class.
        const double pp = 0.5 * (1.0 + ep), pm = 0.5 * (1.0 + em);
        est.p_plus.push_back(pp);
        est.p_plus_se.push_back(n_plus > 0 ? std::sqrt(pp * (1.0 - pp) / n_plus) : nan);
        est.p_minus.push_back(pm);
        est.p_minus_se.push_back(n_minus > 0 ? std::sqrt(pm * (1.0 - pm) / n_minus) : nan);
        auto [np, np_se] = mean_se(cp, n_plus, i);
        auto [nm, nm_se] = mean_se(cm, n_minus, i);
        est.counts_plus.push_back(np);
        est.counts_plus_se.push_back(np_se);
        est.counts_minus.push_back(nm);
        est.counts_minus_se.push_back(nm_se);
        auto [prod, prod_se] = mean_se(d0dt, n, i);
        const double mean_t = dt.s[i] / n;
        est.covariance.push_back(prod - (sum_d0 / n) * mean_t);
        est.covariance_se.push_back(prod_se);
    }
    return est;
}

}  // namespace excursion
