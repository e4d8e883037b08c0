// Empirical survival functions and log-linear tail fits P(T >= t) ~ C exp(-theta t).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "excursion/errors.hpp"
#include "excursion/numerics.hpp"
#include "excursion/parallel.hpp"

namespace excursion {

/// Right-continuous step function S(t) = #{samples > t} / n.
class EmpiricalSurvival {
public:
    explicit EmpiricalSurvival(std::vector<double> samples, std::size_t min_samples = 100)
        : sorted_(std::move(samples)) {
        if (sorted_.size() < min_samples)
            throw DomainError("empirical_survival: need at least " + std::to_string(min_samples) +
                              " samples");
        for (double x : sorted_)
            if (!(x > 0.0) || !std::isfinite(x))
                throw DomainError("empirical_survival: samples must be positive and finite");
        std::sort(sorted_.begin(), sorted_.end());
    }

    double operator()(double t) const {
        const auto above = sorted_.end() - std::upper_bound(sorted_.begin(), sorted_.end(), t);
        return static_cast<double>(above) / static_cast<double>(sorted_.size());
    }

    /// Number of samples strictly greater than t.
    std::size_t exceedances(double t) const {
        return static_cast<std::size_t>(sorted_.end() -
                                        std::upper_bound(sorted_.begin(), sorted_.end(), t));
    }

    const std::vector<double>& sorted() const noexcept { return sorted_; }
    std::size_t size() const noexcept { return sorted_.size(); }

    /// S evaluated at the distinct sample points.
    Grid to_grid() const {
        std::vector<double> pts, vals;
        const double n = static_cast<double>(sorted_.size());
        for (std::size_t i = 0; i < sorted_.size(); ++i) {
            if (i + 1 < sorted_.size() && sorted_[i + 1] == sorted_[i]) continue;
            pts.push_back(sorted_[i]);
            vals.push_back(static_cast<double>(sorted_.size() - i - 1) / n);
        }
        if (pts.size() < 2) throw DomainError("empirical_survival: need two distinct samples");
        return Grid(std::move(pts), std::move(vals));
    }

private:
    std::vector<double> sorted_;
};

inline EmpiricalSurvival empirical_survival(std::vector<double> samples, std::size_t min_samples = 100) {
    return EmpiricalSurvival(std::move(samples), min_samples);
}

struct SurvivalFit {
    double theta = 0.0;
    double intercept = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::size_t n_points = 0;
    double r_squared = 0.0;
};

/// OLS of ln S on t over the given points; theta is the negated slope.
inline SurvivalFit fit_log_linear(const std::vector<double>& t, const std::vector<double>& survival) {
    if (t.size() != survival.size()) throw DomainError("fit_log_linear: size mismatch");
    if (t.size() < 10) throw FitError("fit window has " + std::to_string(t.size()) + " points, need >= 10");
    const double n = static_cast<double>(t.size());
    double mt = 0.0, my = 0.0;
    std::vector<double> y(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(survival[i] > 0.0)) throw FitError("fit_log_linear: survival must be positive");
        y[i] = std::log(survival[i]);
        mt += t[i];
        my += y[i];
    }
    mt /= n;
    my /= n;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        stt += (t[i] - mt) * (t[i] - mt);
        sty += (t[i] - mt) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(stt > 0.0)) throw FitError("fit_log_linear: degenerate time window");
    const double slope = sty / stt;
    if (!(slope < 0.0)) throw FitError("fit_log_linear: non-decaying survival");
    SurvivalFit fit;
    fit.theta = -slope;
    fit.intercept = my - slope * mt;
    fit.t_lo = t.front();
    fit.t_hi = t.back();
    fit.n_points = t.size();
    fit.r_squared = syy > 0.0 ? std::clamp(sty * sty / (stt * syy), 0.0, 1.0) : 1.0;
    return fit;
}

/// Fits over {t : S(t) <= 1/2 and #{samples > t} >= min_tail_count}, using the
/// distinct sample points as abscissae.
inline SurvivalFit fit_persistency(const EmpiricalSurvival& surv, std::size_t min_tail_count = 50) {
    const auto& x = surv.sorted();
    const std::size_t n = x.size();
    std::vector<double> t, s;
    for (std::size_t i = 0; i < n; ++i) {
        if (i + 1 < n && x[i + 1] == x[i]) continue;
        const std::size_t above = n - i - 1;
        if (above < min_tail_count) break;
        if (2 * above > n) continue;
        t.push_back(x[i]);
        s.push_back(static_cast<double>(above) / static_cast<double>(n));
    }
    return fit_log_linear(t, s);
}

inline SurvivalFit fit_persistency(std::vector<double> samples, std::size_t min_tail_count = 50) {
    return fit_persistency(EmpiricalSurvival(std::move(samples)), min_tail_count);
}

struct BatchEstimate {
    double mean_theta = 0.0;
    double half_width = 0.0;
    std::vector<SurvivalFit> replicates;
};

/// Two-sided 95% Student-t quantile with the given degrees of freedom.
inline double t_quantile_975(double dof) {
    return boost::math::quantile(boost::math::students_t(dof), 0.975);
}

/// Mean and 95% t half-width over replicate fits.
inline BatchEstimate summarize(std::vector<SurvivalFit> fits) {
    if (fits.size() < 2) throw DomainError("batch_ci: need at least two replicates");
    BatchEstimate est;
    const double n = static_cast<double>(fits.size());
    double sum = 0.0;
    for (const auto& f : fits) sum += f.theta;
    est.mean_theta = sum / n;
    double ss = 0.0;
    for (const auto& f : fits) ss += (f.theta - est.mean_theta) * (f.theta - est.mean_theta);
    est.half_width = t_quantile_975(n - 1.0) * std::sqrt(ss / (n - 1.0) / n);
    est.replicates = std::move(fits);
    return est;
}

/// Runs `runner(seed_r)` for r = 0..reps-1 with seed_r = derive_seed(seed, r).
/// A FitError from a replicate is rethrown carrying its index.
inline BatchEstimate batch_ci(const std::function<SurvivalFit(std::uint64_t)>& runner, std::size_t reps,
                              std::uint64_t seed) {
    if (reps < 2) throw DomainError("batch_ci: reps must be >= 2");
    std::vector<SurvivalFit> fits(reps);
    parallel_for(reps, [&](std::size_t r) {
        try {
            fits[r] = runner(derive_seed(seed, r));
        } catch (const FitError& e) {
            throw FitError(std::string(e.what()) + " (replicate " + std::to_string(r) + ")",
                           static_cast<long>(r));
        }
    });
    return summarize(std::move(fits));
}

}  // namespace excursion
