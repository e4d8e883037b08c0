#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "excursion/parallel.hpp"
#include "excursion/persistency.hpp"

using namespace excursion;

namespace {

std::vector<double> exponential_samples(double rate, std::size_t n, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::vector<double> xs(n);
    for (double& x : xs) x = -std::log(uniform_open(rng)) / rate;
    return xs;
}

}  // namespace

TEST(EmpiricalSurvival, Counting) {
    const auto s = empirical_survival({1.0, 2.0, 3.0, 4.0}, 1);
    EXPECT_EQ(s(2.5), 0.5);
    EXPECT_EQ(s(0.0), 1.0);
    EXPECT_EQ(s(4.0), 0.0);
    EXPECT_EQ(s(2.0), 0.5);
    EXPECT_EQ(s.exceedances(1.5), 3u);
    const auto g = s.to_grid();
    EXPECT_EQ(g.values().back(), 0.0);
}

TEST(EmpiricalSurvival, Preconditions) {
    EXPECT_THROW(empirical_survival(std::vector<double>(99, 1.0)), DomainError);
    std::vector<double> bad(200, 1.0);
    bad[7] = -1.0;
    EXPECT_THROW(empirical_survival(bad), DomainError);
}

TEST(EmpiricalSurvival, ConvergesToExponential) {
    const auto s = empirical_survival(exponential_samples(1.0, 1000000, 1));
    double worst = 0.0;
    for (double t = 0.0; t < 10.0; t += 0.01) worst = std::max(worst, std::abs(s(t) - std::exp(-t)));
    EXPECT_LT(worst, 0.002);
}

TEST(FitPersistency, ExponentialRate) {
    const auto fit = fit_persistency(exponential_samples(0.5, 1000000, 2));
    EXPECT_NEAR(fit.theta, 0.5, 0.005);
    EXPECT_GE(fit.n_points, 10u);
    EXPECT_GT(fit.r_squared, 0.99);
    EXPECT_LE(fit.r_squared, 1.0);
    EXPECT_GT(fit.t_hi, fit.t_lo);
    // Window starts where S drops to one half: the median of Exp(0.5).
    EXPECT_NEAR(fit.t_lo, 2.0 * std::log(2.0), 0.02);
}

TEST(FitPersistency, ScaleEquivariance) {
    auto xs = exponential_samples(1.0, 50000, 3);
    const auto base = fit_persistency(xs);
    for (double c : {0.25, 3.0}) {
        std::vector<double> scaled(xs);
        for (double& x : scaled) x *= c;
        EXPECT_NEAR(fit_persistency(scaled).theta, base.theta / c, 1e-10 * base.theta / c);
    }
}

TEST(FitPersistency, NoiseFreeSurvivalIsExact) {
    std::vector<double> t, s;
    const double c = 0.7, theta = 0.3;
    for (int i = 0; i < 40; ++i) {
        t.push_back(1.0 + 0.37 * i);
        s.push_back(c * std::exp(-theta * t.back()));
    }
    const auto fit = fit_log_linear(t, s);
    EXPECT_NEAR(fit.theta, theta, 1e-12);
    EXPECT_NEAR(fit.intercept, std::log(c), 1e-12);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
}

TEST(FitPersistency, WindowTooSmall) {
    // 75 points with S <= 1/2, of which only ~5 keep 70 exceedances
    EXPECT_THROW(fit_persistency(exponential_samples(1.0, 150, 4), 70), FitError);
    std::vector<double> t{1, 2, 3}, s{0.5, 0.4, 0.3};
    EXPECT_THROW(fit_log_linear(t, s), FitError);
}

TEST(FitPersistency, MinTailCountRespected) {
    const auto xs = exponential_samples(1.0, 100000, 5);
    const auto surv = empirical_survival(xs);
    const auto fit = fit_persistency(surv, 200);
    EXPECT_GE(surv.exceedances(fit.t_hi), 200u);
    EXPECT_LE(surv(fit.t_lo), 0.5);
}

TEST(BatchCi, ExponentialReplicates) {
    const auto est = batch_ci([](std::uint64_t seed) { return fit_persistency(exponential_samples(1.0, 200000, seed)); },
                              10, 7);
    EXPECT_EQ(est.replicates.size(), 10u);
    EXPECT_NEAR(est.mean_theta, 1.0, 0.01);
    EXPECT_GT(est.half_width, 0.0);
    EXPECT_LT(est.half_width, 0.01);
}

TEST(BatchCi, TwoReplicatesUseOneDegreeOfFreedom) {
    EXPECT_NEAR(t_quantile_975(1.0), 12.706204736174707, 1e-9);
    EXPECT_NEAR(t_quantile_975(9.0), 2.2621571627409915, 1e-9);
    SurvivalFit a, b;
    a.theta = 1.0;
    b.theta = 3.0;
    const auto est = summarize({a, b});
    EXPECT_DOUBLE_EQ(est.mean_theta, 2.0);
    // sd = sqrt(2), half width = q * sd / sqrt(2)
    EXPECT_NEAR(est.half_width, 12.706204736174707, 1e-9);
}

TEST(BatchCi, Errors) {
    auto runner = [](std::uint64_t) { return SurvivalFit{}; };
    EXPECT_THROW(batch_ci(runner, 1, 0), DomainError);
    try {
        batch_ci([](std::uint64_t seed) { return fit_persistency(exponential_samples(1.0, 120, seed), 70); }, 3, 1);
        FAIL() << "expected FitError";
    } catch (const FitError& e) {
        EXPECT_GE(e.replicate(), 0);
    }
}

TEST(BatchCi, LargerSamplesShrinkSpread) {
    int shrunk = 0;
    for (std::uint64_t pair = 0; pair < 5; ++pair) {
        auto spread = [&](std::size_t n) {
            const auto est = batch_ci([n](std::uint64_t seed) { return fit_persistency(exponential_samples(1.0, n, seed)); },
                                      5, derive_seed(100 + n, pair));
            return est.half_width;
        };
        if (spread(1000000) < spread(100000)) ++shrunk;
    }
    EXPECT_GE(shrunk, 4);
}
