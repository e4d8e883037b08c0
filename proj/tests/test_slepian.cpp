#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "excursion/slepian.hpp"

using namespace excursion;

namespace {

double sech(double x) { return 1.0 / std::cosh(x); }

}  // namespace

TEST(ExpectedClippedUp, ZeroLevelIsSech) {
    const auto m = diffusion_covariance(2);
    EXPECT_NEAR(expected_clipped_up(m, 0.0, 1.0), 0.8868188839700739, 1e-12);
    double worst = 0.0;
    for (double t : probe_grid()) worst = std::max(worst, std::abs(expected_clipped_up(m, 0.0, t) - sech(t / 2)));
    EXPECT_LT(worst, 1e-10);
}

TEST(ExpectedClippedUp, Limits) {
    const auto m = diffusion_covariance(2);
    for (double u : {0.0, 0.5, 1.0, 1.25}) {
        EXPECT_NEAR(expected_clipped_up(m, u, 1e-6), 1.0, 1e-4);
        EXPECT_NEAR(expected_clipped_up(m, u, 1e-9), 1.0, 1e-15);
        EXPECT_NEAR(expected_clipped_up(m, u, 50.0), 1.0 - 2.0 * norm_cdf(u), 1e-6);
        EXPECT_NEAR(expected_clipped_down(m, u, 1e-6), -1.0, 1e-4);
        EXPECT_NEAR(expected_clipped_down(m, u, 50.0), 1.0 - 2.0 * norm_cdf(u), 1e-6);
    }
    EXPECT_NEAR(expected_clipped_up(m, 1.0, 50.0), -0.6826894921370859, 1e-6);
    EXPECT_NEAR(expected_clipped_down(m, 1.0, 50.0), -0.6826894921370859, 1e-6);
}

TEST(ExpectedClippedUp, RejectsNonPositiveTime) {
    const auto m = diffusion_covariance(2);
    EXPECT_THROW(expected_clipped_up(m, 0.0, 0.0), DomainError);
    EXPECT_THROW(expected_clipped_down(m, 0.0, -1.0), DomainError);
}

TEST(ExpectedClippedUp, Bounded) {
    const auto m = diffusion_covariance(2);
    for (double u : {-2.0, -0.5, 0.0, 1.0, 2.0})
        for (double t : probe_grid(200)) {
            const double v = expected_clipped_up(m, u, t);
            EXPECT_GE(v, -1.0);
            EXPECT_LE(v, 1.0);
        }
}

TEST(ExpectedClippedDown, ExactAntisymmetry) {
    const auto m = diffusion_covariance(3);
    for (double u : {-1.0, 0.0, 0.5, 1.25})
        for (double t : {0.01, 0.7, 3.0, 12.0}) EXPECT_EQ(expected_clipped_down(m, u, t), -expected_clipped_up(m, -u, t));
    const auto m2 = diffusion_covariance(2);
    for (double t : {0.5, 2.0}) EXPECT_NEAR(expected_clipped_down(m2, 0.0, t), -sech(t / 2), 1e-12);
}

TEST(ConditionalExpectedClipped, RayleighMixtureReproducesExpectation) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const auto m = diffusion_covariance(2);
    for (double u : {0.0, 0.5, 1.0})
        for (double t : {0.5, 2.0, 10.0}) {
            auto integrand = [&](double s) {
                return conditional_expected_clipped(m, u, t, s) * s * std::exp(-0.5 * s * s);
            };
            const double mixed = GK::integrate(integrand, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-12);
            EXPECT_NEAR(mixed, expected_clipped_up(m, u, t), 1e-6) << "u=" << u << " t=" << t;
        }
}

TEST(ConditionalExpectedClipped, Limits) {
    const auto m = diffusion_covariance(2);
    EXPECT_NEAR(conditional_expected_clipped(m, 0.5, 1.0, 1e3), 1.0, 1e-12);
    EXPECT_NEAR(conditional_expected_clipped(m, 0.0, 1.0, 1e-12), 0.0, 1e-10);
    EXPECT_EQ(conditional_expected_clipped(m, 0.0, 1e-9, 1.0), 1.0);
    EXPECT_THROW(conditional_expected_clipped(m, 0.0, 1.0, 0.0), DomainError);
}

TEST(SlepianPath, StructuralInvariants) {
    const auto m = diffusion_covariance(2);
    const auto grid = Grid::uniform_points(5.0, 0.1);
    const auto paths = sample_slepian_path(m, 0.8, grid, 20, 3);
    ASSERT_EQ(paths.size(), 20u);
    for (const auto& p : paths) {
        EXPECT_EQ(p.total[0], 0.8);
        EXPECT_EQ(p.residual_part[0], 0.0);
        EXPECT_GT(p.rayleigh_draw, 0.0);
        for (std::size_t i = 0; i < grid.size(); ++i)
            EXPECT_EQ(p.total[i], p.deterministic_part[i] + p.slope_part[i] + p.residual_part[i]);
    }
}

TEST(SlepianPath, RequiresGridFromZero) {
    const auto m = diffusion_covariance(2);
    EXPECT_THROW(sample_slepian_path(m, 0.0, {0.1, 0.2}, 1, 1), DomainError);
}

TEST(SlepianPath, Deterministic) {
    const auto m = diffusion_covariance(2);
    const auto grid = Grid::uniform_points(2.0, 0.5);
    const auto a = sample_slepian_path(m, 0.3, grid, 5, 99);
    const auto b = sample_slepian_path(m, 0.3, grid, 5, 99);
    for (std::size_t p = 0; p < a.size(); ++p) EXPECT_EQ(a[p].total, b[p].total);
}

TEST(SlepianPath, ClippedMeanMatchesExpectation) {
    const auto m = diffusion_covariance(2);
    const std::vector<double> grid{0.0, 0.5, 1.0};
    const auto paths = sample_slepian_path(m, 0.0, grid, 100000, 17);
    double sum = 0.0, sum2 = 0.0;
    for (const auto& p : paths) {
        const double v = p.total[2] > 0.0 ? 1.0 : -1.0;
        sum += v;
        sum2 += v * v;
    }
    const double n = static_cast<double>(paths.size());
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    EXPECT_NEAR(mean, sech(0.5), 3.0 * se);
}

TEST(SlepianPath, ResidualCovarianceMatches) {
    const auto m = diffusion_covariance(2);
    const std::vector<double> grid{0.0, 0.5, 1.0, 2.0, 4.0};
    const SlepianResidualSampler sampler(m, grid);
    Rng rng = make_rng(8);
    constexpr int n = 100000;
    const std::size_t k = grid.size();
    std::vector<double> s(k * k, 0.0), s4(k * k, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto x = sampler.draw(rng);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) {
                s[a * k + b] += x[a] * x[b];
                s4[a * k + b] += x[a] * x[a] * x[b] * x[b];
            }
    }
    for (std::size_t a = 1; a < k; ++a)
        for (std::size_t b = 1; b < k; ++b) {
            const double ta = grid[a], tb = grid[b];
            const double exact = m.r(ta - tb) - m.r(ta) * m.r(tb) + m.r_prime(ta) * m.r_prime(tb) / m.r_pp0;
            const double mean = s[a * k + b] / n;
            const double se = std::sqrt((s4[a * k + b] / n - mean * mean) / n);
            EXPECT_NEAR(mean, exact, 3.0 * se + 1e-12) << a << "," << b;
        }
}

TEST(SlepianPath, UpCrossesAtOrigin) {
    const auto m = diffusion_covariance(2);
    const std::vector<double> grid{0.0, 0.01};
    const auto paths = sample_slepian_path(m, 1.0, grid, 10000, 5);
    int up = 0;
    for (const auto& p : paths) up += p.total[1] > 1.0 ? 1 : 0;
    EXPECT_GE(up, 9990);
}
