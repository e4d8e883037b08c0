#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "excursion/iia.hpp"

using namespace excursion;

namespace {

const IIAModel& zero_level() {
    static const IIAModel iia = build_iia(diffusion_covariance(2), 0.0);
    return iia;
}

const IIAModel& unit_level() {
    static const IIAModel iia = build_iia(diffusion_covariance(2), 1.0);
    return iia;
}

struct Moments {
    double mean;
    double se;
};

Moments moments(const std::vector<double>& xs) {
    double s = 0.0, s2 = 0.0;
    for (double x : xs) {
        s += x;
        s2 += x * x;
    }
    const double n = static_cast<double>(xs.size());
    const double m = s / n;
    return {m, std::sqrt((s2 / n - m * m) / n)};
}

}  // namespace

TEST(BuildIIA, ZeroLevelClosedForm) {
    const auto& iia = zero_level();
    EXPECT_EQ(iia.alpha, 0.5);
    EXPECT_EQ(iia.beta, 0.5);
    for (double t : {0.5, 1.0, 3.0, 10.0, 40.0}) {
        EXPECT_NEAR(iia.f_x_cdf.interpolate(t), 1.0 - 1.0 / std::cosh(t / 2), 1e-10);
        EXPECT_NEAR(iia.f_y_cdf.interpolate(t), 1.0 - 1.0 / std::cosh(t / 2), 1e-10);
    }
}

TEST(BuildIIA, AlphaIsNormalCdf) {
    const auto& iia = unit_level();
    EXPECT_DOUBLE_EQ(iia.alpha, norm_cdf(1.0));
    EXPECT_NEAR(iia.alpha, 0.8413447, 1e-7);
    EXPECT_NEAR(iia.alpha + iia.beta, 1.0, 1e-15);
}

TEST(BuildIIA, ReferenceLevelsPassGate) {
    const auto m = diffusion_covariance(2);
    for (double u : {0.0, 0.5, 1.0, 1.25}) EXPECT_NO_THROW(build_iia(m, u)) << "u=" << u;
}

TEST(BuildIIA, MonotonicityFailsAboveFiveQuarters) {
    try {
        build_iia(diffusion_covariance(2), 1.5);
        FAIL() << "expected MonotonicityViolation";
    } catch (const MonotonicityViolation& e) {
        EXPECT_EQ(e.curve(), "E_minus");
        EXPECT_GT(e.t(), 0.0);
    }
}

TEST(BuildIIA, GridTooShort) {
    EXPECT_THROW(build_iia(diffusion_covariance(2), 1.0, GridSpec{10.0, 0.01}), GridTooShort);
    EXPECT_THROW(build_iia(diffusion_covariance(2), std::nan(""), GridSpec{}), DomainError);
}

TEST(BuildIIA, CdfInvariants) {
    const auto m = diffusion_covariance(2);
    for (double u : {0.0, 0.5, 1.0, 1.25}) {
        const auto iia = build_iia(m, u);
        for (const Grid* g : {&iia.f_x_cdf, &iia.f_y_cdf}) {
            const auto& v = g->values();
            EXPECT_EQ(v.front(), 0.0);
            EXPECT_GE(v.back(), 1.0 - 1e-6);
            for (std::size_t i = 1; i < v.size(); ++i) ASSERT_GE(v[i], v[i - 1]);
        }
        EXPECT_GT(iia.tail_rate_x, 0.0);
        EXPECT_GT(iia.tail_rate_y, 0.0);
    }
}

TEST(BuildIIA, LevelSideDuality) {
    const auto m = diffusion_covariance(2);
    for (double u : {0.5, 1.0}) {
        const auto pos = build_iia(m, u);
        const auto neg = build_iia(m, -u);
        EXPECT_NEAR(pos.alpha, neg.beta, 1e-12);
        const auto& a = pos.f_x_cdf.values();
        const auto& b = neg.f_y_cdf.values();
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-12);
        const auto& c = pos.f_y_cdf.values();
        const auto& d = neg.f_x_cdf.values();
        for (std::size_t i = 0; i < c.size(); ++i) ASSERT_NEAR(c[i], d[i], 1e-12);
    }
}

TEST(GeometricDraw, Distribution) {
    Rng rng = make_rng(1);
    constexpr int n = 200000;
    const double p = 0.3;
    int ones = 0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto k = geometric_draw(p, rng);
        ASSERT_GE(k, 1u);
        ones += k == 1 ? 1 : 0;
        sum += static_cast<double>(k);
    }
    EXPECT_NEAR(static_cast<double>(ones) / n, p, 3.0 * std::sqrt(p * (1 - p) / n));
    EXPECT_NEAR(sum / n, 1.0 / p, 3.0 * std::sqrt((1 - p) / (p * p) / n));
    EXPECT_EQ(geometric_draw(1.0, rng), 1u);
}

TEST(SampleExcursion, ZeroLevelMeanIsTwoPi) {
    const auto xs = sample_excursion(zero_level(), Side::above, 1000000, 3);
    const auto m = moments(xs);
    EXPECT_NEAR(m.mean, 2.0 * std::numbers::pi, 3.0 * m.se + 1e-3);
    for (double x : xs) ASSERT_GT(x, 0.0);
}

TEST(SampleExcursion, EmptySumGivesBareDivisor) {
    IIAModel iia = zero_level();
    iia.alpha = 1.0;
    const auto xs = sample_excursion(iia, Side::above, 400000, 4);
    const auto m = moments(xs);
    // E[X] = int sech(t/2) dt = pi.
    EXPECT_NEAR(m.mean, std::numbers::pi, 3.0 * m.se + 1e-3);
}

TEST(SampleExcursion, SeedDeterministicAndChunkInvariant) {
    const auto a = sample_excursion(unit_level(), Side::below, 70000, 9);
    const auto b = sample_excursion(unit_level(), Side::below, 70000, 9);
    EXPECT_EQ(a, b);
    const auto c = sample_excursion(unit_level(), Side::below, 40000, 9);
    EXPECT_TRUE(std::equal(c.begin(), c.end(), a.begin()));
}

TEST(PsiHat, SmallS) {
    const auto m = diffusion_covariance(2);
    for (double u : {0.0, 0.5, 1.0, 1.25}) {
        const auto iia = build_iia(m, u);
        for (Side side : {Side::above, Side::below}) {
            EXPECT_NEAR(psi_hat(iia, side, 1e-5), 1.0, 2e-3) << "u=" << u << " " << to_string(side);
        }
    }
    EXPECT_NEAR(psi_hat(zero_level(), Side::above, 1e-3), 1.0, 2e-3 * std::numbers::pi + 1e-4);
    // (1 - psi(s)) / s -> E[T+] = 2 pi at u = 0
    EXPECT_NEAR((1.0 - psi_hat(zero_level(), Side::above, 1e-4)) / 1e-4, 2.0 * std::numbers::pi, 0.01);
}

TEST(PsiHat, ZeroLevelSymmetry) {
    for (double s : {0.05, 0.5, 1.0, 2.0, 10.0})
        EXPECT_NEAR(psi_hat(zero_level(), Side::above, s), psi_hat(zero_level(), Side::below, s), 1e-8);
}

TEST(PsiHat, InUnitInterval) {
    for (double s : {0.01, 0.1, 1.0, 10.0})
        for (Side side : {Side::above, Side::below}) {
            const double v = psi_hat(unit_level(), side, s);
            EXPECT_GT(v, 0.0);
            EXPECT_LT(v, 1.0);
        }
    EXPECT_THROW(psi_hat(unit_level(), Side::above, 0.0), DomainError);
}

TEST(PsiHat, MatchesEmpiricalTransform) {
    for (Side side : {Side::above, Side::below}) {
        const auto xs = sample_excursion(unit_level(), side, 400000, 12);
        for (double s : {0.5, 1.0, 2.0}) {
            std::vector<double> e(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) e[i] = std::exp(-s * xs[i]);
            const auto m = moments(e);
            EXPECT_NEAR(m.mean, psi_hat(unit_level(), side, s), 3.0 * m.se) << "s=" << s << " " << to_string(side);
        }
    }
}

TEST(PsiHat, GaverStehfestCdfMatchesSamples) {
    for (const IIAModel* iia : {&zero_level(), &unit_level()}) {
        for (Side side : {Side::above, Side::below}) {
            auto xs = sample_excursion(*iia, side, 1000000, 15);
            std::sort(xs.begin(), xs.end());
            const double n = static_cast<double>(xs.size());
            double ks = 0.0;
            for (double q = 0.01; q < 0.995; q += 0.01) {
                const double t = xs[static_cast<std::size_t>(q * n)];
                const double emp = static_cast<double>(std::upper_bound(xs.begin(), xs.end(), t) - xs.begin()) / n;
                ks = std::max(ks, std::abs(iia_cdf_inverted(*iia, side, t) - emp));
            }
            EXPECT_LT(ks, 0.01) << "u=" << iia->level << " " << to_string(side);
        }
    }
}
