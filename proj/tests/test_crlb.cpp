#include "h2ad/crlb.hpp"
#include "h2ad/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace h2ad;

namespace {

constexpr double kDeg2PerRad2 = (180.0 / kPi) * (180.0 / kPi);

CrlbContext ctx_at(double theta, double snr_db, int h = 100) {
    return {theta, std::pow(10.0, snr_db / 10.0), h, ArrayGeometry::reference()};
}

ArrayGeometry one_group(int m, int k) {
    ArrayGeometry g = ArrayGeometry::reference();
    g.antennas_per_subarray = {m};
    g.subarrays_per_group = {k};
    return g;
}

// Regression anchor: numeric_fim_oracle summed over the FD subarray and the three
// groups at 41 deg, 0 dB, H = 100, converted to degrees^2. Computed once and frozen.
constexpr double kHybridAnchorDeg2 = 1.6291113184e-05;

}  // namespace

TEST(VirtualGain, BroadsideLimitIsExact) {
    const auto g = ArrayGeometry::reference();
    for (std::size_t p = 0; p < 3; ++p)
        EXPECT_EQ(virtual_gain_r(g, p, 0.0), cdouble(g.antennas_per_subarray[p], 0.0));
}

TEST(VirtualGain, GeometricSeriesOracle) {
    const auto g = ArrayGeometry::reference();
    cdouble sum = 0.0;
    for (int m = 0; m < 7; ++m) sum += std::polar(1.0, kPi * m * std::sin(deg_to_rad(41.0)));
    EXPECT_NEAR(std::abs(virtual_gain_r(g, 0, 41.0) - sum), 0.0, 1e-12);
}

TEST(VirtualGain, BoundedByGroupSize) {
    const auto g = ArrayGeometry::reference();
    for (double t = -89.9; t < 90.0; t += 0.1)
        for (std::size_t p = 0; p < 3; ++p) ASSERT_LE(std::abs(virtual_gain_r(g, p, t)), g.antennas_per_subarray[p] + 1e-12);
}

TEST(Varsigma, Broadside) {
    const auto g = ArrayGeometry::reference();
    const cdouble s = varsigma(g, 0, 0.0);
    EXPECT_NEAR(s.real(), 0.5 * 7 * 6 / 2.0, 1e-14);
    EXPECT_EQ(s.imag(), 0.0);
}

TEST(Varsigma, SingleAntennaIsZero) {
    EXPECT_EQ(varsigma(one_group(1, 4), 0, 33.0), cdouble(0.0, 0.0));
}

TEST(Varsigma, TermByTerm) {
    const auto g = ArrayGeometry::reference();
    const double x = kPi * std::sin(deg_to_rad(41.0));
    cdouble sum = 0.0;
    for (int m = 1; m <= 7; ++m) sum += (m - 1) * 0.5 * std::polar(1.0, -x * (m - 1));
    EXPECT_NEAR(std::abs(varsigma(g, 0, 41.0) - sum), 0.0, 1e-12);
}

TEST(Psi, Values) {
    const auto g = ArrayGeometry::reference();
    EXPECT_DOUBLE_EQ(psi(g, 0, 0.0, 1.0), 791.0);
    EXPECT_NEAR(psi(g, 1, 20.0, 1e-300), 11.0, 1e-12);
    double last = 0.0;
    for (double snr = 0.01; snr < 1e3; snr *= 1.7) {
        const double v = psi(g, 2, 41.0, snr);
        EXPECT_GE(v, 13.0);
        EXPECT_GE(v, last);
        last = v;
    }
}

TEST(FisherFd, CosineAndSnrScaling) {
    EXPECT_NEAR(fisher_fd(ctx_at(0.0, 10.0)) / fisher_fd(ctx_at(60.0, 10.0)), 4.0, 1e-12);
    auto c = ctx_at(41.0, 10.0);
    const double f = fisher_fd(c);
    c.snr_linear *= 2.0;
    EXPECT_NEAR(fisher_fd(c) / f, 2.0, 1e-14);
}

TEST(FisherFd, RejectsEndfire) {
    EXPECT_THROW(fisher_fd(ctx_at(90.0, 10.0)), DomainError);
    EXPECT_THROW(fisher_group(ctx_at(-90.0, 10.0), 0), DomainError);
}

TEST(FisherFd, CenteredApertureIsSumOfSquares) {
    // 128 elements at spacing 1/2 around the centroid: sum (i - 63.5)^2 / 4.
    double s = 0.0;
    for (int i = 0; i < 128; ++i) s += (i - 63.5) * (i - 63.5) * 0.25;
    EXPECT_NEAR(fd_centered_aperture(ArrayGeometry::reference()), s, 1e-9);
}

TEST(FisherFd, MatchesOracle) {
    const auto c = ctx_at(41.0, 10.0);
    const double oracle = numeric_fim_oracle(c, ChannelKind::fd());
    EXPECT_NEAR(fisher_fd(c) / oracle, 1.0, 0.01);
}

TEST(FisherGroup, MatchesOracleM13) {
    const auto c = ctx_at(41.0, 10.0);
    const double oracle = numeric_fim_oracle(c, ChannelKind::of_group(2));
    EXPECT_NEAR(fisher_group(c, 2) / oracle, 1.0, 0.01);
}

TEST(FisherGroup, ContinuousAcrossBroadside) {
    const double at0 = fisher_group(ctx_at(0.0, 10.0), 1);
    EXPECT_NEAR(fisher_group(ctx_at(1e-7, 10.0), 1) / at0, 1.0, 1e-6);
    EXPECT_NEAR(fisher_group(ctx_at(-1e-7, 10.0), 1) / at0, 1.0, 1e-6);
    const double x0 = fisher_group_with_cross_terms(ctx_at(0.0, 10.0), 1);
    EXPECT_NEAR(fisher_group_with_cross_terms(ctx_at(1e-7, 10.0), 1) / x0, 1.0, 1e-5);
}

TEST(FisherGroup, SingleSubarrayDropsFirstTerm) {
    CrlbContext c = ctx_at(30.0, 10.0);
    c.geometry = one_group(7, 1);
    EXPECT_EQ(fisher_group(c, 0), 0.0);
    // Only the cross terms remain in the literal expression.
    const auto g = c.geometry;
    const cdouble r = virtual_gain_r(g, 0, 30.0), s = varsigma(g, 0, 30.0);
    const double ps = psi(g, 0, 30.0, c.snr_linear);
    const double cross = (7.0 / ps) * (std::norm(r * s) + std::real(r * r * s));
    const double expected = 8 * kPi * kPi * c.snr_linear * c.snr_linear * 0.75 * cross / (7.0 * ps);
    EXPECT_NEAR(fisher_group_with_cross_terms(c, 0) / expected, 1.0, 1e-12);
}

TEST(Hybrid, SnapshotScalingAndOrdering) {
    const auto c = ctx_at(41.0, 0.0, 100);
    auto c2 = c;
    c2.snapshots = 200;
    EXPECT_NEAR(hybrid_crlb(c2) / hybrid_crlb(c), 0.5, 1e-14);
    const auto rep = crlb_report(c);
    EXPECT_DOUBLE_EQ(rep.hybrid_deg2, hybrid_crlb(c));
    EXPECT_LE(rep.hybrid_deg2, rep.crlb_fd_deg2);
    for (double v : rep.crlb_group_deg2) {
        EXPECT_GT(v, 0.0);
        EXPECT_LE(rep.hybrid_deg2, v);
    }
    double info = rep.fisher_fd;
    for (double f : rep.fisher_group) info += f;
    EXPECT_NEAR(rep.hybrid_deg2, kDeg2PerRad2 / (100.0 * info), 1e-18);
}

TEST(Hybrid, StrictlyDecreasing) {
    double last = 1e300;
    for (double snr_db = -30.0; snr_db <= 30.0; snr_db += 2.5) {
        const double v = hybrid_crlb(ctx_at(41.0, snr_db));
        EXPECT_LT(v, last);
        last = v;
    }
    last = 1e300;
    for (int h = 1; h <= 4096; h *= 2) {
        const double v = hybrid_crlb(ctx_at(41.0, 5.0, h));
        EXPECT_LT(v, last);
        last = v;
    }
}

TEST(Hybrid, RegressionAnchor) {
    EXPECT_NEAR(hybrid_crlb(ctx_at(41.0, 0.0)) / kHybridAnchorDeg2, 1.0, 0.01);
}

TEST(CrlbPart, FdVariantsIdentical) {
    const auto c = ctx_at(41.0, 10.0);
    EXPECT_EQ(crlb_part(c, ChannelKind::fd(), CrlbVariant::FisherInverse),
              crlb_part(c, ChannelKind::fd(), CrlbVariant::WeightFormula));
}

TEST(CrlbPart, GroupVariantsDifferByPositiveFactor) {
    const auto c = ctx_at(41.0, 10.0);
    for (std::size_t p = 0; p < 3; ++p) {
        const double a = crlb_part(c, ChannelKind::of_group(p), CrlbVariant::FisherInverse);
        const double b = crlb_part(c, ChannelKind::of_group(p), CrlbVariant::WeightFormula);
        const double ratio = b / a;
        EXPECT_TRUE(std::isfinite(ratio));
        EXPECT_GT(ratio, 0.0);
        RecordProperty("formula_to_fisher_ratio_group_" + std::to_string(p + 1), std::to_string(ratio));
    }
}

TEST(CrlbPart, PositiveOverGrid) {
    for (double t = -80.0; t <= 80.0; t += 1.0) {
        const auto c = ctx_at(t, 10.0);
        ASSERT_GT(crlb_part(c, ChannelKind::fd()), 0.0);
        for (std::size_t p = 0; p < 3; ++p) {
            ASSERT_GT(crlb_part(c, ChannelKind::of_group(p), CrlbVariant::FisherInverse), 0.0) << t;
            ASSERT_GT(crlb_part(c, ChannelKind::of_group(p), CrlbVariant::WeightFormula), 0.0) << t;
        }
    }
}

TEST(Oracle, CentralDifferenceIsSecondOrder) {
    const auto c = ctx_at(41.0, 10.0);
    const double h = 2e-4;
    const double f1 = numeric_fim_at_step(c, ChannelKind::of_group(0), h);
    const double f2 = numeric_fim_at_step(c, ChannelKind::of_group(0), h / 2);
    const double f4 = numeric_fim_at_step(c, ChannelKind::of_group(0), h / 4);
    EXPECT_NEAR((f1 - f2) / (f2 - f4), 4.0, 0.1);
}

TEST(Oracle, InvariantToReferenceShift) {
    const auto c = ctx_at(25.0, 5.0);
    for (ChannelKind part : {ChannelKind::fd(), ChannelKind::of_group(1)}) {
        FimOracleOptions shifted;
        shifted.reference_offset = 17.0;
        EXPECT_NEAR(numeric_fim_oracle(c, part, shifted) / numeric_fim_oracle(c, part), 1.0, 1e-6);
    }
}

TEST(Oracle, RandomPointsWithinOnePercent) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> angle(-70.0, 70.0), snr(0.0, 20.0);
    for (int i = 0; i < 5; ++i) {
        const auto c = ctx_at(angle(rng), snr(rng));
        double oracle_total = numeric_fim_oracle(c, ChannelKind::fd());
        EXPECT_NEAR(fisher_fd(c) / oracle_total, 1.0, 0.01);
        for (std::size_t p = 0; p < 3; ++p) {
            const double o = numeric_fim_oracle(c, ChannelKind::of_group(p));
            EXPECT_NEAR(fisher_group(c, p) / o, 1.0, 0.01);
            oracle_total += o;
        }
        EXPECT_NEAR(hybrid_crlb(c) / (kDeg2PerRad2 / (c.snapshots * oracle_total)), 1.0, 0.01);
    }
}

TEST(Variant, Names) {
    EXPECT_EQ(parse_crlb_variant("WeightFormula"), CrlbVariant::WeightFormula);
    EXPECT_EQ(to_string(CrlbVariant::FisherInverse), "FisherInverse");
    EXPECT_THROW(parse_crlb_variant("bogus"), ConfigError);
}
