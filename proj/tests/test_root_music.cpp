#include "h2ad/errors.hpp"
#include "h2ad/root_music.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace h2ad;

namespace {

CMatrix exact_fd_covariance(const ArrayGeometry& g, double theta, double snr) {
    const CVector a = fd_steering_vector(g, theta);
    return snr * a * a.adjoint() + CMatrix::Identity(a.size(), a.size());
}

CMatrix exact_group_covariance(const ArrayGeometry& g, std::size_t p, double theta, double snr) {
    const CVector r = group_response(g, p, AnalogCombiner::zero(g, p), theta);
    return snr * r * r.adjoint() + CMatrix::Identity(r.size(), r.size());
}

double eta_of(const ArrayGeometry& g, std::size_t p, double theta) {
    return wrap_phase(2.0 * kPi / g.wavelength * g.antennas_per_subarray[p] * g.element_spacing *
                      std::sin(deg_to_rad(theta)));
}

ArrayGeometry single_group(int m) {
    ArrayGeometry g = ArrayGeometry::reference();
    g.antennas_per_subarray = {m};
    g.subarrays_per_group = {16};
    return g;
}

}  // namespace

TEST(Covariance, ConstantColumns) {
    SnapshotSet s;
    CVector v(3);
    v << cdouble(1, 2), cdouble(-0.5, 0), cdouble(0, 3);
    s.data = v.replicate(1, 7);
    const CMatrix r = sample_covariance(s);
    EXPECT_LT((r - v * v.adjoint()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Covariance, HermitianAndPsd) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    SnapshotSet s;
    s.data.resize(9, 13);
    for (Eigen::Index i = 0; i < s.data.size(); ++i) s.data(i) = cdouble(n(rng), n(rng));
    const CMatrix r = sample_covariance(s);
    EXPECT_LT((r - r.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
    const Eigen::SelfAdjointEigenSolver<CMatrix> es(r);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12);
}

TEST(Covariance, NoiseOnlyApproachesIdentity) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n;
    SnapshotSet s;
    s.data.resize(8, 10000);
    for (Eigen::Index i = 0; i < s.data.size(); ++i) s.data(i) = cdouble(n(rng), n(rng)) * std::sqrt(0.5);
    const CMatrix r = sample_covariance(s);
    for (Eigen::Index i = 0; i < 8; ++i) EXPECT_NEAR(r(i, i).real(), 1.0, 0.05);
}

TEST(Covariance, EmptyThrows) {
    SnapshotSet s;
    s.data.resize(4, 0);
    EXPECT_THROW(sample_covariance(s), ShapeError);
}

TEST(NoiseSubspace, OrthogonalToSignal) {
    const auto g = ArrayGeometry::reference();
    const CVector a = fd_steering_vector(g, 23.0);
    const auto ns = noise_subspace(a * a.adjoint() + CMatrix::Identity(128, 128));
    ASSERT_EQ(ns.basis.rows(), 128);
    ASSERT_EQ(ns.basis.cols(), 127);
    EXPECT_LT((ns.basis.adjoint() * a).norm(), 1e-8);
    EXPECT_LT((ns.basis.adjoint() * ns.basis - CMatrix::Identity(127, 127)).cwiseAbs().maxCoeff(), 1e-10);
    ASSERT_EQ(ns.eigenvalues.size(), 128u);
    EXPECT_TRUE(std::is_sorted(ns.eigenvalues.rbegin(), ns.eigenvalues.rend()));
}

TEST(NoiseSubspace, TooFewDimensions) {
    EXPECT_THROW(noise_subspace(CMatrix::Identity(1, 1)), ShapeError);
    EXPECT_THROW(noise_subspace(CMatrix::Identity(3, 3), 3), ShapeError);
}

TEST(FdRootMusic, ExactCovarianceAt41) {
    const auto g = ArrayGeometry::reference();
    const auto res = fd_root_music(noise_subspace(exact_fd_covariance(g, 41.0, 10.0)), g);
    ASSERT_TRUE(res.angle_deg.has_value());
    EXPECT_NEAR(*res.angle_deg, 41.0, 1e-6);
    EXPECT_EQ(res.all_roots.size(), 2u * 127u);
    EXPECT_LE(std::abs(res.selected_root), 1.0 + 1e-7);
}

TEST(FdRootMusic, ExactCovarianceBroadside) {
    const auto g = ArrayGeometry::reference();
    const auto res = fd_root_music(noise_subspace(exact_fd_covariance(g, 0.0, 10.0)), g);
    EXPECT_NEAR(*res.angle_deg, 0.0, 1e-6);
}

TEST(FdRootMusic, ExactAcrossGrid) {
    auto g = ArrayGeometry::reference();
    g.fd_antennas = 32;  // the grid is long; a shorter array keeps it quick
    for (double theta = -80.0; theta <= 80.0; theta += 0.5) {
        const auto res = fd_root_music(noise_subspace(exact_fd_covariance(g, theta, 10.0)), g);
        ASSERT_NEAR(*res.angle_deg, theta, 1e-6) << theta;
    }
}

TEST(FdRootMusic, ReferenceSizeGrid) {
    const auto g = ArrayGeometry::reference();
    for (double theta = -80.0; theta <= 80.0; theta += 10.0) {
        const auto res = fd_root_music(noise_subspace(exact_fd_covariance(g, theta, 10.0)), g);
        ASSERT_NEAR(*res.angle_deg, theta, 1e-6) << theta;
    }
}

TEST(FdRootMusic, MonteCarloTenDb) {
    const auto g = ArrayGeometry::reference();
    const auto comb = zero_combiners(g);
    double sq = 0.0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const auto obs = synthesize_snapshots(g, {41.0, 10.0, 100}, comb, 500 + t);
        const auto res = fd_root_music(noise_subspace(sample_covariance(obs.fd)), g);
        sq += std::pow(*res.angle_deg - 41.0, 2);
    }
    const double rmse = std::sqrt(sq / trials);
    EXPECT_TRUE(std::isfinite(rmse));
    EXPECT_LT(rmse, 0.1);
}

TEST(GroupRootMusic, ExactPhaseAt41) {
    const auto g = ArrayGeometry::reference();
    for (std::size_t p = 0; p < g.num_groups(); ++p) {
        const auto res = group_root_music(noise_subspace(exact_group_covariance(g, p, 41.0, 10.0)), g, p);
        ASSERT_TRUE(res.wrapped_phase.has_value());
        EXPECT_NEAR(*res.wrapped_phase, eta_of(g, p, 41.0), 1e-6);
        EXPECT_EQ(res.all_roots.size(), 30u);
    }
}

TEST(GroupRootMusic, BroadsideZeroPhase) {
    const auto g = ArrayGeometry::reference();
    const auto res = group_root_music(noise_subspace(exact_group_covariance(g, 0, 0.0, 10.0)), g, 0);
    // The signal root is a double root on the unit circle, good to about sqrt(eps).
    EXPECT_NEAR(*res.wrapped_phase, 0.0, 1e-7);
}

TEST(GroupRootMusic, DegenerateSubspace) {
    const auto g = ArrayGeometry::reference();
    NoiseSubspace ns;
    ns.basis = CMatrix::Zero(16, 15);
    EXPECT_THROW(group_root_music(ns, g, 0), EstimationFailure);
}

TEST(Candidates, ThreeElementExpansion) {
    const auto g = single_group(3);
    const auto c = expand_candidates(0.0, g, 0);
    ASSERT_EQ(c.size(), 3u);
    const double expected = rad_to_deg(std::asin(2.0 / 3.0));
    EXPECT_NEAR(c.angles_deg[0], -expected, 1e-12);
    EXPECT_NEAR(c.angles_deg[1], 0.0, 1e-12);
    EXPECT_NEAR(c.angles_deg[2], expected, 1e-12);
    EXPECT_NEAR(expected, 41.810, 5e-4);
    EXPECT_EQ(c.ambiguity_indices, (std::vector<int>{-1, 0, 1}));
}

TEST(Candidates, ReferenceCountsAndTrueMember) {
    const auto g = ArrayGeometry::reference();
    const std::size_t expected[] = {7, 11, 13};
    for (std::size_t p = 0; p < 3; ++p) {
        const auto res = group_root_music(noise_subspace(exact_group_covariance(g, p, 41.0, 10.0)), g, p);
        const auto c = expand_candidates(*res.wrapped_phase, g, p);
        EXPECT_EQ(c.size(), expected[p]);
        EXPECT_TRUE(std::is_sorted(c.angles_deg.begin(), c.angles_deg.end()));
        int hits = 0;
        for (double a : c.angles_deg) {
            EXPECT_GE(a, -90.0);
            EXPECT_LE(a, 90.0);
            if (std::abs(a - 41.0) < 1e-6) ++hits;
        }
        EXPECT_EQ(hits, 1);
    }
}

TEST(Candidates, ForwardInverseProperty) {
    const auto g = ArrayGeometry::reference();
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-89.0, 89.0);
    for (int i = 0; i < 2000; ++i) {
        const double theta = u(rng);
        for (std::size_t p = 0; p < g.num_groups(); ++p) {
            const auto c = expand_candidates(eta_of(g, p, theta), g, p);
            double best = 1e9;
            for (double a : c.angles_deg) best = std::min(best, std::abs(a - theta));
            ASSERT_LT(best, 1e-9) << theta << " group " << p;
        }
    }
}

TEST(Candidates, EndfireDuplicateRemoved) {
    // eta = pi puts x_q exactly at +1 and -1; both describe endfire.
    const auto g = single_group(2);
    const auto c = expand_candidates(kPi, g, 0);
    for (std::size_t i = 1; i < c.size(); ++i) EXPECT_NE(c.angles_deg[i], c.angles_deg[i - 1]);
    EXPECT_EQ(std::count(c.angles_deg.begin(), c.angles_deg.end(), -90.0), 0);
}

TEST(Candidates, FalseClassesSeparated) {
    const auto g = ArrayGeometry::reference();
    std::vector<double> falses;
    for (std::size_t p = 0; p < 3; ++p) {
        const auto c = expand_candidates(eta_of(g, p, 41.0), g, p);
        int hits = 0;
        for (double a : c.angles_deg) {
            if (std::abs(a - 41.0) < 1e-6)
                ++hits;
            else
                falses.push_back(a);
        }
        EXPECT_EQ(hits, 1);
    }
    for (std::size_t i = 0; i < falses.size(); ++i)
        for (std::size_t j = i + 1; j < falses.size(); ++j) EXPECT_GT(std::abs(falses[i] - falses[j]), 0.1);
}
