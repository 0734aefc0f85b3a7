#include "qexchange/hilbert.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qex;

namespace {

SystemParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SystemParams p;
    p.omega_b = 0.1 + u(rng);
    p.D = 2.0 * u(rng) - 1.0;
    p.omega_z = u(rng);
    p.g_a = 0.3 * u(rng);
    p.g_b = 0.3 * u(rng);
    p.theta_a = 2.0 * kPi * u(rng);
    p.theta_b = 2.0 * kPi * u(rng);
    p.phi_a = kPi * u(rng);
    p.phi_b = kPi * u(rng);
    p.gamma_b = 2.0 * kPi * u(rng);
    p.alpha = u(rng) < 0.5 ? 0 : 1;
    return p;
}

} // namespace

TEST(Basis, FlatIndexRoundTrip) {
    const Truncation t(4, 3);
    ASSERT_EQ(t.dim(), 36);
    for (Eigen::Index i = 0; i < t.dim(); ++i) {
        const auto b = basis_label(i, t);
        EXPECT_EQ(flat_index(b, t), i);
    }
    EXPECT_EQ(flat_index({1, 0, 0}, t), 0);
    EXPECT_EQ(flat_index({0, 0, 0}, t), 12);
    EXPECT_EQ(flat_index({-1, 3, 2}, t), 35);
}

TEST(Basis, OutOfRangeLabelsThrow) {
    const Truncation t(3);
    EXPECT_THROW(flat_index({2, 0, 0}, t), InvalidParameter);
    EXPECT_THROW(flat_index({0, 3, 0}, t), InvalidTruncation);
    EXPECT_THROW(Truncation(1, 4), InvalidTruncation);
}

TEST(Basis, SymmetricPairIsNormalized) {
    const Truncation t(3);
    const Vector v = symmetric_pair({0, 1, 0}, {-1, 0, 1}, t);
    EXPECT_NEAR(v.norm(), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(v(flat_index({0, 1, 0}, t))), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Spin, AlgebraOfSpinOne) {
    const auto s = spin1_operators();
    EXPECT_LT((Matrix(s.x * s.y - s.y * s.x) - kI * Matrix(s.z)).norm(), 1e-14);
    EXPECT_LT((Matrix(s.y * s.z - s.z * s.y) - kI * Matrix(s.x)).norm(), 1e-14);
    const Spin3 casimir = s.x * s.x + s.y * s.y + s.z * s.z;
    EXPECT_LT((casimir - 2.0 * Spin3::Identity()).norm(), 1e-14);
    EXPECT_NEAR(s.z(0, 0).real(), 1.0, 0.0);
    EXPECT_NEAR(s.z(2, 2).real(), -1.0, 0.0);
}

TEST(Spin, RotatedSpinLimits) {
    const auto s = spin1_operators();
    EXPECT_LT((rotated_spin(0.0, 0.0) - s.z).norm(), 1e-14);
    EXPECT_LT((rotated_spin(0.0, 0.5 * kPi) - s.x).norm(), 1e-14);
    EXPECT_LT((rotated_spin(0.5 * kPi, 0.5 * kPi) - s.y).norm(), 1e-14);
}

TEST(Ladder, CanonicalCommutatorBelowCutoff) {
    const int n = 7;
    const auto l = ladder_operators(n);
    const Matrix c = l.a * l.adag - l.adag * l.a;
    for (int i = 0; i < n - 1; ++i) EXPECT_NEAR(c(i, i).real(), 1.0, 1e-14);
    EXPECT_NEAR(c(n - 1, n - 1).real(), -(n - 1.0), 1e-12);
}

TEST(Hamiltonian, HermitianForRandomParameters) {
    std::mt19937_64 rng(7);
    const Truncation t(4, 3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = random_params(rng);
        Eigen::Vector3d w(0.3, -0.2, 0.7);
        EXPECT_TRUE(is_hermitian(build_total_h(p, t, w), 1e-13));
    }
}

TEST(Hamiltonian, ZeroCouplingIsDiagonalH0) {
    SystemParams p;
    p.D = 0.85;
    p.omega_z = 0.3;
    const Truncation t(3, 4);
    const Matrix h = build_total_h(p, t);
    const Matrix h0 = build_h0(p, t);
    EXPECT_LT((h - h0).norm(), 1e-14);
    EXPECT_LT((h0 - Matrix(h0.diagonal().asDiagonal())).norm(), 1e-14);
    const RealVector d = h0_diagonal(p, t);
    for (Eigen::Index i = 0; i < t.dim(); ++i) EXPECT_NEAR(h0(i, i).real(), d(i), 1e-14);
}

TEST(Hamiltonian, StructuredMatchesDense) {
    std::mt19937_64 rng(11);
    const Truncation t(5, 4);
    for (int trial = 0; trial < 5; ++trial) {
        const auto p = random_params(rng);
        const StructuredHamiltonian sh(p, t);
        const Eigen::Vector3d w(0.1 * trial, -0.4, 0.25);
        const Matrix dense = build_total_h(p, t, w);
        EXPECT_LT((sh.dense(w) - dense).cwiseAbs().maxCoeff(), 1e-13);

        Vector psi = Vector::Random(t.dim());
        Vector out;
        sh.apply(psi, out, w);
        EXPECT_LT((out - dense * psi).norm(), 1e-12);

        // spectral-radius bound must cover the true spectrum
        const double shift = sh.spectral_center();
        Eigen::SelfAdjointEigenSolver<Matrix> es(dense - shift * Matrix::Identity(t.dim(), t.dim()));
        EXPECT_GE(sh.norm_bound(w, shift), es.eigenvalues().cwiseAbs().maxCoeff() - 1e-12);
    }
}

TEST(Hamiltonian, InvalidParametersRejected) {
    SystemParams p;
    p.omega_a = 0.0;
    EXPECT_THROW(p.validate(), InvalidParameter);
    p = SystemParams{};
    p.alpha = 2;
    EXPECT_THROW(p.validate(), InvalidParameter);
    p = SystemParams{};
    p.phi_a = 4.0;
    EXPECT_THROW(build_total_h(p, Truncation(2)), InvalidParameter);
}

TEST(Hamiltonian, CanonicalWrapsAngles) {
    SystemParams p;
    p.theta_a = -0.5 * kPi;
    p.gamma_b = 5.0 * kPi;
    p.phi_b = -1e-3;
    const auto c = p.canonical();
    EXPECT_NEAR(c.theta_a, 1.5 * kPi, 1e-14);
    EXPECT_NEAR(c.gamma_b, kPi, 1e-12);
    EXPECT_EQ(c.phi_b, 0.0);
}

TEST(Resonance, PresetValues) {
    const auto r1 = resonance_params(Resonance::r1, 0.3);
    EXPECT_NEAR(r1.D, 0.85, 1e-15);
    EXPECT_NEAR(r1.omega_z, 0.3, 1e-15);
    const auto r2 = resonance_params(Resonance::r2, 0.3);
    EXPECT_NEAR(r2.D, 1.05, 1e-15);
    EXPECT_NEAR(r2.omega_z, 0.7, 1e-15);
    const auto alt = resonance_params(Resonance::r1_alt, 0.3);
    EXPECT_NEAR(alt.D, 0.65, 1e-15);
    EXPECT_THROW(parse_resonance("R7"), InvalidParameter);
}

TEST(Resonance, TriplesAreDegenerate) {
    const Truncation t(4);
    for (double wb : {0.3, 0.45, 0.8}) {
        SystemParams p;
        p.omega_b = wb;
        const auto e1 = h0_diagonal(with_resonance(p, Resonance::r1), t);
        for (BasisIndex b : {BasisIndex{0, 1, 0}, BasisIndex{-1, 0, 1}, BasisIndex{1, 0, 0}})
            EXPECT_NEAR(e1(flat_index(b, t)), 1.0, 1e-12) << to_string(b);
        const auto e2 = h0_diagonal(with_resonance(p, Resonance::r2), t);
        for (BasisIndex b : {BasisIndex{-1, 1, 1}, BasisIndex{0, 2, 0}, BasisIndex{1, 0, 2}})
            EXPECT_NEAR(e2(flat_index(b, t)), 2.0, 1e-12) << to_string(b);
    }
}
