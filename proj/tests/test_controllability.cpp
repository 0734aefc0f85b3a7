#include "qexchange/controllability.hpp"
#include "qexchange/propagator.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qex;

namespace {

Matrix m3(const Spin3& s) { return Matrix(s); }

Matrix random_unitary(Eigen::Index d, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Matrix h(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) h(i, j) = Complex(n(rng), n(rng));
    return expm_skew(0.5 * (h + h.adjoint()), 1.0);
}

} // namespace

TEST(LieRank, SingleGeneratorIsAbelian) {
    const auto s = spin1_operators();
    EXPECT_EQ(lie_rank({m3(s.x)}).rank, 1);
    EXPECT_EQ(lie_rank({kI * m3(s.x)}).rank, 1);
}

TEST(LieRank, SpinOneRotationsCloseOnSu2) {
    const auto s = spin1_operators();
    EXPECT_EQ(lie_rank({kI * m3(s.x), kI * m3(s.y)}).rank, 3);
}

TEST(LieRank, QuadrupoleTermCompletesSu3) {
    const auto s = spin1_operators();
    EXPECT_EQ(lie_rank({m3(s.x), m3(s.y), m3(s.z * s.z)}).rank, 8);
}

TEST(LieRank, ParitySymmetryLimitsRank) {
    // S_x and S_z^2 both leave (|1> - |-1>) invariant
    const auto s = spin1_operators();
    EXPECT_EQ(lie_rank({m3(s.x), m3(s.z * s.z)}).rank, 4);
}

TEST(LieRank, BasisIsOrthonormalAndSkewHermitian) {
    const auto s = spin1_operators();
    const auto b = lie_algebra({m3(s.x), m3(s.y), m3(s.z * s.z)});
    ASSERT_EQ(b.rank, 8);
    for (std::size_t i = 0; i < b.elements.size(); ++i) {
        EXPECT_LT((b.elements[i] + b.elements[i].adjoint()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(std::abs(b.elements[i].trace()), 0.0, 1e-12);
        for (std::size_t j = 0; j < b.elements.size(); ++j) {
            const double ip = (b.elements[i].adjoint() * b.elements[j]).trace().real();
            EXPECT_NEAR(ip, i == j ? 1.0 : 0.0, 1e-9) << i << "," << j;
        }
    }
}

TEST(LieRank, InvariantUnderRescalingAndConjugation) {
    SystemParams p;
    p.omega_b = 0.3;
    p = with_resonance(p, Resonance::r1);
    p.g_a = 0.1;
    p.g_b = 0.07;
    p.phi_a = 0.5 * kPi;
    const Truncation t(2);
    auto gens = model_generators(p, t, {false, true, true});
    const int base = lie_rank(gens).rank;

    auto scaled = gens;
    scaled[0] *= -3.5;
    scaled[1] *= 0.01;
    EXPECT_EQ(lie_rank(scaled).rank, base);

    const Matrix u = random_unitary(t.dim(), 4);
    auto rotated = gens;
    for (auto& g : rotated) g = u * g * u.adjoint();
    EXPECT_EQ(lie_rank(rotated).rank, base);
}

TEST(LieRank, AddingGeneratorNeverLowersRank) {
    const auto s = spin1_operators();
    const int one = lie_rank({m3(s.z)}).rank;
    const int two = lie_rank({m3(s.z), m3(s.x)}).rank;
    const int three = lie_rank({m3(s.z), m3(s.x), m3(s.z * s.z)}).rank;
    EXPECT_LE(one, two);
    EXPECT_LE(two, three);
}

TEST(LieRank, SaturationFlag) {
    const auto s = spin1_operators();
    const auto r = lie_rank({m3(s.x), m3(s.y), m3(s.z * s.z)}, 4);
    EXPECT_EQ(r.rank, 4);
    EXPECT_TRUE(r.saturated);
}

TEST(LieRank, RejectsGeneralMatrices) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;
    EXPECT_THROW(lie_rank({m}), ContractViolation);
    EXPECT_THROW(lie_rank({Matrix::Identity(2, 2), Matrix::Identity(3, 3)}), DimensionMismatch);
    EXPECT_EQ(lie_rank({}).rank, 0);
}

TEST(Controllability, UncoupledWithZControlIsNot) {
    SystemParams p;
    p.omega_b = 0.3;
    p = with_resonance(p, Resonance::r1);
    const auto r = is_controllable(p, Truncation(2), {false, false, true});
    EXPECT_FALSE(r.controllable);
    EXPECT_EQ(r.expected, 143);
    EXPECT_LT(r.rank, 143);
}

TEST(Controllability, SmallestFullModelTruncation) {
    SystemParams p;
    p.omega_b = 0.3;
    p = with_resonance(p, Resonance::r1);
    p.g_a = 0.1;
    p.g_b = 0.1 / std::sqrt(2.0);
    p.phi_a = 0.5 * kPi;
    const auto r = is_controllable(p, Truncation(2));
    EXPECT_EQ(r.rank, 143);
    EXPECT_TRUE(r.controllable);
    EXPECT_EQ(r.generators_used, 4);
}

TEST(Controllability, RabiModelSmallTruncation) {
    const auto r = controllability_report(rabi_generators(0.85, 0.3, 1.0, 0.1, 3));
    EXPECT_EQ(r.expected, 80);
    EXPECT_EQ(r.rank, 80);
}
