#include "qexchange/dynamics.hpp"
#include "qexchange/perturbation.hpp"

#include <gtest/gtest.h>

using namespace qex;

namespace {

SystemParams r2_params(double wb, double phi_a = 0.7, double phi_b = 1.9) {
    SystemParams p;
    p.omega_b = wb;
    p = with_resonance(p, Resonance::r2);
    p.alpha = 1;
    p.g_a = 0.01;
    p.g_b = 0.007;
    p.phi_a = phi_a;
    p.phi_b = phi_b;
    return p;
}

SystemParams r1_params() {
    SystemParams p;
    p.omega_b = 0.3;
    p = with_resonance(p, Resonance::r1);
    p.g_a = 0.01;
    p.g_b = 0.004;
    p.phi_a = 1.1;
    p.theta_a = 0.4;
    p.gamma_b = 0.6;
    return p;
}

} // namespace

TEST(Subspace, NonDegenerateLabelsRejected) {
    SystemParams p;
    p.omega_b = 0.3;
    p = with_resonance(p, Resonance::r1);
    EXPECT_NO_THROW(make_subspace(r1_labels(), p, Truncation(3)));
    EXPECT_THROW(make_subspace(r2_labels(), p, Truncation(3)), ContractViolation);
    EXPECT_THROW(make_subspace({}, p, Truncation(3)), InvalidParameter);
}

TEST(GenericPt, FirstOrderMatchesClosedFormR1) {
    const auto p = r1_params();
    const auto generic = effective_block(p, Truncation(3), r1_labels(), 1);
    const auto closed = closed_form_r1(p);
    EXPECT_LT((generic.matrix - closed.matrix).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_TRUE(is_hermitian(closed.matrix));
}

TEST(GenericPt, SecondOrderMatchesClosedFormR2) {
    for (double wb : {0.3, 0.4, 0.8, 1.2}) {
        const auto p = r2_params(wb);
        const auto closed = closed_form_r2(p);
        const auto generic = effective_block(p, Truncation(5), r2_labels(), 2);
        const double scale = closed.matrix.cwiseAbs().maxCoeff();
        EXPECT_LT((closed.matrix - generic.matrix).cwiseAbs().maxCoeff(), 1e-12 * scale) << "omega_b=" << wb;
    }
}

TEST(GenericPt, TruncationTooSmallDetected) {
    EXPECT_THROW(effective_block(r2_params(0.3), Truncation(3), r2_labels(), 2), InvalidTruncation);
}

TEST(GenericPt, RejectsBadOrderAndDimensions) {
    const auto p = r1_params();
    const Truncation t(3);
    const Matrix h0 = build_h0(p, t);
    const auto sub = make_subspace(r1_labels(), p, t);
    EXPECT_THROW(generic_pt(h0, h0, sub, t, 3), InvalidParameter);
    EXPECT_THROW(generic_pt(h0, Matrix::Zero(4, 4), sub, t, 1), DimensionMismatch);
}

TEST(ClosedFormR2, ScalesQuadraticallyInCouplings) {
    auto p = r2_params(0.3);
    const Matrix base = closed_form_r2(p).matrix;
    for (double lambda : {0.5, 3.0}) {
        auto q = p;
        q.g_a *= lambda;
        q.g_b *= lambda;
        EXPECT_LT((closed_form_r2(q).matrix - lambda * lambda * base).cwiseAbs().maxCoeff(),
                  1e-15 * lambda * lambda);
    }
}

TEST(ClosedFormR2, RequiresLinearCouplingAndZeroAzimuth) {
    auto p = r2_params(0.3);
    p.theta_a = 0.1;
    EXPECT_THROW(closed_form_r2(p), ContractViolation);
    p = r2_params(0.3);
    p.alpha = 0;
    EXPECT_THROW(closed_form_r2(p), ContractViolation);
}

TEST(Singularities, SingularRatiosRaise) {
    for (double wb : {0.5, 2.0 / 3.0}) {
        const auto p = r2_params(wb);
        EXPECT_THROW(closed_form_r2(p), SingularResonance);
        EXPECT_THROW(effective_block(p, Truncation(5), r2_labels(), 2), SingularResonance);
    }
}

TEST(Singularities, MessageNamesIntermediateState) {
    try {
        effective_block(r2_params(0.5), Truncation(5), r2_labels(), 2);
        FAIL() << "expected SingularResonance";
    } catch (const SingularResonance& e) {
        EXPECT_NE(std::string(e.what()).find("|1,1,0>"), std::string::npos) << e.what();
    }
}

TEST(R1Analytic, AnglesForBalancedCouplings) {
    const auto one = r1_analytic_angles(0.1, 0.1 / std::sqrt(2.0));
    ASSERT_EQ(one.size(), 1u);
    EXPECT_NEAR(one[0], 0.5 * kPi, 1e-12);
    const auto two = r1_analytic_angles(0.1, 0.05);
    ASSERT_EQ(two.size(), 2u);
    EXPECT_NEAR(std::sin(two[0]), std::sqrt(2.0) * 0.5, 1e-12);
    EXPECT_NEAR(two[0] + two[1], kPi, 1e-12);
    EXPECT_TRUE(r1_analytic_angles(0.1, 0.2).empty());
    EXPECT_THROW(r1_analytic_angles(0.0, 0.1), InvalidParameter);
}

TEST(R1Analytic, BlockEigenvectorIsEqualWeightPair) {
    SystemParams p;
    p.omega_b = 0.3;
    p = with_resonance(p, Resonance::r1);
    p.g_a = 0.01;
    p.g_b = p.g_a / std::sqrt(2.0);
    p.phi_a = 0.5 * kPi;
    const Matrix block = closed_form_r1(p).matrix;
    Vector minus(3), plus(3);
    minus << 1.0, -1.0, 0.0;
    plus << 1.0, 1.0, 0.0;
    minus /= std::sqrt(2.0);
    plus /= std::sqrt(2.0);
    EXPECT_NEAR(fidelity_eig(minus, block), 1.0, 1e-12);
    EXPECT_NEAR(fidelity_eig(plus, block), 0.5, 1e-12);
    p.gamma_b = kPi;
    EXPECT_NEAR(fidelity_eig(plus, closed_form_r1(p).matrix), 1.0, 1e-12);
}

TEST(R2Angles, RecoversReferenceOptimum) {
    const auto r = optimize_r2_angles(0.3, 0.5);
    EXPECT_GT(r.f_eig, 0.999);
    EXPECT_NEAR(r.phi_a / kPi, 0.210573, 0.01);
    EXPECT_NEAR(r.phi_b / kPi, 0.243693, 0.01);
    const auto again = optimize_r2_angles(0.3, 0.5);
    EXPECT_EQ(r.phi_a, again.phi_a);
    EXPECT_EQ(r.phi_b, again.phi_b);
}

TEST(R2Angles, SingularRatioRejected) {
    EXPECT_THROW(optimize_r2_angles(0.5, 0.5), SingularResonance);
    EXPECT_THROW(optimize_r2_angles(-0.3, 0.5), InvalidParameter);
}
