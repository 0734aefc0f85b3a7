#include "qexchange/propagator.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qex;

namespace {

SystemParams sample_params() {
    SystemParams p;
    p.omega_b = 0.3;
    p = with_resonance(p, Resonance::r1);
    p.g_a = 0.1;
    p.g_b = 0.07;
    p.phi_a = 0.4 * kPi;
    p.theta_a = 0.3;
    p.phi_b = 0.2;
    p.gamma_b = 0.9;
    return p;
}

Vector random_state(Eigen::Index d, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = Complex(n(rng), n(rng));
    return v / v.norm();
}

} // namespace

TEST(Eigh, RejectsNonHermitian) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;
    EXPECT_THROW(eigh(m), ContractViolation);
}

TEST(Eigh, ReconstructsMatrix) {
    const Truncation t(3);
    const Matrix h = build_total_h(sample_params(), t);
    const auto ed = eigh(h);
    const Matrix back = ed.vectors * ed.values.cast<Complex>().asDiagonal() * ed.vectors.adjoint();
    EXPECT_LT((back - h).cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index i = 1; i < ed.values.size(); ++i) EXPECT_LE(ed.values(i - 1), ed.values(i));
}

TEST(ExpmSkew, IsUnitary) {
    const Truncation t(4);
    const Matrix u = expm_skew(build_total_h(sample_params(), t, Eigen::Vector3d(0.2, 0.1, -0.3)), 2.5);
    EXPECT_LT((u.adjoint() * u - Matrix::Identity(t.dim(), t.dim())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(StepPropagator, MatchesSpectralExponential) {
    const Truncation t(5, 4);
    const auto p = sample_params();
    const StructuredHamiltonian sh(p, t);
    const StepPropagator prop(sh);
    for (double tau : {0.01, 0.7, 5.0}) {
        const Eigen::Vector3d w(0.3, -0.5, 0.8);
        Vector psi = random_state(t.dim(), 3);
        const Vector ref = expm_skew(build_total_h(p, t, w), tau) * psi;
        prop.step(psi, w, tau);
        EXPECT_LT((psi - ref).norm(), 1e-11) << "tau=" << tau;
        EXPECT_NEAR(psi.norm(), 1.0, 1e-12);
    }
}

TEST(StepPropagator, NegativeStepInverts) {
    const Truncation t(4);
    const StructuredHamiltonian sh(sample_params(), t);
    const StepPropagator prop(sh);
    const Eigen::Vector3d w(0.0, 0.4, 0.2);
    const Vector start = random_state(t.dim(), 5);
    Vector psi = start;
    prop.step(psi, w, 1.3);
    prop.step(psi, w, -1.3);
    EXPECT_LT((psi - start).norm(), 1e-12);
}

TEST(StepPropagator, DerivativesMatchFiniteDifferences) {
    const Truncation t(4, 3);
    const StructuredHamiltonian sh(sample_params(), t);
    const StepPropagator prop(sh);
    const Eigen::Vector3d w(0.2, -0.3, 0.5);
    const double tau = 0.8;
    const Vector start = random_state(t.dim(), 9);

    Vector psi = start;
    std::array<Vector, 3> dpsi;
    prop.step_with_derivatives(psi, dpsi, {true, true, true}, w, tau);

    Vector plain = start;
    prop.step(plain, w, tau);
    EXPECT_LT((plain - psi).norm(), 1e-13);

    const double h = 1e-5;
    for (int c = 0; c < 3; ++c) {
        Eigen::Vector3d wp = w, wm = w;
        wp(c) += h;
        wm(c) -= h;
        Vector up = start, um = start;
        prop.step(up, wp, tau);
        prop.step(um, wm, tau);
        const Vector fd = (up - um) / (2.0 * h);
        EXPECT_LT((fd - dpsi[c]).norm(), 1e-8 * std::max(1.0, fd.norm())) << "control " << c;
    }
}

TEST(StepPropagator, InactiveDerivativesUntouched) {
    const Truncation t(3);
    const StructuredHamiltonian sh(sample_params(), t);
    const StepPropagator prop(sh);
    Vector psi = random_state(t.dim(), 2);
    std::array<Vector, 3> dpsi;
    prop.step_with_derivatives(psi, dpsi, {false, true, false}, Eigen::Vector3d(0, 0.1, 0), 0.5);
    EXPECT_EQ(dpsi[0].size(), 0);
    EXPECT_EQ(dpsi[1].size(), t.dim());
    EXPECT_EQ(dpsi[2].size(), 0);
}
