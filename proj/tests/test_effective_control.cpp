#include "qexchange/bessel.hpp"
#include "qexchange/effective_control.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

using namespace qex;

namespace {

SystemParams r1_params(double g) {
    SystemParams p;
    p.omega_b = 0.3;
    p = with_resonance(p, Resonance::r1);
    p.g_a = g;
    p.g_b = g / std::sqrt(2.0);
    p.phi_a = 0.5 * kPi;
    return p;
}

} // namespace

TEST(Bessel, MatchesBoost) {
    for (int n = 0; n <= 12; ++n)
        for (double x : {1e-6, 0.1, 0.5, 1.0, 1.60202, 2.5, 3.20404, 7.3, 15.0, 31.0}) {
            const double ref = boost::math::cyl_bessel_j(n, x);
            EXPECT_NEAR(bessel_j(n, x), ref, 1e-13 + 1e-12 * std::abs(ref)) << "n=" << n << " x=" << x;
        }
}

TEST(Bessel, SymmetryRelations) {
    for (int n = 0; n <= 6; ++n)
        for (double x : {0.3, 2.2, 9.1}) {
            const double sign = n % 2 ? -1.0 : 1.0;
            EXPECT_NEAR(bessel_j(-n, x), sign * bessel_j(n, x), 1e-15);
            EXPECT_NEAR(bessel_j(n, -x), sign * bessel_j(n, x), 1e-15);
        }
    EXPECT_EQ(bessel_j(0, 0.0), 1.0);
    EXPECT_EQ(bessel_j(3, 0.0), 0.0);
}

TEST(Bessel, AllOrdersConsistent) {
    const auto all = bessel_j_all(20, 4.2);
    ASSERT_EQ(all.size(), 21u);
    for (int n = 0; n <= 20; ++n) EXPECT_NEAR(all[n], boost::math::cyl_bessel_j(n, 4.2), 1e-14);
    // sum rule J_0 + 2 sum J_2k = 1
    double s = all[0];
    for (int k = 1; 2 * k <= 20; ++k) s += 2.0 * all[2 * k];
    EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Drive, ControlPropagatorUnitaryAndPeriodic) {
    SinusoidalDrive d{2.1, 3.0, 0.3};
    for (double t : {0.0, 0.4, 1.3}) {
        const Spin3 u = control_propagator(d, t);
        EXPECT_LT((u.adjoint() * u - Spin3::Identity()).norm(), 1e-14);
    }
    EXPECT_LT((control_propagator(d, d.period()) - Spin3::Identity()).norm(), 1e-12);
    // agrees with the spectral exponential
    const auto s = spin1_operators();
    const double b = d.ratio() * std::sin(d.Omega_c * 0.4);
    const Matrix ns = std::cos(d.theta_c) * s.y + std::sin(d.theta_c) * s.z;
    EXPECT_LT((Matrix(control_propagator(d, 0.4)) - expm_skew(ns, b)).norm(), 1e-13);
}

TEST(Drive, NumericAverageMatchesClosedForm) {
    const auto c = coupling_operators(r1_params(0.1));
    for (double x : {0.3, 1.60202, 3.11897}) {
        SinusoidalDrive d{x * 3.0, 3.0, 0.5 * kPi};
        for (const Spin3& op : {c.h_a, c.h_b, spin_hamiltonian(r1_params(0.1))})
            EXPECT_LT((numeric_average(d, op) - closed_form_average(d, op)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Drive, AverageDependsOnlyOnRatio) {
    const auto c = coupling_operators(r1_params(0.1));
    const Spin3 a = numeric_average({1.2 * 2.0, 2.0, 0.8}, c.h_a);
    const Spin3 b = numeric_average({1.2 * 5.0, 5.0, 0.8}, c.h_a);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Drive, ClosedFormRequiresZPolarization) {
    SinusoidalDrive d{1.0, 3.0, 0.4};
    EXPECT_THROW(effective_couplings_closed(d), ContractViolation);
    EXPECT_THROW(closed_form_average(d, Spin3::Identity()), ContractViolation);
    d.theta_c = 0.5 * kPi;
    const auto s = effective_couplings_closed(d);
    EXPECT_NEAR(s.scale_a, boost::math::cyl_bessel_j(0, 1.0 / 3.0), 1e-14);
    EXPECT_NEAR(s.scale_b, boost::math::cyl_bessel_j(0, 2.0 / 3.0), 1e-14);
    EXPECT_THROW(SinusoidalDrive({1.0, 0.0, 0.0}).validate(), InvalidParameter);
}

TEST(Drive, ZeroAmplitudeLeavesHamiltonianUnchanged) {
    const auto p = r1_params(0.05);
    const Truncation t(3);
    const auto e = effective_hamiltonian(p, {0.0, 3.0, 0.5 * kPi});
    EXPECT_LT((build_effective_h(p, t, e) - build_total_h(p, t)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DriveRatio, RootsSolveTheEquation) {
    const double target = -1.0 / std::sqrt(2.0);
    const auto r = solve_drive_ratio(target, 6.0);
    ASSERT_GE(r.roots.size(), 2u);
    for (double x : r.roots) {
        EXPECT_NEAR(boost::math::cyl_bessel_j(0, 2.0 * x) / boost::math::cyl_bessel_j(0, x), target, 1e-9);
        EXPECT_GT(x, 0.0);
        EXPECT_LE(x, 6.0);
    }
    for (std::size_t i = 1; i < r.roots.size(); ++i) EXPECT_LT(r.roots[i - 1], r.roots[i]);
    EXPECT_NEAR(r.roots[0], 1.6019800, 1e-6);
    EXPECT_FALSE(r.limit_root_at_zero);
}

TEST(DriveRatio, TargetOneHasLimitRoot) {
    EXPECT_TRUE(solve_drive_ratio(1.0, 2.0).limit_root_at_zero);
    EXPECT_THROW(solve_drive_ratio(std::nan(""), 2.0), InvalidParameter);
}

TEST(DriveMap, ZeroRatioEqualsUndrivenEigenFidelity) {
    const auto p = r1_params(0.01);
    const Truncation t(3);
    const Vector target = symmetric_pair({0, 1, 0}, {-1, 0, 1}, t);
    const auto pts = fidelity_map_drive(p, t, target, {0.5 * kPi, 0.2}, {0.0, 1.0});
    ASSERT_EQ(pts.size(), 4u);
    const double ref = fidelity_eig(target, build_total_h(p, t));
    EXPECT_NEAR(pts[0].f_eig, ref, 1e-10);
    EXPECT_NEAR(pts[2].f_eig, ref, 1e-10);
    for (const auto& q : pts) {
        EXPECT_GE(q.f_eig, 0.0);
        EXPECT_LE(q.f_eig, 1.0 + 1e-12);
    }
}

TEST(Magnus, VanishesWithoutDrive) {
    const auto est = magnus_error_estimate(r1_params(0.05), Truncation(3), {0.0, 3.0, 0.5 * kPi}, 10.0, 3, 3);
    EXPECT_LT(est.bound, 1e-10);
    EXPECT_LT(est.leading, 1e-10);
}

TEST(Magnus, DecreasesWithCarrierFrequency) {
    const auto p = r1_params(0.05);
    const Truncation t(3);
    const double x = 1.60202;
    double prev = INFINITY;
    for (double w : {3.0, 6.0, 12.0}) {
        const auto est = magnus_error_estimate(p, t, {x * w, w, 0.5 * kPi}, 10.0, 3, 3);
        EXPECT_TRUE(std::isfinite(est.bound));
        EXPECT_GT(est.bound, 0.0);
        EXPECT_LT(est.bound, prev);
        prev = est.bound;
    }
}

TEST(Magnus, WeightSecularBranch) {
    const double w = 2.0, t = 5.0;
    EXPECT_NEAR(detail::magnus_weight(1, 2, t, w), 1.0 / (w * w), 1e-15);
    EXPECT_NEAR(detail::magnus_weight(0, 2, t, w), (2.0 / (2 * w) + t) / (2 * w), 1e-15);
    EXPECT_NEAR(detail::magnus_weight(-2, 2, t, w), (2.0 / (2 * w) + t) / (2 * w), 1e-15);
}

TEST(BesselProducts, MaximaOfJ0J1) {
    const auto m = bessel_product_maxima(10.0);
    ASSERT_GE(m.size(), 2u);
    EXPECT_NEAR(m[0].x, 1.0820, 2e-3);
    EXPECT_NEAR(m[0].value, 0.3392, 1e-3);
    const double x0 = m[0].x;
    EXPECT_NEAR(std::abs(boost::math::cyl_bessel_j(0, x0) * boost::math::cyl_bessel_j(1, x0)), m[0].value, 1e-12);
}

TEST(BesselProducts, SignedProductSkipsNegativeLobes) {
    const auto a = bessel_product_maxima(10.0);
    const auto s = bessel_product_maxima(10.0, 4000, false);
    ASSERT_GE(a.size(), 3u);
    ASSERT_GE(s.size(), 2u);
    EXPECT_NEAR(a[1].x, 3.0428, 2e-3);
    EXPECT_NEAR(s[1].x, 4.6197, 2e-3);
    EXPECT_NEAR(s[1].value, 0.07603, 1e-4);
    for (const auto& m : s) EXPECT_GT(m.value, 0.0);
}
