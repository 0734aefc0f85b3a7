#include "qexchange/optimize.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

using namespace qex;

namespace {

Bounds box2(double lo, double hi) { return {RealVector::Constant(2, lo), RealVector::Constant(2, hi)}; }

} // namespace

TEST(NelderMead, ConvergesOnQuadratic) {
    auto f = [](const RealVector& x) { return std::pow(x(0) - 0.3, 2) + 4.0 * std::pow(x(1) + 0.2, 2); };
    const auto r = nelder_mead(f, RealVector::Zero(2), box2(-1.0, 1.0));
    EXPECT_NEAR(r.arg(0), 0.3, 1e-6);
    EXPECT_NEAR(r.arg(1), -0.2, 1e-6);
    EXPECT_LT(r.value, 1e-11);
}

TEST(NelderMead, RespectsBounds) {
    auto f = [](const RealVector& x) { return x(0) + x(1); };
    const auto r = nelder_mead(f, RealVector::Constant(2, 0.5), box2(0.0, 1.0));
    EXPECT_GE(r.arg.minCoeff(), 0.0);
    EXPECT_LE(r.arg.maxCoeff(), 1.0);
    EXPECT_NEAR(r.value, 0.0, 1e-8);
}

TEST(NelderMead, Rosenbrock) {
    auto f = [](const RealVector& x) { return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2); };
    NelderMeadOptions o;
    o.max_evals = 20000;
    o.restarts = 3;
    const auto r = nelder_mead(f, RealVector::Constant(2, -1.0), box2(-2.0, 2.0), o);
    EXPECT_NEAR(r.arg(0), 1.0, 1e-4);
    EXPECT_NEAR(r.arg(1), 1.0, 1e-4);
}

TEST(GlobalMinimize, FindsGlobalAmongManyLocalMinima) {
    // Rastrigin on [-5.12, 5.12]^2, global minimum 0 at the origin
    auto f = [](const RealVector& x) {
        double s = 20.0;
        for (int i = 0; i < 2; ++i) s += x(i) * x(i) - 10.0 * std::cos(2.0 * kPi * x(i));
        return s;
    };
    GlobalOptions o;
    o.grid_points = 41;
    const auto r = global_minimize(f, box2(-5.12, 5.12), o);
    EXPECT_NEAR(r.value, 0.0, 1e-9);
    EXPECT_LT(r.arg.norm(), 1e-5);
}

TEST(GlobalMinimize, TiesResolveLexicographically) {
    // two exact global minima at (+-0.5, 0.2)
    auto f = [](const RealVector& x) { return std::pow(x(0) * x(0) - 0.25, 2) + std::pow(x(1) - 0.2, 2); };
    const auto r = global_minimize(f, box2(-1.0, 1.0));
    EXPECT_NEAR(r.arg(0), -0.5, 1e-5);
    EXPECT_NEAR(r.arg(1), 0.2, 1e-5);
}

TEST(GlobalMinimize, DeterministicAcrossRunsAndThreads) {
    auto f = [](const RealVector& x) { return std::sin(3.0 * x(0)) * std::cos(2.0 * x(1)) + 0.1 * x.squaredNorm(); };
    GlobalOptions o;
    o.random_samples = 300;
    o.seed = 42;
    set_default_threads(1);
    const auto a = global_minimize(f, box2(-3.0, 3.0), o);
    set_default_threads(4);
    const auto b = global_minimize(f, box2(-3.0, 3.0), o);
    set_default_threads(1);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.arg(0), b.arg(0));
    EXPECT_EQ(a.arg(1), b.arg(1));
}

TEST(GlobalMinimize, InvalidBoundsRejected) {
    auto f = [](const RealVector& x) { return x.sum(); };
    Bounds bad{RealVector::Constant(2, 1.0), RealVector::Constant(2, 0.0)};
    EXPECT_THROW(global_minimize(f, bad), InvalidParameter);
}
