// controllability.hpp: Dimension of the dynamical Lie algebra generated by a
// drift and control Hamiltonians, by commutator closure with Gram-Schmidt.
//
// Elements are carried as Hermitian H (the algebra element is iH); the bracket
// is (H, K) -> i[H, K]. Each H is flattened to d^2 reals (diagonal, then
// sqrt2 Re and sqrt2 Im of the upper triangle) so that the Hilbert-Schmidt
// inner product becomes a plain dot product.

#pragma once

#include "qexchange/hilbert.hpp"
#include "qexchange/rabi.hpp"
#include "qexchange/types.hpp"

#include <cmath>
#include <deque>
#include <vector>

namespace qex {

struct LieBasis {
    std::vector<Matrix> elements;  // skew-Hermitian, orthonormal under Re tr(A^dagger B)
    int rank{0};
    bool saturated{false};         // stopped at max_dim before closure
};

namespace detail {

inline RealVector hermitian_to_real(const Matrix& h) {
    const Eigen::Index d = h.rows();
    RealVector v(d * d);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d; ++i) v(k++) = h(i, i).real();
    const double r2 = std::sqrt(2.0);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j) {
            v(k++) = r2 * h(i, j).real();
            v(k++) = r2 * h(i, j).imag();
        }
    return v;
}

inline Matrix real_to_hermitian(const RealVector& v, Eigen::Index d) {
    Matrix h(d, d);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d; ++i) h(i, i) = v(k++);
    const double r2 = std::sqrt(2.0);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j) {
            const double re = v(k++) / r2, im = v(k++) / r2;
            h(i, j) = Complex(re, im);
            h(j, i) = Complex(re, -im);
        }
    return h;
}

// Hermitian representative of a generator given either as H or as iH.
inline Matrix hermitian_representative(const Matrix& g) {
    if (g.rows() != g.cols()) throw DimensionMismatch("lie_rank: generator is not square");
    const double scale = std::max(1.0, g.size() ? g.cwiseAbs().maxCoeff() : 0.0);
    if ((g - g.adjoint()).cwiseAbs().maxCoeff() <= 1e-10 * scale) return 0.5 * (g + g.adjoint());
    if ((g + g.adjoint()).cwiseAbs().maxCoeff() <= 1e-10 * scale) {
        const Matrix h = -kI * g;
        return 0.5 * (h + h.adjoint());
    }
    throw ContractViolation("lie_rank: generator is neither Hermitian nor skew-Hermitian");
}

} // namespace detail

inline constexpr double kLieTolerance = 1e-8;

// Generators are made traceless, so the largest possible rank is d^2 - 1.
inline LieBasis lie_algebra(const std::vector<Matrix>& generators, int max_dim = -1) {
    if (generators.empty()) return {};
    const Eigen::Index d = generators.front().rows();
    for (const auto& g : generators)
        if (g.rows() != d) throw DimensionMismatch("lie_rank: generators differ in dimension");
    const long full = static_cast<long>(d) * d - 1;
    const long cap = max_dim < 0 ? full + 1 : max_dim;

    RealMatrix basis(d * d, std::min<long>(cap, full) + 1);
    std::vector<Matrix> herm;
    std::deque<std::size_t> pending;
    LieBasis out;

    // project out the span twice; accept if the residual is a non-negligible part of v
    auto try_insert = [&](RealVector v) {
        const double original = v.norm();
        if (original < 1e-13) return false;
        const Eigen::Index r = static_cast<Eigen::Index>(herm.size());
        for (int pass = 0; pass < 2 && r > 0; ++pass) v -= basis.leftCols(r) * (basis.leftCols(r).transpose() * v);
        const double rest = v.norm();
        if (rest <= kLieTolerance * original) return false;
        basis.col(r) = v / rest;
        herm.push_back(detail::real_to_hermitian(basis.col(r), d));
        pending.push_back(herm.size() - 1);
        return true;
    };

    auto done = [&]() {
        const long r = static_cast<long>(herm.size());
        if (r >= full) return true;
        if (r >= cap) {
            out.saturated = true;
            return true;
        }
        return false;
    };

    for (const auto& g : generators) {
        Matrix h = detail::hermitian_representative(g);
        h -= (h.trace() / static_cast<double>(d)) * Matrix::Identity(d, d);
        try_insert(detail::hermitian_to_real(h));
        if (done()) break;
    }

    while (!pending.empty() && !done()) {
        const std::size_t a = pending.front();
        pending.pop_front();
        const Matrix x = herm[a];
        const std::size_t count = herm.size();
        RealMatrix batch(d * d, static_cast<Eigen::Index>(count));
        for (std::size_t b = 0; b < count; ++b) {
            const Matrix c = kI * (x * herm[b] - herm[b] * x);
            batch.col(static_cast<Eigen::Index>(b)) = detail::hermitian_to_real(0.5 * (c + c.adjoint()));
        }
        // one blocked projection against the current span, then sequential insertion
        const RealVector norms = batch.colwise().norm().transpose();
        const Eigen::Index r = static_cast<Eigen::Index>(herm.size());
        batch -= basis.leftCols(r) * (basis.leftCols(r).transpose() * batch);
        for (Eigen::Index b = 0; b < batch.cols() && !done(); ++b) {
            if (batch.col(b).norm() <= kLieTolerance * norms(b)) continue;
            // rescale so the tolerance inside try_insert stays relative to the raw commutator
            RealVector v = batch.col(b);
            const Eigen::Index rr = static_cast<Eigen::Index>(herm.size());
            for (int pass = 0; pass < 2 && rr > r; ++pass)
                v -= basis.middleCols(r, rr - r) * (basis.middleCols(r, rr - r).transpose() * v);
            if (v.norm() <= kLieTolerance * norms(b)) continue;
            try_insert(v);
        }
    }

    out.rank = static_cast<int>(herm.size());
    out.elements.reserve(herm.size());
    for (const auto& h : herm) out.elements.push_back(kI * h);
    return out;
}

struct LieRank {
    int rank{0};
    bool saturated{false};
};

inline LieRank lie_rank(const std::vector<Matrix>& generators, int max_dim = -1) {
    const auto b = lie_algebra(generators, max_dim);
    return {b.rank, b.saturated};
}

struct ControllabilityReport {
    bool controllable{false};
    int rank{0};
    int expected{0};
    int generators_used{0};
};

inline ControllabilityReport controllability_report(const std::vector<Matrix>& generators) {
    const Eigen::Index d = generators.empty() ? 0 : generators.front().rows();
    const auto r = lie_rank(generators);
    const int expected = static_cast<int>(d * d - 1);
    return {r.rank == expected, r.rank, expected, static_cast<int>(generators.size())};
}

// {H_drift, S_c ⊗ 1 for each active control}
inline std::vector<Matrix> model_generators(const SystemParams& p, const Truncation& t,
                                            const std::array<bool, 3>& controls = {true, true, true}) {
    std::vector<Matrix> gens{build_total_h(p, t)};
    const auto s = spin1_operators();
    const std::array<Spin3, 3> ops{s.x, s.y, s.z};
    for (int c = 0; c < 3; ++c)
        if (controls[c]) gens.push_back(spin_operator_embedded(ops[c], t));
    return gens;
}

inline ControllabilityReport is_controllable(const SystemParams& p, const Truncation& t,
                                             const std::array<bool, 3>& controls = {true, true, true}) {
    return controllability_report(model_generators(p, t, controls));
}

// Single-oscillator model H_S + omega a†a + g S_x (a + a†) with spin controls.
inline std::vector<Matrix> rabi_generators(double D, double omega_z, double omega, double g, int n,
                                           const std::array<bool, 3>& controls = {false, true, true}) {
    const auto s = spin1_operators();
    const auto l = ladder_operators(n);
    const Matrix in = Matrix::Identity(n, n);
    const Spin3 hs = D * s.z * s.z + 0.5 * omega_z * s.z;
    std::vector<Matrix> gens{kron(Matrix(hs), in) + omega * kron(Matrix::Identity(3, 3), l.adag * l.a) +
                             g * kron(Matrix(s.x), l.a + l.adag)};
    const std::array<Spin3, 3> ops{s.x, s.y, s.z};
    for (int c = 0; c < 3; ++c)
        if (controls[c]) gens.push_back(kron(Matrix(ops[c]), in));
    return gens;
}

} // namespace qex
