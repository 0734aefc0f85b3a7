// perturbation.hpp: Degenerate perturbation theory on a chosen H_0 subspace:
// generic first/second-order blocks, the closed-form R1 and R2 blocks, the
// analytic R1 angle condition and the R2 angle search.

#pragma once

#include "qexchange/dynamics.hpp"
#include "qexchange/hilbert.hpp"
#include "qexchange/optimize.hpp"
#include "qexchange/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace qex {

struct DegenerateSubspace {
    std::vector<BasisIndex> labels;
    double energy{0.0};
};

struct EffectiveBlock {
    Matrix matrix;  // basis order follows `basis.labels`
    DegenerateSubspace basis;
    int order{1};
};

inline constexpr double kDegeneracyTol = 1e-10;
inline constexpr double kResonanceTol = 1e-9;

inline DegenerateSubspace make_subspace(const std::vector<BasisIndex>& labels, const SystemParams& p,
                                        const Truncation& t) {
    if (labels.empty()) throw InvalidParameter("make_subspace: empty label list");
    const RealVector e = h0_diagonal(p, t);
    const double e0 = e(flat_index(labels.front(), t));
    for (const auto& b : labels)
        if (std::abs(e(flat_index(b, t)) - e0) > kDegeneracyTol)
            throw ContractViolation("subspace state " + to_string(b) + " is not degenerate with " +
                                    to_string(labels.front()));
    return {labels, e0};
}

inline std::vector<BasisIndex> r1_labels() { return {{0, 1, 0}, {-1, 0, 1}, {1, 0, 0}}; }
inline std::vector<BasisIndex> r2_labels() { return {{-1, 1, 1}, {0, 2, 0}, {1, 0, 2}}; }

// Block of the perturbation v on `sub`. Order 1: bare matrix elements <i|v|j>.
// Order 2: sum_m <i|v|m><m|v|j> / (E - E_m) over m outside the subspace.
inline EffectiveBlock generic_pt(const Matrix& h0, const Matrix& v, const DegenerateSubspace& sub,
                                 const Truncation& t, int order) {
    if (order != 1 && order != 2) throw InvalidParameter("generic_pt: order must be 1 or 2");
    if (h0.rows() != t.dim() || v.rows() != t.dim() || h0.cols() != t.dim() || v.cols() != t.dim())
        throw DimensionMismatch("generic_pt: operator dimension does not match truncation");
    const std::size_t s = sub.labels.size();
    std::vector<Eigen::Index> idx(s);
    for (std::size_t i = 0; i < s; ++i) {
        idx[i] = flat_index(sub.labels[i], t);
        if (std::abs(h0(idx[i], idx[i]).real() - sub.energy) > kDegeneracyTol)
            throw ContractViolation("generic_pt: " + to_string(sub.labels[i]) + " is off the subspace energy");
    }

    EffectiveBlock out{Matrix::Zero(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)), sub, order};
    if (order == 1) {
        for (std::size_t i = 0; i < s; ++i)
            for (std::size_t j = 0; j < s; ++j) out.matrix(i, j) = v(idx[i], idx[j]);
        return out;
    }

    std::vector<bool> inside(static_cast<std::size_t>(t.dim()), false);
    for (auto i : idx) inside[static_cast<std::size_t>(i)] = true;
    const double scale = std::max(1e-300, v.cwiseAbs().maxCoeff());
    for (Eigen::Index m = 0; m < t.dim(); ++m) {
        if (inside[static_cast<std::size_t>(m)]) continue;
        bool coupled = false;
        for (auto i : idx) coupled = coupled || std::abs(v(i, m)) > 1e-14 * scale;
        if (!coupled) continue;
        const double gap = sub.energy - h0(m, m).real();
        if (std::abs(gap) < kResonanceTol)
            throw SingularResonance("generic_pt: intermediate state " + to_string(basis_label(m, t)) +
                                    " is degenerate with the subspace");
        for (std::size_t i = 0; i < s; ++i)
            for (std::size_t j = 0; j < s; ++j) out.matrix(i, j) += v(idx[i], m) * v(m, idx[j]) / gap;
    }
    return out;
}

// Same block built from parameters; the truncation is checked by repeating the
// calculation with one more Fock level per oscillator.
inline EffectiveBlock effective_block(const SystemParams& p, const Truncation& t,
                                      const std::vector<BasisIndex>& labels, int order) {
    auto compute = [&](const Truncation& tt) {
        const Matrix h0 = build_h0(p, tt);
        const Matrix v = build_total_h(p, tt) - h0;
        return generic_pt(h0, v, make_subspace(labels, p, tt), tt, order);
    };
    EffectiveBlock block = compute(t);
    const EffectiveBlock wider = compute(Truncation(t.n_a() + 1, t.n_b() + 1));
    const double change = (wider.matrix - block.matrix).cwiseAbs().maxCoeff();
    if (change > 1e-10 * std::max(1.0, block.matrix.cwiseAbs().maxCoeff()))
        throw InvalidTruncation("effective_block: truncation too small (block changes by " + std::to_string(change) +
                                " with one more Fock level)");
    return block;
}

// --------------------------------- R1 ---------------------------------------

// Basis {|0,1,0>, |-1,0,1>, |1,0,0>}; the common energy shift is dropped.
inline EffectiveBlock closed_form_r1(const SystemParams& p) {
    const Truncation t(2, 2);
    const DegenerateSubspace sub = make_subspace(r1_labels(), p, t);
    Matrix m = Matrix::Zero(3, 3);
    m(2, 0) = p.g_a / std::sqrt(2.0) * std::sin(p.phi_a) * std::exp(-kI * p.theta_a);
    m(2, 1) = p.g_b * (1.0 - p.alpha) * std::exp(-kI * p.gamma_b);
    m(0, 2) = std::conj(m(2, 0));
    m(1, 2) = std::conj(m(2, 1));
    return {m, sub, 1};
}

// All phi_a in [0, pi] with sin(phi_a) = sqrt(2) g_b / g_a.
inline std::vector<double> r1_analytic_angles(double g_a, double g_b) {
    if (!(g_a > 0.0)) throw InvalidParameter("r1_analytic_angles: g_a must be > 0");
    double s = std::sqrt(2.0) * std::abs(g_b) / g_a;
    if (s > 1.0 + 1e-12) return {};
    s = std::min(s, 1.0);
    const double a = std::asin(s);
    if (std::abs(kPi - 2.0 * a) < 1e-12) return {0.5 * kPi};
    return {a, kPi - a};
}

// --------------------------------- R2 ---------------------------------------

inline void check_r2_ratio(double omega_a, double omega_b) {
    const double r = omega_b / omega_a;
    for (double pole : {0.0, 0.5, 2.0 / 3.0, 1.5, 2.0})
        if (std::abs(r - pole) < kResonanceTol)
            throw SingularResonance("closed_form_r2: omega_b/omega_a = " + std::to_string(r) +
                                    " is a singular ratio of the second-order block");
}

// Basis {|-1,1,1>, |0,2,0>, |1,0,2>}; the common 2 omega_a shift is dropped.
inline EffectiveBlock closed_form_r2(const SystemParams& p) {
    if (p.alpha != 1 || p.theta_a != 0.0 || p.theta_b != 0.0)
        throw ContractViolation("closed_form_r2 requires alpha = 1 and theta_a = theta_b = 0");
    const double wa = p.omega_a, wb = p.omega_b, ga = p.g_a, gb = p.g_b;
    check_r2_ratio(wa, wb);
    const double sa = std::sin(p.phi_a), ca = std::cos(p.phi_a);
    const double sb = std::sin(p.phi_b), cb = std::cos(p.phi_b);
    const double ga2 = ga * ga, gb2 = gb * gb;

    const double v11 = 0.5 * (ga2 * sa * sa * (3 * wb - 4 * wa) / (wb * (2 * wa - wb)) - 2 * ga2 * ca * ca / wa +
                              gb2 * sb * sb * (3 * wa - 2 * wb) / (wa * (wa - 2 * wb)) - 2 * gb2 * cb * cb / wb);
    const double v21 = ga * gb * (ca * sb / wa - sa * cb / wb);
    const double v31 = 3 * ga * gb * sa * sb * (wa - wb) / (std::sqrt(2.0) * (wa - 2 * wb) * (2 * wa - wb));
    const double v22 = 0.5 * (ga2 * sa * sa * (3 / (wb - 2 * wa) + 3 / (2 * wb - 3 * wa) - 2 / (wa - 2 * wb) + 2 / wb) +
                              gb2 * sb * sb * (1 / (wb - 2 * wa) - 1 / wa));
    const double v33 = ga2 * sa * sa / (2 * wa - 4 * wb) - ga2 * ca * ca / wa +
                       gb2 * sb * sb * (10 * wa - 9 * wb) / (8 * wa * wa - 16 * wa * wb + 6 * wb * wb) -
                       gb2 * cb * cb / wb;

    Matrix m(3, 3);
    m << v11, v21, v31,
         v21, v22, 0.0,
         v31, 0.0, v33;
    DegenerateSubspace sub{r2_labels(), 2.0 * wa};
    return {m, sub, 2};
}

// (|0,2,0> + |1,0,2>)/sqrt2 in the closed_form_r2 basis
inline Vector r2_block_target() {
    Vector v(3);
    v << 0.0, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    return v;
}

inline double r2_block_fidelity(double omega_ratio, double g_ratio, double phi_a, double phi_b) {
    SystemParams p;
    p.omega_a = 1.0;
    p.omega_b = omega_ratio;
    p.alpha = 1;
    p.g_a = 1.0;
    p.g_b = g_ratio;
    p.phi_a = phi_a;
    p.phi_b = phi_b;
    return fidelity_eig(r2_block_target(), closed_form_r2(p).matrix);
}

struct R2Angles {
    double phi_a{0.0};
    double phi_b{0.0};
    double f_eig{0.0};
};

// Global maximiser of F_eig over [0, pi]^2; ties resolved towards the smallest
// phi_a, then phi_b.
inline R2Angles optimize_r2_angles(double omega_ratio, double g_ratio, GlobalOptions opts = {}) {
    if (!(omega_ratio > 0.0)) throw InvalidParameter("optimize_r2_angles: omega_ratio must be > 0");
    check_r2_ratio(1.0, omega_ratio);
    Bounds box{RealVector::Zero(2), RealVector::Constant(2, kPi)};
    opts.local.xtol = std::min(opts.local.xtol, 1e-11);
    const auto r = global_minimize(
        [&](const RealVector& x) { return -r2_block_fidelity(omega_ratio, g_ratio, x(0), x(1)); }, box, opts);
    return {r.arg(0), r.arg(1), -r.value};
}

} // namespace qex
