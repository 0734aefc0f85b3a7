// hilbert.hpp: Truncated spin-1 ⊗ Fock ⊗ Fock space, spin/ladder operators and
// the Hamiltonian builders for a spin-1 coupled to two oscillators.
//
// Basis ordering is spin-major: flat = (m_idx * n_a + k) * n_b + l, with
// m = +1, 0, -1 mapped to m_idx = 0, 1, 2. All energies are in units of omega_a
// unless a caller deliberately sets omega_a != 1.

#pragma once

#include "qexchange/types.hpp"

#include <array>
#include <cmath>
#include <string>

namespace qex {

// ------------------------------ parameters ----------------------------------

struct SystemParams {
    double omega_a{1.0};
    double omega_b{0.3};
    double D{0.0};        // zero-field splitting
    double omega_z{0.0};  // Zeeman frequency
    double g_a{0.0};
    double g_b{0.0};
    double theta_a{0.0};  // azimuthal, [0, 2pi)
    double theta_b{0.0};
    double phi_a{0.0};    // polar, [0, pi]
    double phi_b{0.0};
    double gamma_b{0.0};  // quadrupolar angle, [0, 2pi]
    int alpha{0};         // 1: linear (photon-photon), 0: quadrupolar (photon-phonon)

    void validate() const {
        if (!(omega_a > 0.0)) throw InvalidParameter("omega_a must be > 0");
        if (!(omega_b > 0.0)) throw InvalidParameter("omega_b must be > 0");
        if (alpha != 0 && alpha != 1) throw InvalidParameter("alpha must be 0 or 1");
        constexpr double eps = 1e-12;
        if (phi_a < -eps || phi_a > kPi + eps) throw InvalidParameter("phi_a must lie in [0, pi]");
        if (phi_b < -eps || phi_b > kPi + eps) throw InvalidParameter("phi_b must lie in [0, pi]");
        for (double v : {D, omega_z, g_a, g_b, theta_a, theta_b, gamma_b})
            if (!std::isfinite(v)) throw InvalidParameter("non-finite system parameter");
    }

    // Azimuthal angles wrapped into [0, 2pi); polar angles clamped into [0, pi].
    SystemParams canonical() const {
        auto wrap = [](double a) {
            double r = std::fmod(a, 2.0 * kPi);
            return r < 0.0 ? r + 2.0 * kPi : r;
        };
        auto clamp_polar = [](double a) { return std::min(std::max(a, 0.0), kPi); };
        SystemParams p = *this;
        p.theta_a = wrap(theta_a);
        p.theta_b = wrap(theta_b);
        p.gamma_b = wrap(gamma_b);
        p.phi_a = clamp_polar(phi_a);
        p.phi_b = clamp_polar(phi_b);
        return p;
    }
};

class Truncation {
public:
    Truncation(int n_a, int n_b) : n_a_(n_a), n_b_(n_b) {
        if (n_a < 2 || n_b < 2)
            throw InvalidTruncation("Fock truncation must keep at least 2 levels per oscillator");
    }
    explicit Truncation(int n) : Truncation(n, n) {}

    int n_a() const { return n_a_; }
    int n_b() const { return n_b_; }
    int oscillator_dim() const { return n_a_ * n_b_; }
    int dim() const { return 3 * n_a_ * n_b_; }

    bool operator==(const Truncation&) const = default;

private:
    int n_a_;
    int n_b_;
};

struct BasisIndex {
    int m{0};  // spin projection, +1 / 0 / -1
    int k{0};  // quanta in oscillator a
    int l{0};  // quanta in oscillator b

    bool operator==(const BasisIndex&) const = default;
};

inline int spin_slot(int m) {
    switch (m) {
    case 1: return 0;
    case 0: return 1;
    case -1: return 2;
    default: throw InvalidParameter("spin projection must be +1, 0 or -1");
    }
}

inline int spin_projection(int slot) { return 1 - slot; }

inline Eigen::Index flat_index(const BasisIndex& b, const Truncation& t) {
    if (b.k < 0 || b.k >= t.n_a() || b.l < 0 || b.l >= t.n_b())
        throw InvalidTruncation("basis label |" + std::to_string(b.m) + "," + std::to_string(b.k) + "," +
                                std::to_string(b.l) + "> lies outside the truncated space");
    return (static_cast<Eigen::Index>(spin_slot(b.m)) * t.n_a() + b.k) * t.n_b() + b.l;
}

inline BasisIndex basis_label(Eigen::Index flat, const Truncation& t) {
    if (flat < 0 || flat >= t.dim()) throw InvalidTruncation("flat index out of range");
    const int l = static_cast<int>(flat % t.n_b());
    const int k = static_cast<int>((flat / t.n_b()) % t.n_a());
    const int slot = static_cast<int>(flat / t.oscillator_dim());
    return {spin_projection(slot), k, l};
}

inline std::string to_string(const BasisIndex& b) {
    return "|" + std::to_string(b.m) + "," + std::to_string(b.k) + "," + std::to_string(b.l) + ">";
}

inline Vector basis_state(const BasisIndex& b, const Truncation& t) {
    Vector v = Vector::Zero(t.dim());
    v(flat_index(b, t)) = 1.0;
    return v;
}

// (|u> + |v>) / sqrt(2)
inline Vector symmetric_pair(const BasisIndex& u, const BasisIndex& v, const Truncation& t) {
    return (basis_state(u, t) + basis_state(v, t)) / std::sqrt(2.0);
}

// ------------------------------ operators -----------------------------------

struct SpinOperators {
    Spin3 x, y, z;
};

// Spin-1 matrices in the S_z eigenbasis ordered (+1, 0, -1).
inline SpinOperators spin1_operators() {
    const double r = 1.0 / std::sqrt(2.0);
    SpinOperators s;
    s.x << 0.0, r, 0.0,
           r, 0.0, r,
           0.0, r, 0.0;
    s.y << 0.0, -kI * r, 0.0,
           kI * r, 0.0, -kI * r,
           0.0, kI * r, 0.0;
    s.z << 1.0, 0.0, 0.0,
           0.0, 0.0, 0.0,
           0.0, 0.0, -1.0;
    return s;
}

struct LadderOperators {
    Matrix a;
    Matrix adag;
};

// a|k> = sqrt(k)|k-1>  →  a_{k-1,k} = sqrt(k)
inline LadderOperators ladder_operators(int n) {
    if (n < 2) throw InvalidTruncation("ladder_operators: need at least 2 levels");
    Matrix a = Matrix::Zero(n, n);
    for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    return {a, a.adjoint()};
}

struct CouplingOperators {
    Spin3 h_a;
    Spin3 h_b;
};

inline Spin3 rotated_spin(double theta, double phi) {
    const auto s = spin1_operators();
    return std::cos(theta) * std::sin(phi) * s.x + std::sin(theta) * std::sin(phi) * s.y + std::cos(phi) * s.z;
}

inline CouplingOperators coupling_operators(const SystemParams& p) {
    const auto s = spin1_operators();
    CouplingOperators c;
    c.h_a = rotated_spin(p.theta_a, p.phi_a);
    const Spin3 quad = std::cos(p.gamma_b) * (s.x * s.x - s.y * s.y) +
                       std::sin(p.gamma_b) * (s.x * s.y + s.y * s.x);
    c.h_b = static_cast<double>(p.alpha) * rotated_spin(p.theta_b, p.phi_b) +
            static_cast<double>(1 - p.alpha) * quad;
    return c;
}

inline Spin3 spin_hamiltonian(const SystemParams& p) {
    const auto s = spin1_operators();
    return p.D * s.z * s.z + 0.5 * p.omega_z * s.z;
}

inline Spin3 control_hamiltonian(const Eigen::Vector3d& omega) {
    const auto s = spin1_operators();
    return omega(0) * s.x + omega(1) * s.y + omega(2) * s.z;
}

// Diagonal of H_0 in the flat basis: D m^2 + (omega_z/2) m + omega_a k + omega_b l.
inline RealVector h0_diagonal(const SystemParams& p, const Truncation& t) {
    RealVector d(t.dim());
    for (Eigen::Index i = 0; i < t.dim(); ++i) {
        const auto b = basis_label(i, t);
        d(i) = p.D * b.m * b.m + 0.5 * p.omega_z * b.m + p.omega_a * b.k + p.omega_b * b.l;
    }
    return d;
}

// Pure formula; does not insist on positive frequencies.
inline Matrix build_h0(const SystemParams& p, const Truncation& t) {
    return h0_diagonal(p, t).cast<Complex>().asDiagonal();
}

// Generic assembly from spin-sector operators:
//   h_s ⊗ 1 ⊗ 1 + omega_a a†a + omega_b b†b + c_a ⊗ (a† + a) ⊗ 1 + c_b ⊗ 1 ⊗ (b† + b)
inline Matrix assemble_hamiltonian(const Truncation& t, const Spin3& h_s, double omega_a, double omega_b,
                                   const Spin3& c_a, const Spin3& c_b) {
    const auto la = ladder_operators(t.n_a());
    const auto lb = ladder_operators(t.n_b());
    const Matrix ia = Matrix::Identity(t.n_a(), t.n_a());
    const Matrix ib = Matrix::Identity(t.n_b(), t.n_b());
    const Matrix i3 = Matrix::Identity(3, 3);
    Matrix h = kron(Matrix(h_s), ia, ib);
    h += omega_a * kron(i3, la.adag * la.a, ib);
    h += omega_b * kron(i3, ia, lb.adag * lb.a);
    h += kron(Matrix(c_a), la.a + la.adag, ib);
    h += kron(Matrix(c_b), ia, lb.a + lb.adag);
    return h;
}

inline Matrix spin_operator_embedded(const Spin3& s, const Truncation& t) {
    return kron(Matrix(s), Matrix::Identity(t.oscillator_dim(), t.oscillator_dim()));
}

inline Matrix build_total_h(const SystemParams& p, const Truncation& t,
                            const Eigen::Vector3d& omega = Eigen::Vector3d::Zero()) {
    p.validate();
    const auto c = coupling_operators(p);
    return assemble_hamiltonian(t, spin_hamiltonian(p) + control_hamiltonian(omega), p.omega_a, p.omega_b,
                                p.g_a * c.h_a, p.g_b * c.h_b);
}

// ------------------------------ resonances ----------------------------------

enum class Resonance { r1, r1_alt, r2 };

struct ResonancePoint {
    double D;
    double omega_z;
};

inline ResonancePoint resonance_params(Resonance preset, double omega_b, double omega_a = 1.0) {
    switch (preset) {
    case Resonance::r1: return {omega_a - 0.5 * omega_b, omega_b};
    case Resonance::r1_alt: return {0.5 * (omega_a + omega_b), omega_b - omega_a};
    case Resonance::r2: return {1.5 * (omega_a - omega_b), omega_a - omega_b};
    }
    throw InvalidParameter("unknown resonance preset");
}

inline SystemParams with_resonance(SystemParams p, Resonance preset) {
    const auto r = resonance_params(preset, p.omega_b, p.omega_a);
    p.D = r.D;
    p.omega_z = r.omega_z;
    return p;
}

inline Resonance parse_resonance(const std::string& name) {
    if (name == "R1" || name == "r1") return Resonance::r1;
    if (name == "R1alt" || name == "r1alt" || name == "R1_alt") return Resonance::r1_alt;
    if (name == "R2" || name == "r2") return Resonance::r2;
    throw InvalidParameter("unknown resonance preset '" + name + "'");
}

// ------------------------- structured Hamiltonian ---------------------------
//
// Matrix-free form of build_total_h. Every term is a 3x3 spin operator times
// an oscillator factor that is diagonal or a quadrature (a + a†), so H·psi
// costs O(d) instead of O(d^2).

class StructuredHamiltonian {
public:
    StructuredHamiltonian(const SystemParams& p, const Truncation& t) : trunc_(t) {
        p.validate();
        diag_ = h0_diagonal(p, t);
        const auto c = coupling_operators(p);
        c_a_ = p.g_a * c.h_a;
        c_b_ = p.g_b * c.h_b;
        const auto s = spin1_operators();
        controls_ = {s.x, s.y, s.z};

        const int nab = t.oscillator_dim();
        w_a_ = RealVector::Zero(nab);
        w_b_ = RealVector::Zero(nab);
        for (int k = 0; k < t.n_a(); ++k)
            for (int l = 0; l < t.n_b(); ++l) {
                if (k + 1 < t.n_a()) w_a_(k * t.n_b() + l) = std::sqrt(static_cast<double>(k + 1));
                if (l + 1 < t.n_b()) w_b_(k * t.n_b() + l) = std::sqrt(static_cast<double>(l + 1));
            }
        diag_min_ = diag_.minCoeff();
        diag_max_ = diag_.maxCoeff();
    }

    const Truncation& truncation() const { return trunc_; }
    Eigen::Index dim() const { return trunc_.dim(); }
    const RealVector& diagonal() const { return diag_; }
    const Spin3& control(int c) const { return controls_[static_cast<std::size_t>(c)]; }

    // out = (H(omega) - shift) * in
    void apply(const Vector& in, Vector& out, const Eigen::Vector3d& omega, double shift = 0.0) const {
        const Eigen::Index nab = trunc_.oscillator_dim();
        out.resize(in.size());
        out = (diag_.array() - shift).cast<Complex>() * in.array();

        const Spin3 local = omega(0) * controls_[0] + omega(1) * controls_[1] + omega(2) * controls_[2];
        Eigen::MatrixXcd quad_a(nab, 3);
        Eigen::MatrixXcd quad_b(nab, 3);
        for (int s = 0; s < 3; ++s) {
            const auto col = in.segment(s * nab, nab);
            quadrature_a(col, quad_a.col(s));
            quadrature_b(col, quad_b.col(s));
        }
        for (int r = 0; r < 3; ++r) {
            auto dst = out.segment(r * nab, nab);
            for (int s = 0; s < 3; ++s) {
                if (c_a_(r, s) != 0.0) dst += c_a_(r, s) * quad_a.col(s);
                if (c_b_(r, s) != 0.0) dst += c_b_(r, s) * quad_b.col(s);
                if (local(r, s) != 0.0) dst += local(r, s) * in.segment(s * nab, nab);
            }
        }
    }

    // out = (spin ⊗ 1) * in
    void apply_spin(const Spin3& spin, const Vector& in, Vector& out) const {
        const Eigen::Index nab = trunc_.oscillator_dim();
        out = Vector::Zero(in.size());
        for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s)
                if (spin(r, s) != 0.0) out.segment(r * nab, nab) += spin(r, s) * in.segment(s * nab, nab);
    }

    // Upper bound on the spectral radius of H(omega) - shift.
    double norm_bound(const Eigen::Vector3d& omega, double shift) const {
        auto spin_norm = [](const Spin3& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); };
        const double xa = 2.0 * std::sqrt(static_cast<double>(trunc_.n_a() - 1));
        const double xb = 2.0 * std::sqrt(static_cast<double>(trunc_.n_b() - 1));
        const Spin3 local = omega(0) * controls_[0] + omega(1) * controls_[1] + omega(2) * controls_[2];
        return std::max(std::abs(diag_max_ - shift), std::abs(diag_min_ - shift)) + spin_norm(c_a_) * xa +
               spin_norm(c_b_) * xb + spin_norm(local);
    }

    double spectral_center() const { return 0.5 * (diag_min_ + diag_max_); }

    Matrix dense(const Eigen::Vector3d& omega = Eigen::Vector3d::Zero()) const {
        Matrix h(dim(), dim());
        Vector e = Vector::Zero(dim()), col;
        for (Eigen::Index j = 0; j < dim(); ++j) {
            e(j) = 1.0;
            apply(e, col, omega);
            h.col(j) = col;
            e(j) = 0.0;
        }
        return h;
    }

private:
    template <class In, class Out>
    void quadrature_a(const In& in, Out out) const {
        const Eigen::Index nb = trunc_.n_b();
        const Eigen::Index m = in.size() - nb;
        out.setZero();
        // (a + a†): a contributes sqrt(k+1) psi[k+1], a† contributes sqrt(k) psi[k-1]
        out.head(m).array() += w_a_.head(m).array().cast<Complex>() * in.tail(m).array();
        out.tail(m).array() += w_a_.head(m).array().cast<Complex>() * in.head(m).array();
    }

    template <class In, class Out>
    void quadrature_b(const In& in, Out out) const {
        const Eigen::Index m = in.size() - 1;
        out.setZero();
        out.head(m).array() += w_b_.head(m).array().cast<Complex>() * in.tail(m).array();
        out.tail(m).array() += w_b_.head(m).array().cast<Complex>() * in.head(m).array();
    }

    Truncation trunc_;
    RealVector diag_;
    Spin3 c_a_;
    Spin3 c_b_;
    std::array<Spin3, 3> controls_;
    RealVector w_a_;
    RealVector w_b_;
    double diag_min_{0.0};
    double diag_max_{0.0};
};

} // namespace qex
