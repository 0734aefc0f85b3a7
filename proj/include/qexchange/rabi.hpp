// rabi.hpp: Closed-form eigensystem of the single-oscillator Rabi Hamiltonian
// omega a†a + g S_z (a + a†), worked in the frame where the coupling operator is
// diagonal. In each m sector the eigenstates are displaced Fock states.

#pragma once

#include "qexchange/hilbert.hpp"
#include "qexchange/types.hpp"

#include <cmath>
#include <vector>

namespace qex {

struct RabiParams {
    double omega{1.0};
    double g{0.0};
    int n{40};

    void validate() const {
        if (!(omega > 0.0)) throw InvalidParameter("rabi: omega must be > 0");
        if (!std::isfinite(g)) throw InvalidParameter("rabi: g must be finite");
        if (n < 2) throw InvalidTruncation("rabi: need at least 2 oscillator levels");
    }
};

inline void check_projection(int m) {
    if (m < -1 || m > 1) throw InvalidParameter("rabi: m must be -1, 0 or 1");
}

// E_{m,k} = omega k - g^2 m^2 / omega
inline double rabi_eigenvalue(int m, int k, const RabiParams& p) {
    check_projection(m);
    if (k < 0) throw InvalidParameter("rabi: k must be >= 0");
    if (!(p.omega > 0.0)) throw InvalidParameter("rabi: omega must be > 0");
    return p.omega * k - p.g * p.g * m * m / p.omega;
}

// Dense 3n x 3n Hamiltonian omega a†a + g S_z (a + a†), spin-major ordering.
inline Matrix rabi_hamiltonian(const RabiParams& p) {
    p.validate();
    const auto l = ladder_operators(p.n);
    const auto s = spin1_operators();
    return kron(Matrix::Identity(3, 3), p.omega * l.adag * l.a) + p.g * kron(Matrix(s.z), l.a + l.adag);
}

// Oscillator amplitudes <p|m,k) of the displaced Fock state, lambda = g m / omega:
//   e^{-lambda^2/2} sum_j (-1)^{p-j} sqrt(k! p!) / (j! (k-j)! (p-j)!) lambda^{p+k-2j}
// evaluated in log space. Throws if more than 1e-10 of the norm lies beyond n levels.
inline RealVector rabi_eigenvector(int m, int k, const RabiParams& p) {
    p.validate();
    check_projection(m);
    if (k < 0 || k >= p.n) throw InvalidTruncation("rabi_eigenvector: k must lie in [0, n)");
    const double lambda = p.g * m / p.omega;
    RealVector v = RealVector::Zero(p.n);
    if (lambda == 0.0) {
        v(k) = 1.0;
        return v;
    }
    const double log_l = std::log(std::abs(lambda));
    const double sign_l = lambda < 0.0 ? -1.0 : 1.0;
    const double base = -0.5 * lambda * lambda + 0.5 * std::lgamma(k + 1.0);
    for (int q = 0; q < p.n; ++q) {
        const int jmax = std::min(k, q);
        std::vector<double> logs(static_cast<std::size_t>(jmax) + 1);
        std::vector<double> signs(static_cast<std::size_t>(jmax) + 1);
        double peak = -INFINITY;
        for (int j = 0; j <= jmax; ++j) {
            const int power = q + k - 2 * j;
            logs[j] = base + 0.5 * std::lgamma(q + 1.0) - std::lgamma(j + 1.0) - std::lgamma(k - j + 1.0) -
                      std::lgamma(q - j + 1.0) + power * log_l;
            signs[j] = ((q - j) % 2 ? -1.0 : 1.0) * (power % 2 ? sign_l : 1.0);
            peak = std::max(peak, logs[j]);
        }
        double acc = 0.0;
        for (int j = 0; j <= jmax; ++j) acc += signs[j] * std::exp(logs[j] - peak);
        v(q) = acc * std::exp(peak);
    }
    const double tail = 1.0 - v.squaredNorm();
    if (tail > 1e-10)
        throw TruncationTail("rabi_eigenvector: " + std::to_string(tail) +
                             " of the norm lies beyond the truncation; increase n");
    return v / v.norm();
}

// The same eigenvector embedded in the 3n space (spin slot of m).
inline Vector rabi_state(int m, int k, const RabiParams& p) {
    const RealVector osc = rabi_eigenvector(m, k, p);
    Vector out = Vector::Zero(3 * p.n);
    out.segment(spin_slot(m) * p.n, p.n) = osc.cast<Complex>();
    return out;
}

// Order-2 weak-coupling expansion, unnormalised:
//   (1 - (2k+1) lambda^2 / 2)|k> + lambda (sqrt(k)|k-1> - sqrt(k+1)|k+1>)
inline RealVector weak_expansion(int m, int k, const RabiParams& p) {
    check_projection(m);
    if (k < 0) throw InvalidParameter("weak_expansion: k must be >= 0");
    if (k + 1 >= p.n) throw InvalidTruncation("weak_expansion: need n > k + 1");
    const double lambda = p.g * m / p.omega;
    RealVector v = RealVector::Zero(p.n);
    v(k) = 1.0 - (2.0 * k + 1.0) * lambda * lambda / 2.0;
    if (k > 0) v(k - 1) = lambda * std::sqrt(static_cast<double>(k));
    v(k + 1) = -lambda * std::sqrt(k + 1.0);
    return v;
}

// Largest deviation from the exact amplitudes on |k-1>, |k>, |k+1>. The
// |k+-2> amplitudes, which the expansion omits, are O(lambda^2).
inline double weak_expansion_error(int m, int k, const RabiParams& p) {
    const RealVector exact = rabi_eigenvector(m, k, p);
    const RealVector approx = weak_expansion(m, k, p);
    double err = 0.0;
    for (int q = std::max(0, k - 1); q <= k + 1; ++q) err = std::max(err, std::abs(exact(q) - approx(q)));
    return err;
}

struct OverlapRow {
    double g_over_omega;
    int n_offset;
    double overlap;
};

// <m,(k+n)_a|m,k) for n in [n_lo, n_hi] and every g/omega in `ratios`.
inline std::vector<OverlapRow> overlap_scan(int m, int k, const RabiParams& p, int n_lo, int n_hi,
                                            const std::vector<double>& ratios) {
    if (k + n_lo < 0) throw InvalidParameter("overlap_scan: k + n must stay >= 0");
    if (k + n_hi >= p.n) throw InvalidTruncation("overlap_scan: k + n exceeds the truncation");
    std::vector<OverlapRow> rows;
    for (double r : ratios) {
        RabiParams q = p;
        q.g = r * p.omega;
        const RealVector v = rabi_eigenvector(m, k, q);
        for (int n = n_lo; n <= n_hi; ++n) rows.push_back({r, n, v(k + n)});
    }
    return rows;
}

} // namespace qex
