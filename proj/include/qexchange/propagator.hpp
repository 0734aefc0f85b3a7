// propagator.hpp: Dense exponentials of Hermitian generators and the matrix-free
// step propagator used for piecewise-constant time evolution.

#pragma once

#include "qexchange/hilbert.hpp"
#include "qexchange/types.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <limits>

namespace qex {

struct EigenDecomposition {
    RealVector values;  // ascending
    Matrix vectors;     // columns
};

inline EigenDecomposition eigh(const Matrix& h, double tol = 1e-10) {
    const double scale = std::max(1.0, h.size() ? h.cwiseAbs().maxCoeff() : 0.0);
    if (hermiticity_defect(h) > tol * scale)
        throw ContractViolation("eigh: matrix is not Hermitian within tolerance");
    const Matrix sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success) throw Error("eigh: eigensolver failed to converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

// U = exp(-i dt h) for Hermitian h, via the spectral decomposition.
inline Matrix expm_skew(const Matrix& h, double dt) {
    const auto ed = eigh(h);
    const Vector phases = (-kI * dt * ed.values.cast<Complex>()).array().exp();
    return ed.vectors * phases.asDiagonal() * ed.vectors.adjoint();
}

// ------------------------- matrix-free step propagator ----------------------
//
// exp(-i tau H(omega)) psi by a Taylor series on sub-steps whose norm is kept
// below `max_substep_norm`. The spectrum is re-centred on the mid-point of the
// diagonal, so the series sees a smaller norm; the removed phase is restored
// exactly. Derivatives with respect to the control amplitudes come from the
// same series applied to the block generator [[A, B_c], [0, A]], whose
// upper-right block of the exponential is the exact Frechet derivative.

struct StepOptions {
    double max_substep_norm{3.0};
    int max_terms{200};
};

class StepPropagator {
public:
    explicit StepPropagator(const StructuredHamiltonian& h, StepOptions opts = {})
        : h_(&h), opts_(opts), shift_(h.spectral_center()) {}

    const StructuredHamiltonian& hamiltonian() const { return *h_; }

    // psi <- exp(-i tau H(omega)) psi ; negative tau gives the adjoint step.
    void step(Vector& psi, const Eigen::Vector3d& omega, double tau) const {
        if (tau == 0.0) return;
        const int substeps = substep_count(omega, tau);
        const Complex coef = -kI * (tau / substeps);
        Vector term, next, acc;
        for (int s = 0; s < substeps; ++s) {
            acc = psi;
            term = psi;
            int small = 0;
            for (int k = 1; k <= opts_.max_terms; ++k) {
                h_->apply(term, next, omega, shift_);
                term = (coef / static_cast<double>(k)) * next;
                acc += term;
                if (term.norm() <= kEps * acc.norm()) {
                    if (++small >= 2) break;
                } else {
                    small = 0;
                }
            }
            psi.swap(acc);
        }
        psi *= std::exp(-kI * tau * shift_);
    }

    // psi <- U psi and, for every active control c, dpsi[c] = (dU/dOmega_c) psi_in.
    void step_with_derivatives(Vector& psi, std::array<Vector, 3>& dpsi, const std::array<bool, 3>& active,
                               const Eigen::Vector3d& omega, double tau) const {
        const Eigen::Index d = psi.size();
        for (int c = 0; c < 3; ++c)
            if (active[c]) dpsi[c] = Vector::Zero(d);
        if (tau == 0.0) return;

        const int substeps = substep_count(omega, tau);
        const Complex coef = -kI * (tau / substeps);
        Vector term_b, next_b, acc_b;
        std::array<Vector, 3> term_t, acc_t;
        Vector next_t, spin_part;
        for (int s = 0; s < substeps; ++s) {
            acc_b = psi;
            term_b = psi;
            for (int c = 0; c < 3; ++c)
                if (active[c]) {
                    acc_t[c] = dpsi[c];
                    term_t[c] = dpsi[c];
                }
            int small = 0;
            for (int k = 1; k <= opts_.max_terms; ++k) {
                const Complex f = coef / static_cast<double>(k);
                double worst = 0.0;
                for (int c = 0; c < 3; ++c) {
                    if (!active[c]) continue;
                    h_->apply(term_t[c], next_t, omega, shift_);
                    h_->apply_spin(h_->control(c), term_b, spin_part);
                    term_t[c] = f * (next_t + spin_part);
                    acc_t[c] += term_t[c];
                    const double scale = std::max(acc_t[c].norm(), acc_b.norm());
                    worst = std::max(worst, term_t[c].norm() / (scale > 0.0 ? scale : 1.0));
                }
                h_->apply(term_b, next_b, omega, shift_);
                term_b = f * next_b;
                acc_b += term_b;
                worst = std::max(worst, term_b.norm() / acc_b.norm());
                if (worst <= kEps) {
                    if (++small >= 2) break;
                } else {
                    small = 0;
                }
            }
            psi.swap(acc_b);
            for (int c = 0; c < 3; ++c)
                if (active[c]) dpsi[c].swap(acc_t[c]);
        }
        const Complex phase = std::exp(-kI * tau * shift_);
        psi *= phase;
        for (int c = 0; c < 3; ++c)
            if (active[c]) dpsi[c] *= phase;
    }

private:
    static constexpr double kEps = std::numeric_limits<double>::epsilon();

    int substep_count(const Eigen::Vector3d& omega, double tau) const {
        const double norm = std::abs(tau) * h_->norm_bound(omega, shift_);
        return std::max(1, static_cast<int>(std::ceil(norm / opts_.max_substep_norm)));
    }

    const StructuredHamiltonian* h_;
    StepOptions opts_;
    double shift_;
};

} // namespace qex
