// types.hpp: Shared numeric aliases, error types and small matrix helpers

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace qex {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using Spin3 = Eigen::Matrix3cd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

// --------------------------------- errors -----------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidTruncation : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class ContractViolation : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// Raised when an energy denominator vanishes inside a perturbative sum.
class SingularResonance : public Error {
public:
    using Error::Error;
};

// Raised when a truncated Fock expansion drops non-negligible weight.
class TruncationTail : public Error {
public:
    using Error::Error;
};

// ------------------------------- helpers ------------------------------------

// max_ij |H_ij - conj(H_ji)|
inline double hermiticity_defect(const Matrix& h) {
    if (h.rows() != h.cols()) throw DimensionMismatch("hermiticity_defect: matrix is not square");
    if (h.size() == 0) return 0.0;
    return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix& h, double tol = 1e-12) {
    return hermiticity_defect(h) < tol;
}

inline Matrix commutator(const Matrix& a, const Matrix& b) {
    return a * b - b * a;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Matrix kron(const Matrix& a, const Matrix& b, const Matrix& c) {
    return kron(kron(a, b), c);
}

inline void require_same_dim(const Vector& a, const Vector& b, const char* where) {
    if (a.size() != b.size())
        throw DimensionMismatch(std::string(where) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
}

} // namespace qex
