// effective_control.hpp: Sinusoidal drives on the spin: rotating-frame
// propagator, period-averaged operators, Bessel-rescaled couplings, drive-ratio
// roots, the second-order Magnus estimate and full-model validation.

#pragma once

#include "qexchange/bessel.hpp"
#include "qexchange/dynamics.hpp"
#include "qexchange/hilbert.hpp"
#include "qexchange/parallel.hpp"
#include "qexchange/propagator.hpp"
#include "qexchange/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

namespace qex {

// Omega(t) = A_c cos(Omega_c t) (0, cos theta_c, sin theta_c)
struct SinusoidalDrive {
    double A_c{0.0};
    double Omega_c{1.0};
    double theta_c{0.5 * kPi};

    double ratio() const { return A_c / Omega_c; }
    double period() const { return 2.0 * kPi / Omega_c; }

    void validate() const {
        if (!(Omega_c > 0.0)) throw InvalidParameter("drive: Omega_c must be > 0");
        if (!std::isfinite(A_c)) throw InvalidParameter("drive: A_c must be finite");
        if (theta_c < -1e-12 || theta_c > kPi + 1e-12) throw InvalidParameter("drive: theta_c must lie in [0, pi]");
    }

    Eigen::Vector3d field(double t) const {
        const double a = A_c * std::cos(Omega_c * t);
        return {0.0, a * std::cos(theta_c), a * std::sin(theta_c)};
    }
};

inline bool is_z_polarized(const SinusoidalDrive& d) { return std::abs(d.theta_c - 0.5 * kPi) < 1e-12; }

// U_c(t) = exp(-i B n.S), B = (A_c/Omega_c) sin(Omega_c t), n = (0, cos theta_c, sin theta_c).
// For spin 1, exp(-i phi n.S) = 1 - i sin(phi) n.S + (cos(phi) - 1)(n.S)^2.
inline Spin3 control_propagator(const SinusoidalDrive& d, double t) {
    const auto s = spin1_operators();
    const Spin3 ns = std::cos(d.theta_c) * s.y + std::sin(d.theta_c) * s.z;
    const double b = d.ratio() * std::sin(d.Omega_c * t);
    return Spin3::Identity() - kI * std::sin(b) * ns + (std::cos(b) - 1.0) * ns * ns;
}

struct CouplingScales {
    double scale_a;
    double scale_b;
};

// (J_0(x), J_0(2x)) with x = A_c/Omega_c; only valid for a z-polarised drive.
inline CouplingScales effective_couplings_closed(const SinusoidalDrive& d) {
    d.validate();
    if (!is_z_polarized(d))
        throw ContractViolation("effective_couplings_closed requires theta_c = pi/2; use numeric_average");
    return {bessel_j(0, d.ratio()), bessel_j(0, 2.0 * d.ratio())};
}

// Period average of U_c^dagger op U_c for theta_c = pi/2: element (m, m') picks up
// J_0(|m - m'| x).
inline Spin3 closed_form_average(const SinusoidalDrive& d, const Spin3& op) {
    if (!is_z_polarized(d)) throw ContractViolation("closed_form_average requires theta_c = pi/2");
    const double x = d.ratio();
    const std::array<double, 3> j = {1.0, bessel_j(0, x), bessel_j(0, 2.0 * x)};
    Spin3 out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out(r, c) = op(r, c) * j[static_cast<std::size_t>(std::abs(r - c))];
    return out;
}

// (1/T) int_0^T U_c^dagger(t) op U_c(t) dt over one carrier period, trapezoid rule
// with doubling until successive estimates agree to 1e-13.
inline Spin3 numeric_average(const SinusoidalDrive& d, const Spin3& op, int periods = 1) {
    d.validate();
    if (periods < 1) throw InvalidParameter("numeric_average: periods must be >= 1");
    const double span = periods * d.period();
    auto estimate = [&](int n) {
        Spin3 acc = Spin3::Zero();
        for (int j = 0; j < n; ++j) {
            const Spin3 u = control_propagator(d, span * j / n);
            acc += u.adjoint() * op * u;
        }
        return Spin3(acc / static_cast<double>(n));
    };
    const double scale = std::max(1.0, op.cwiseAbs().maxCoeff());
    int n = 16 * periods;
    Spin3 prev = estimate(n);
    for (int round = 0; round < 14; ++round) {
        n *= 2;
        const Spin3 next = estimate(n);
        if ((next - prev).cwiseAbs().maxCoeff() < 1e-13 * scale) return Spin3(0.5 * (next + next.adjoint()));
        prev = next;
    }
    return Spin3(0.5 * (prev + prev.adjoint()));
}

enum class AverageMethod { closed_form, numeric_average };

struct EffectiveHamiltonian {
    Spin3 h_s_eff;
    Spin3 h_a_eff;  // multiplies g_a (a + a†)
    Spin3 h_b_eff;  // multiplies g_b (b + b†)
    AverageMethod method;
};

inline EffectiveHamiltonian effective_hamiltonian(const SystemParams& p, const SinusoidalDrive& d,
                                                  AverageMethod method = AverageMethod::numeric_average) {
    p.validate();
    d.validate();
    const auto c = coupling_operators(p);
    const Spin3 hs = spin_hamiltonian(p);
    if (method == AverageMethod::closed_form)
        return {closed_form_average(d, hs), closed_form_average(d, c.h_a), closed_form_average(d, c.h_b), method};
    return {numeric_average(d, hs), numeric_average(d, c.h_a), numeric_average(d, c.h_b), method};
}

inline Matrix build_effective_h(const SystemParams& p, const Truncation& t, const EffectiveHamiltonian& e) {
    return assemble_hamiltonian(t, e.h_s_eff, p.omega_a, p.omega_b, p.g_a * e.h_a_eff, p.g_b * e.h_b_eff);
}

// ----------------------------- drive-ratio roots ----------------------------

struct RatioRoots {
    std::vector<double> roots;
    bool limit_root_at_zero{false};  // target 1 is met as x -> 0
};

// x in (0, x_max] with J_0(2x) / J_0(x) = target, poles of J_0(x) excluded.
inline RatioRoots solve_drive_ratio(double target, double x_max = 6.0, int scan_points = 20000) {
    if (!std::isfinite(target)) throw InvalidParameter("solve_drive_ratio: target must be finite");
    if (!(x_max > 0.0) || scan_points < 2) throw InvalidParameter("solve_drive_ratio: bad search window");
    // roots of f(x) = J_0(2x) - target J_0(x) that are not zeros of J_0(x)
    auto f = [&](double x) { return bessel_j(0, 2.0 * x) - target * bessel_j(0, x); };
    RatioRoots out;
    out.limit_root_at_zero = std::abs(target - 1.0) < 1e-12;
    const double h = x_max / scan_points;
    double x0 = h * 1e-3, f0 = f(x0);
    for (int i = 1; i <= scan_points; ++i) {
        const double x1 = i * h, f1 = f(x1);
        if (f0 == 0.0 || (f0 < 0.0) != (f1 < 0.0)) {
            double lo = x0, hi = x1, flo = f0;
            if (f0 != 0.0) {
                for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
                    const double mid = 0.5 * (lo + hi), fm = f(mid);
                    if ((fm < 0.0) == (flo < 0.0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
            }
            const double root = f0 == 0.0 ? x0 : 0.5 * (lo + hi);
            const bool pole = std::abs(bessel_j(0, root)) < 1e-8;
            if (!pole && (out.roots.empty() || root - out.roots.back() > 1e-9)) out.roots.push_back(root);
        }
        x0 = x1;
        f0 = f1;
    }
    return out;
}

// ------------------------------- fidelity map -------------------------------

struct DriveMapPoint {
    double theta_c;
    double x;
    double f_eig;
};

// F_eig of `target` for the period-averaged Hamiltonian on a (theta_c, x) grid.
// The average depends on A_c and Omega_c only through x = A_c / Omega_c.
inline std::vector<DriveMapPoint> fidelity_map_drive(const SystemParams& p, const Truncation& t, const Vector& target,
                                                     const std::vector<double>& thetas, const std::vector<double>& xs) {
    p.validate();
    if (target.size() != t.dim()) throw DimensionMismatch("fidelity_map_drive: target dimension mismatch");
    std::vector<DriveMapPoint> out(thetas.size() * xs.size());
    parallel_for(out.size(), [&](std::size_t i) {
        const double th = thetas[i / xs.size()], x = xs[i % xs.size()];
        const SinusoidalDrive d{x, 1.0, th};
        const Matrix h = build_effective_h(p, t, effective_hamiltonian(p, d));
        out[i] = {th, x, fidelity_eig(target, h)};
    });
    return out;
}

// ------------------------------ Magnus estimate -----------------------------

struct MagnusEstimate {
    double bound{0.0};
    double leading{0.0};
};

namespace detail {

inline double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.adjoint() * m, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// |(k + n - k e^{-i n t W} - n e^{i k t W}) / (k n (k + n) W^2)| bounded term by term;
// n = 0 and n = -k are the secular cases.
inline double magnus_weight(int n, int k, double t, double w) {
    if (n == 0 || n == -k) return (2.0 / (k * w) + t) / (k * w);
    const double an = std::abs(n), ak = k, akn = std::abs(k + n);
    return (1.0 / (ak * an) + 1.0 / (an * akn) + 1.0 / (ak * akn)) / (w * w);
}

} // namespace detail

// Second-order Magnus term estimate for the rotating-frame Hamiltonian
// H'(t) = sum_n H'_n e^{i n Omega_c t}, with H'_n sampled numerically over one period.
inline MagnusEstimate magnus_error_estimate(const SystemParams& p, const Truncation& trunc, const SinusoidalDrive& d,
                                            double t, int n_max, int k_max, int samples = 256) {
    p.validate();
    d.validate();
    if (n_max < 1 || k_max < 1) throw InvalidParameter("magnus_error_estimate: n_max, k_max must be >= 1");
    const int top = n_max + k_max;
    if (samples < 2 * top + 2) samples = 2 * top + 2;

    const auto c = coupling_operators(p);
    const Spin3 hs = spin_hamiltonian(p);
    const int span = 2 * top + 1;
    std::vector<Spin3> fs(span, Spin3::Zero()), fa(span, Spin3::Zero()), fb(span, Spin3::Zero());
    for (int j = 0; j < samples; ++j) {
        const double tj = d.period() * j / samples;
        const Spin3 u = control_propagator(d, tj);
        const Spin3 rs = u.adjoint() * hs * u, ra = u.adjoint() * c.h_a * u, rb = u.adjoint() * c.h_b * u;
        for (int n = -top; n <= top; ++n) {
            const Complex ph = std::exp(-kI * (2.0 * kPi * n * j / samples)) / static_cast<double>(samples);
            fs[n + top] += ph * rs;
            fa[n + top] += ph * ra;
            fb[n + top] += ph * rb;
        }
    }
    std::vector<Matrix> coeff(span);
    for (int n = -top; n <= top; ++n) {
        const double wa = n == 0 ? p.omega_a : 0.0, wb = n == 0 ? p.omega_b : 0.0;
        coeff[n + top] = assemble_hamiltonian(trunc, fs[n + top], wa, wb, p.g_a * fa[n + top], p.g_b * fb[n + top]);
    }
    auto h = [&](int n) -> const Matrix& { return coeff[n + top]; };

    MagnusEstimate out;
    for (int n = -n_max; n <= n_max; ++n)
        for (int k = 1; k <= k_max; ++k) {
            const double norm = detail::spectral_norm(commutator(h(n), h(n + k)));
            out.bound += 0.5 * norm * detail::magnus_weight(n, k, t, d.Omega_c);
        }
    out.leading = t / d.Omega_c * detail::spectral_norm(commutator(h(0), h(1)));
    return out;
}

struct LocalMaximum {
    double x;
    double value;
};

// Local maxima of |J_0(x) J_1(x)| on (0, x_max], grid scan then golden-section polish.
// With absolute = false only maxima of the signed product are kept.
inline std::vector<LocalMaximum> bessel_product_maxima(double x_max = 10.0, int points = 4000, bool absolute = true) {
    auto f = [absolute](double x) {
        const double v = bessel_j(0, x) * bessel_j(1, x);
        return absolute ? std::abs(v) : v;
    };
    std::vector<LocalMaximum> out;
    const double h = x_max / points;
    for (int i = 1; i < points; ++i) {
        const double xm = (i - 1) * h, x = i * h, xp = (i + 1) * h;
        if (f(x) > f(xm) && f(x) >= f(xp)) {
            double best = x;
            const double v = detail::golden_maximize(f, xm, xp, best, 200);
            if (absolute || v > 0.0) out.push_back({best, v});
        }
    }
    return out;
}

// ------------------------ full-model drive validation -----------------------

struct DriveValidation {
    double max_fidelity{0.0};
    double t_at_max{0.0};
    std::vector<double> times;       // recorded every `record_every` steps
    std::vector<double> fidelities;
    double max_leakage{0.0};
};

// Full Hamiltonian with the explicit cosine drive, piecewise constant on
// `steps_per_period` midpoint samples; the per-step propagators of one carrier
// period are cached and reused.
inline DriveValidation validate_drive_full_model(const SystemParams& p, const Truncation& t, const SinusoidalDrive& d,
                                                 const Vector& psi0, const Vector& target, double t_max,
                                                 int steps_per_period = 128, int record_every = 1) {
    p.validate();
    d.validate();
    require_same_dim(psi0, target, "validate_drive_full_model");
    require_normalized(psi0, "validate_drive_full_model");
    if (psi0.size() != t.dim()) throw DimensionMismatch("validate_drive_full_model: state dimension mismatch");
    if (steps_per_period < 1 || record_every < 1) throw InvalidParameter("validate_drive_full_model: bad sampling");

    const double dt = d.period() / steps_per_period;
    std::vector<Matrix> steps(static_cast<std::size_t>(steps_per_period));
    parallel_for(steps.size(), [&](std::size_t j) {
        steps[j] = expm_skew(build_total_h(p, t, d.field((j + 0.5) * dt)), dt);
    });

    DriveValidation out;
    Vector psi = psi0, tmp;
    const long total = static_cast<long>(std::ceil(t_max / dt - 1e-9));
    auto record = [&](long n) {
        const double f = fidelity(target, psi);
        if (f > out.max_fidelity) {
            out.max_fidelity = f;
            out.t_at_max = n * dt;
        }
        if (n % record_every == 0) {
            out.times.push_back(n * dt);
            out.fidelities.push_back(f);
        }
    };
    record(0);
    out.max_leakage = leakage(psi, t);
    for (long n = 1; n <= total; ++n) {
        tmp.noalias() = steps[static_cast<std::size_t>((n - 1) % steps_per_period)] * psi;
        psi.swap(tmp);
        record(n);
        out.max_leakage = std::max(out.max_leakage, leakage(psi, t));
    }
    return out;
}

} // namespace qex
