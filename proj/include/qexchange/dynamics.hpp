// dynamics.hpp: Piecewise-constant time evolution, fidelities, IPR, spectra
// and the best fidelity reachable without control.

#pragma once

#include "qexchange/hilbert.hpp"
#include "qexchange/parallel.hpp"
#include "qexchange/propagator.hpp"
#include "qexchange/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace qex {

using FieldSamples = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using ControlMask = std::array<bool, 3>;

// ------------------------------ control field -------------------------------

// Piecewise-constant (Omega_x, Omega_y, Omega_z); sample j acts on [j dt, (j+1) dt).
class ControlField {
public:
    ControlField(double dt, FieldSamples samples, ControlMask mask = {true, true, true})
        : dt_(dt), samples_(std::move(samples)), mask_(mask) {
        if (!(dt > 0.0)) throw InvalidParameter("ControlField: dt must be > 0");
        for (int c = 0; c < 3; ++c)
            if (!mask_[c] && samples_.rows() > 0 && samples_.col(c).cwiseAbs().maxCoeff() != 0.0)
                throw ContractViolation("ControlField: masked component " + std::to_string(c) + " is not zero");
    }

    static ControlField zeros(double dt, int steps, ControlMask mask = {true, true, true}) {
        return ControlField(dt, FieldSamples::Zero(steps, 3), mask);
    }

    double dt() const { return dt_; }
    int steps() const { return static_cast<int>(samples_.rows()); }
    double duration() const { return dt_ * steps(); }
    const ControlMask& mask() const { return mask_; }
    const FieldSamples& samples() const { return samples_; }
    Eigen::Vector3d sample(int j) const { return samples_.row(j).transpose(); }

    void set(int j, int c, double value) {
        if (!mask_[c] && value != 0.0) throw ContractViolation("ControlField: component is masked");
        samples_(j, c) = value;
    }

private:
    double dt_;
    FieldSamples samples_;
    ControlMask mask_;
};

// ------------------------------ state measures ------------------------------

inline double fidelity(const Vector& target, const Vector& psi) {
    require_same_dim(target, psi, "fidelity");
    return std::norm(target.dot(psi));
}

// (sum_n |psi_n|^4)^-1 of the normalised populations
inline double ipr(const Vector& psi) {
    const RealVector pop = psi.cwiseAbs2();
    const double total = pop.sum();
    if (!(total > 0.0)) throw InvalidParameter("ipr: zero vector");
    return total * total / pop.squaredNorm();
}

struct EigenSystem {
    RealVector eigenvalues;
    Matrix eigenvectors;
    RealVector ipr_per_vector;
};

inline EigenSystem diagonalize(const Matrix& h) {
    auto ed = eigh(h);
    EigenSystem es{std::move(ed.values), std::move(ed.vectors), {}};
    es.ipr_per_vector.resize(es.eigenvalues.size());
    for (Eigen::Index n = 0; n < es.eigenvalues.size(); ++n) es.ipr_per_vector(n) = ipr(es.eigenvectors.col(n));
    return es;
}

// max_n |<target|phi_n>|^2 over the eigenvectors phi_n as returned by the solver.
// Inside an exactly degenerate eigenspace the solver's basis is used as is.
inline double fidelity_eig(const Vector& target, const EigenSystem& es) {
    if (target.size() != es.eigenvectors.rows()) throw DimensionMismatch("fidelity_eig: dimension mismatch");
    return (es.eigenvectors.adjoint() * target).cwiseAbs2().maxCoeff();
}

inline double fidelity_eig(const Vector& target, const Matrix& h) { return fidelity_eig(target, diagonalize(h)); }

// Population in the two highest Fock levels of either oscillator.
inline double leakage(const Vector& psi, const Truncation& t) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        const auto b = basis_label(i, t);
        if (b.k >= t.n_a() - 2 || b.l >= t.n_b() - 2) total += std::norm(psi(i));
    }
    return total;
}

inline constexpr double kLeakageThreshold = 1e-6;

// -------------------------------- propagation -------------------------------

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    RealMatrix populations;  // rows follow `times`
    std::vector<double> ipr_series;
    double max_leakage{0.0};
    bool leakage_flagged{false};
    std::vector<std::string> warnings;
};

struct PropagateOptions {
    int decimation{1};          // keep every n-th step boundary
    bool store_states{true};
    double leakage_threshold{kLeakageThreshold};
    StepOptions step{};
};

inline void require_normalized(const Vector& psi, const char* where) {
    if (std::abs(psi.norm() - 1.0) > 1e-10) throw InvalidParameter(std::string(where) + ": state is not normalized");
}

inline Trajectory propagate(const SystemParams& p, const Truncation& t, const ControlField& field, const Vector& psi0,
                            const PropagateOptions& opts = {}) {
    if (psi0.size() != t.dim()) throw DimensionMismatch("propagate: initial state dimension mismatch");
    require_normalized(psi0, "propagate");
    if (opts.decimation < 1) throw InvalidParameter("propagate: decimation must be >= 1");

    const StructuredHamiltonian h(p, t);
    const StepPropagator stepper(h, opts.step);
    Trajectory traj;
    const int steps = field.steps();
    const int kept = steps / opts.decimation + 1 + (steps % opts.decimation ? 1 : 0);
    traj.populations.resize(kept, t.dim());

    int row = 0;
    auto record = [&](double time, const Vector& psi) {
        traj.times.push_back(time);
        if (opts.store_states) traj.states.push_back(psi);
        traj.populations.row(row++) = psi.cwiseAbs2().transpose();
        traj.ipr_series.push_back(ipr(psi));
    };

    Vector psi = psi0;
    record(0.0, psi);
    traj.max_leakage = leakage(psi, t);
    for (int j = 0; j < steps; ++j) {
        stepper.step(psi, field.sample(j), field.dt());
        traj.max_leakage = std::max(traj.max_leakage, leakage(psi, t));
        if ((j + 1) % opts.decimation == 0 || j + 1 == steps) record((j + 1) * field.dt(), psi);
    }
    if (std::abs(psi.norm() - 1.0) > 1e-10 * std::max(1, steps))
        traj.warnings.push_back("norm drift exceeds 1e-10 per step");
    if (traj.max_leakage > opts.leakage_threshold) {
        traj.leakage_flagged = true;
        traj.warnings.push_back("truncation leakage " + std::to_string(traj.max_leakage) +
                                " exceeds threshold; increase the Fock cutoff");
    }
    return traj;
}

// ------------------------------ spectrum scan -------------------------------

inline std::vector<EigenSystem> spectrum_scan(const SystemParams& p, const Truncation& t,
                                              const std::vector<double>& g_values, double g_ratio) {
    std::vector<EigenSystem> out(g_values.size());
    parallel_for(g_values.size(), [&](std::size_t i) {
        SystemParams q = p;
        q.g_a = g_values[i];
        q.g_b = g_ratio * g_values[i];
        out[i] = diagonalize(build_total_h(q, t));
    });
    return out;
}

// --------------------------- no-control envelope ----------------------------

struct EnvelopeGrid {
    int g_points{32};            // log-spaced in g
    int t_points{512};           // uniform in [0, t_max]
    double g_min_fraction{1e-2}; // smallest g as a fraction of g_max
    int refine_rounds{2};        // local refinement passes around the grid optimum
};

struct EnvelopeResult {
    double fidelity{0.0};
    double g_a{0.0};
    double time{0.0};
    double leakage{0.0};  // leakage of the optimal free evolution at `time`
};

namespace detail {

// <target| exp(-i H t) |psi0> = sum_n w_n exp(-i lambda_n t)
struct OverlapSeries {
    RealVector lambda;
    Vector weights;

    double fidelity_at(double t) const {
        Complex acc = 0.0;
        for (Eigen::Index n = 0; n < lambda.size(); ++n) acc += weights(n) * std::exp(-kI * lambda(n) * t);
        return std::norm(acc);
    }
};

inline OverlapSeries overlap_series(const Matrix& h, const Vector& psi0, const Vector& target) {
    const auto ed = eigh(h);
    const Vector a = ed.vectors.adjoint() * psi0;
    const Vector b = ed.vectors.adjoint() * target;
    return {ed.values, b.conjugate().cwiseProduct(a)};
}

template <class F>
double golden_maximize(F&& f, double lo, double hi, double& best_x, int iters = 60) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters && b - a > 1e-12 * std::max(1.0, std::abs(b)); ++i) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + r * (b - a); f2 = f(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - r * (b - a); f1 = f(x1);
        }
    }
    best_x = f1 > f2 ? x1 : x2;
    return std::max(f1, f2);
}

// max over t in [0, t_max] on a uniform grid, polished by golden section.
inline std::pair<double, double> best_in_time(const OverlapSeries& s, double t_max, int t_points) {
    int best_j = 0;
    double best_f = -1.0;
    const double dt = t_max / std::max(1, t_points - 1);
    for (int j = 0; j < t_points; ++j) {
        const double f = s.fidelity_at(j * dt);
        if (f > best_f) {
            best_f = f;
            best_j = j;
        }
    }
    const double lo = std::max(0.0, (best_j - 1) * dt), hi = std::min(t_max, (best_j + 1) * dt);
    double t_best = best_j * dt;
    if (hi > lo) {
        double x = t_best;
        const double f = golden_maximize([&](double t) { return s.fidelity_at(t); }, lo, hi, x);
        if (f > best_f) {
            best_f = f;
            t_best = x;
        }
    }
    return {best_f, t_best};
}

} // namespace detail

// F_{g'}(T) = max_{g_a <= g_max, t <= t_max} |<target| exp(-i H(g_a) t) |psi0>|^2 with
// g_b / g_a fixed to the ratio carried by `p`.
inline EnvelopeResult no_control_envelope(const SystemParams& p, const Truncation& t, const Vector& psi0,
                                          const Vector& target, double g_max, double t_max,
                                          const EnvelopeGrid& grid = {}) {
    require_same_dim(psi0, target, "no_control_envelope");
    if (psi0.size() != t.dim()) throw DimensionMismatch("no_control_envelope: state dimension mismatch");
    if (!(g_max > 0.0) || !(t_max >= 0.0)) throw InvalidParameter("no_control_envelope: need g_max > 0, t_max >= 0");
    if (grid.g_points < 1 || grid.t_points < 2) throw InvalidParameter("no_control_envelope: grid too small");
    const double ratio = p.g_a != 0.0 ? p.g_b / p.g_a : 0.0;

    auto evaluate = [&](double g) {
        SystemParams q = p;
        q.g_a = g;
        q.g_b = ratio * g;
        const auto series = detail::overlap_series(build_total_h(q, t), psi0, target);
        const auto [f, time] = detail::best_in_time(series, t_max, grid.t_points);
        return std::array<double, 3>{f, g, time};
    };

    const double g_lo = g_max * grid.g_min_fraction;
    std::vector<double> gs(static_cast<std::size_t>(grid.g_points));
    for (int i = 0; i < grid.g_points; ++i)
        gs[i] = grid.g_points == 1 ? g_max : g_lo * std::pow(g_max / g_lo, static_cast<double>(i) / (grid.g_points - 1));

    std::vector<std::array<double, 3>> results(gs.size());
    parallel_for(gs.size(), [&](std::size_t i) { results[i] = evaluate(gs[i]); });
    std::size_t best_i = 0;
    for (std::size_t i = 1; i < results.size(); ++i)
        if (results[i][0] > results[best_i][0]) best_i = i;
    auto best = results[best_i];

    double lo = best_i > 0 ? gs[best_i - 1] : g_lo;
    double hi = best_i + 1 < gs.size() ? gs[best_i + 1] : g_max;
    constexpr int kRefinePoints = 16;
    for (int round = 0; round < grid.refine_rounds && hi > lo; ++round) {
        std::vector<std::array<double, 3>> local(kRefinePoints);
        parallel_for(local.size(), [&](std::size_t i) {
            local[i] = evaluate(lo + (hi - lo) * static_cast<double>(i) / (kRefinePoints - 1));
        });
        std::size_t li = 0;
        for (std::size_t i = 1; i < local.size(); ++i)
            if (local[i][0] > local[li][0]) li = i;
        if (local[li][0] > best[0]) best = local[li];
        const double step = (hi - lo) / (kRefinePoints - 1);
        const double centre = best[1];
        lo = std::max(g_lo, centre - step);
        hi = std::min(g_max, centre + step);
    }

    EnvelopeResult r{best[0], best[1], best[2], 0.0};
    SystemParams q = p;
    q.g_a = r.g_a;
    q.g_b = ratio * r.g_a;
    const Vector psi_t = expm_skew(build_total_h(q, t), r.time) * psi0;
    r.leakage = leakage(psi_t, t);
    return r;
}

} // namespace qex
