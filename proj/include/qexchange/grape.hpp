// grape.hpp: Gradient ascent on piecewise-constant spin controls: exact
// gradients from forward states and backward costates, L-BFGS (or Adam) with a
// monotone backtracking line search, robustness scans and field spectra.

#pragma once

#include "qexchange/dynamics.hpp"
#include "qexchange/hilbert.hpp"
#include "qexchange/propagator.hpp"
#include "qexchange/types.hpp"

#include <unsupported/Eigen/FFT>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace qex {

enum class AscentMethod { lbfgs, adam };

struct GrapeProblem {
    SystemParams params;
    Truncation trunc{6, 6};
    Vector psi0;
    Vector target;
    double duration{40.0};
    int steps{256};
    ControlMask active{false, true, true};
    int max_iters{2000};
    double convergence_tol{1e-10};  // on the gradient norm
    int stall_window{50};
    double stall_tol{1e-9};         // relative gain over stall_window iterations
    double target_fidelity{2.0};    // stop once reached; > 1 disables
    double max_seconds{0.0};        // wall-clock cap; 0 disables
    double init_amplitude{1e-3};
    double init_frequency{1.0};
    std::uint64_t seed{0};
    AscentMethod method{AscentMethod::lbfgs};
    int lbfgs_memory{10};
    double adam_rate{1e-2};
    double amplitude_clamp{0.0};    // |Omega_c(j)| cap; 0 disables
    StepOptions step{};

    double dt() const { return duration / steps; }

    void validate() const {
        params.validate();
        if (!(duration > 0.0) || steps < 1) throw InvalidParameter("grape: need duration > 0 and steps >= 1");
        if (psi0.size() != trunc.dim() || target.size() != trunc.dim())
            throw DimensionMismatch("grape: state dimension does not match truncation");
        require_normalized(psi0, "grape psi0");
        require_normalized(target, "grape target");
        if (!active[0] && !active[1] && !active[2]) throw InvalidParameter("grape: no active control");
    }
};

struct GrapeResult {
    ControlField field{1.0, FieldSamples::Zero(0, 3)};
    double fidelity{0.0};
    std::vector<double> fidelity_history;
    double gradient_norm_final{0.0};
    int iterations{0};
    bool converged{false};
    std::string stop_reason;
};

struct FidelityGradient {
    double fidelity{0.0};
    FieldSamples gradient;  // zero columns for inactive controls
};

inline void check_field(const GrapeProblem& prob, const ControlField& field) {
    if (field.steps() != prob.steps) throw DimensionMismatch("grape: field sample count does not match problem");
    if (std::abs(field.dt() - prob.dt()) > 1e-12 * prob.dt()) throw DimensionMismatch("grape: field dt mismatch");
    for (int c = 0; c < 3; ++c)
        if (!prob.active[c] && field.samples().col(c).cwiseAbs().maxCoeff() != 0.0)
            throw ContractViolation("grape: inactive control carries a nonzero sample");
}

// Forward propagation only.
inline double grape_fidelity(const GrapeProblem& prob, const ControlField& field) {
    check_field(prob, field);
    const StructuredHamiltonian h(prob.params, prob.trunc);
    const StepPropagator stepper(h, prob.step);
    Vector psi = prob.psi0;
    for (int j = 0; j < field.steps(); ++j) stepper.step(psi, field.sample(j), field.dt());
    return fidelity(prob.target, psi);
}

// F = |<target|U_N ... U_1|psi0>|^2 and dF/dOmega_c(j) = 2 Re(conj(o) <lambda_j| dU_j psi_{j-1}>),
// lambda_j = U_{j+1}^dagger ... U_N^dagger target.
inline FidelityGradient grape_fidelity_and_gradient(const GrapeProblem& prob, const ControlField& field) {
    check_field(prob, field);
    const StructuredHamiltonian h(prob.params, prob.trunc);
    const StepPropagator stepper(h, prob.step);
    const int n = field.steps();
    const double dt = field.dt();

    std::vector<std::array<Vector, 3>> dpsi(static_cast<std::size_t>(n));
    Vector psi = prob.psi0;
    for (int j = 0; j < n; ++j) stepper.step_with_derivatives(psi, dpsi[j], prob.active, field.sample(j), dt);
    const Complex o = prob.target.dot(psi);

    FidelityGradient out{std::norm(o), FieldSamples::Zero(n, 3)};
    Vector lambda = prob.target;
    for (int j = n - 1; j >= 0; --j) {
        for (int c = 0; c < 3; ++c)
            if (prob.active[c]) out.gradient(j, c) = 2.0 * (std::conj(o) * lambda.dot(dpsi[j][c])).real();
        if (j > 0) stepper.step(lambda, field.sample(j), -dt);
    }
    return out;
}

// Small sinusoid at init_frequency on every active control, phases drawn from the seed.
inline ControlField initial_field(const GrapeProblem& prob) {
    std::mt19937_64 rng(prob.seed);
    std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
    FieldSamples s = FieldSamples::Zero(prob.steps, 3);
    const double dt = prob.dt();
    for (int c = 0; c < 3; ++c) {
        const double phase = u(rng);
        if (!prob.active[c]) continue;
        for (int j = 0; j < prob.steps; ++j)
            s(j, c) = prob.init_amplitude * std::sin(prob.init_frequency * (j + 0.5) * dt + phase);
    }
    return ControlField(dt, s, prob.active);
}

namespace detail {

struct Packing {
    std::vector<int> columns;

    explicit Packing(const ControlMask& mask) {
        for (int c = 0; c < 3; ++c)
            if (mask[c]) columns.push_back(c);
    }

    RealVector pack(const FieldSamples& s) const {
        RealVector x(s.rows() * static_cast<Eigen::Index>(columns.size()));
        for (std::size_t k = 0; k < columns.size(); ++k) x.segment(k * s.rows(), s.rows()) = s.col(columns[k]);
        return x;
    }

    FieldSamples unpack(const RealVector& x, Eigen::Index rows) const {
        FieldSamples s = FieldSamples::Zero(rows, 3);
        for (std::size_t k = 0; k < columns.size(); ++k) s.col(columns[k]) = x.segment(k * rows, rows);
        return s;
    }
};

} // namespace detail

using GrapeProgress = std::function<void(int iteration, double fidelity, double gradient_norm)>;

inline GrapeResult grape_optimize(const GrapeProblem& prob, std::optional<ControlField> start = std::nullopt,
                                  const GrapeProgress& progress = {}) {
    prob.validate();
    const detail::Packing pk(prob.active);
    const Eigen::Index rows = prob.steps;
    const double dt = prob.dt();
    const auto t0 = std::chrono::steady_clock::now();

    auto clamp = [&](RealVector x) {
        if (prob.amplitude_clamp > 0.0) x = x.cwiseMax(-prob.amplitude_clamp).cwiseMin(prob.amplitude_clamp);
        return x;
    };
    auto evaluate = [&](const RealVector& x) {
        const auto fg = grape_fidelity_and_gradient(prob, ControlField(dt, pk.unpack(x, rows), prob.active));
        return std::make_pair(fg.fidelity, RealVector(pk.pack(fg.gradient)));
    };

    RealVector x = clamp(pk.pack((start ? *start : initial_field(prob)).samples()));
    auto [f, g] = evaluate(x);
    GrapeResult res;
    res.fidelity_history.push_back(f);

    std::deque<std::pair<RealVector, RealVector>> memory;  // (s, y) for minimising -F
    RealVector adam_m = RealVector::Zero(x.size()), adam_v = RealVector::Zero(x.size());
    RealVector best_x = x;
    double best_f = f;
    constexpr double c1 = 1e-4;

    for (int it = 1; it <= prob.max_iters; ++it) {
        const double gnorm = g.norm();
        res.gradient_norm_final = gnorm;
        if (gnorm < prob.convergence_tol) {
            res.converged = true;
            res.stop_reason = "gradient norm below tolerance";
            break;
        }
        if (f >= prob.target_fidelity) {
            res.converged = true;
            res.stop_reason = "target fidelity reached";
            break;
        }
        if (prob.max_seconds > 0.0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > prob.max_seconds) {
            res.stop_reason = "time limit";
            break;
        }

        if (prob.method == AscentMethod::adam) {
            constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-12;
            adam_m = b1 * adam_m + (1 - b1) * g;
            adam_v = b2 * adam_v + (1 - b2) * g.cwiseAbs2();
            const RealVector mh = adam_m / (1 - std::pow(b1, it));
            const RealVector vh = adam_v / (1 - std::pow(b2, it));
            x = clamp(x + prob.adam_rate * mh.cwiseQuotient((vh.cwiseSqrt().array() + eps).matrix()));
            std::tie(f, g) = evaluate(x);
            if (f > best_f) {
                best_f = f;
                best_x = x;
            }
        } else {
            // two-loop recursion on -F; d is an ascent direction for F
            auto direction = [&]() -> RealVector {
                if (memory.empty()) return g * (0.1 / std::max(1e-300, g.cwiseAbs().maxCoeff()));
                RealVector q = -g;
                std::vector<double> alpha(memory.size());
                for (std::size_t i = memory.size(); i-- > 0;) {
                    const auto& [s, y] = memory[i];
                    alpha[i] = s.dot(q) / y.dot(s);
                    q -= alpha[i] * y;
                }
                const auto& [sl, yl] = memory.back();
                q *= sl.dot(yl) / yl.dot(yl);
                for (std::size_t i = 0; i < memory.size(); ++i) {
                    const auto& [s, y] = memory[i];
                    const double beta = y.dot(q) / y.dot(s);
                    q += (alpha[i] - beta) * s;
                }
                return -q;
            };

            bool accepted = false;
            for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
                RealVector d = direction();
                double slope = g.dot(d);
                if (!(slope > 0.0)) {
                    memory.clear();
                    d = direction();
                    slope = g.dot(d);
                }
                double step = 1.0;
                for (int bt = 0; bt < 40; ++bt, step *= 0.5) {
                    const RealVector xn = clamp(x + step * d);
                    auto [fn, gn] = evaluate(xn);
                    if (fn >= f + c1 * step * slope || (prob.amplitude_clamp > 0.0 && fn > f)) {
                        const RealVector s = xn - x, y = g - gn;
                        if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
                            memory.emplace_back(s, y);
                            if (static_cast<int>(memory.size()) > prob.lbfgs_memory) memory.pop_front();
                        }
                        x = xn;
                        f = fn;
                        g = std::move(gn);
                        accepted = true;
                        break;
                    }
                }
                if (!accepted) memory.clear();
            }
            if (!accepted) {
                res.converged = true;
                res.stop_reason = "line search cannot improve further";
                break;
            }
            best_f = f;
            best_x = x;
        }

        res.iterations = it;
        res.fidelity_history.push_back(f);
        if (progress) progress(it, f, g.norm());
        const auto h = res.fidelity_history.size();
        if (static_cast<int>(h) > prob.stall_window &&
            f - res.fidelity_history[h - 1 - static_cast<std::size_t>(prob.stall_window)] < prob.stall_tol * f) {
            res.converged = true;
            res.stop_reason = "relative gain below tolerance";
            break;
        }
    }
    if (res.stop_reason.empty()) res.stop_reason = "iteration limit";
    res.field = ControlField(dt, pk.unpack(best_x, rows), prob.active);
    res.fidelity = best_f;
    return res;
}

// ------------------------------- robustness ---------------------------------

struct RobustnessRow {
    std::string parameter;
    double delta;
    double fidelity;
    double loss;  // F(delta) - F(0)
};

inline SystemParams perturb_parameter(SystemParams p, const std::string& name, double delta) {
    const double f = 1.0 + delta;
    if (name == "g_a") p.g_a *= f;
    else if (name == "g_b") p.g_b *= f;
    else if (name == "D") p.D *= f;
    else if (name == "omega_z") p.omega_z *= f;
    else if (name == "omega_b") p.omega_b *= f;
    else throw InvalidParameter("robustness: unknown parameter '" + name + "'");
    p.validate();
    return p;
}

// Relative perturbations p -> p (1 + delta), re-simulated with the fixed field.
inline std::vector<RobustnessRow> robustness_scan(const GrapeProblem& prob, const ControlField& field,
                                                  const std::vector<std::string>& names,
                                                  const std::vector<double>& deltas) {
    const double f0 = grape_fidelity(prob, field);
    std::vector<RobustnessRow> rows(names.size() * deltas.size());
    for (const auto& n : names) perturb_parameter(prob.params, n, 0.0);
    parallel_for(rows.size(), [&](std::size_t i) {
        const auto& name = names[i / deltas.size()];
        const double delta = deltas[i % deltas.size()];
        GrapeProblem q = prob;
        q.params = perturb_parameter(prob.params, name, delta);
        const double f = delta == 0.0 ? f0 : grape_fidelity(q, field);
        rows[i] = {name, delta, f, f - f0};
    });
    return rows;
}

// ----------------------------- field spectrum -------------------------------

struct FieldSpectrum {
    RealVector frequencies;          // angular, k 2 pi / (N dt), k = 0..N/2
    FieldSamples amplitudes;         // single-sided amplitude per component
    std::array<double, 3> fraction_below{0.0, 0.0, 0.0};
    double fraction_below_total{0.0};
};

// Share of spectral power (|X_k|^2) strictly below `cutoff`.
inline FieldSpectrum spectral_analysis(const ControlField& field, double cutoff = 4.0) {
    const int n = field.steps();
    if (n < 1) throw InvalidParameter("spectral_analysis: empty field");
    const int half = n / 2;
    FieldSpectrum out;
    out.frequencies.resize(half + 1);
    out.amplitudes = FieldSamples::Zero(half + 1, 3);
    for (int k = 0; k <= half; ++k) out.frequencies(k) = 2.0 * kPi * k / (n * field.dt());

    Eigen::FFT<double> fft;
    double below_total = 0.0, total = 0.0;
    for (int c = 0; c < 3; ++c) {
        std::vector<Complex> in(static_cast<std::size_t>(n)), spec;
        for (int j = 0; j < n; ++j) in[j] = field.samples()(j, c);
        fft.fwd(spec, in);
        double below = 0.0, all = 0.0;
        for (int k = 0; k <= half; ++k) {
            const double mag = std::abs(spec[k]);
            const bool paired = k != 0 && !(n % 2 == 0 && k == half);
            out.amplitudes(k, c) = (paired ? 2.0 : 1.0) * mag / n;
            const double power = (paired ? 2.0 : 1.0) * mag * mag;
            all += power;
            if (out.frequencies(k) < cutoff) below += power;
        }
        out.fraction_below[c] = all > 0.0 ? below / all : 1.0;
        below_total += below;
        total += all;
    }
    out.fraction_below_total = total > 0.0 ? below_total / total : 1.0;
    return out;
}

} // namespace qex
