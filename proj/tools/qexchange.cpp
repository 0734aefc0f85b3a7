// qexchange: scenario runner. One subcommand per process; every run writes its
// data files plus manifest.json into --out.

#include "qexchange/qexchange.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace qex;

namespace {

const std::vector<std::string> kSubcommands{"simulate", "spectrum", "perturb",    "drive-map",      "grape",
                                            "rabi",     "envelope", "robustness", "controllability"};

struct Flags {
    std::string config;
    std::string out{"out"};
    std::optional<std::uint64_t> seed;
    int threads{0};
    std::string trunc_override;
};

class Run {
public:
    Run(std::string command, const Flags& flags, const ConfigSource& src)
        : command_(std::move(command)), flags_(flags), src_(src) {
        const auto& r = src_.root();
        std::set<std::string> allowed{"schema_version", "scenario", "description", "seed", "system", "truncation"};
        allowed.insert(kSubcommands.begin(), kSubcommands.end());
        src_.check_keys(r, allowed, "config");
        if (!r.contains("schema_version")) src_.fail("config", "missing required key 'schema_version'");
        if (src_.integer(r, "schema_version", 0) != kSchemaVersion)
            src_.fail("schema_version", "unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
        seed_ = flags.seed ? *flags.seed : static_cast<std::uint64_t>(src_.integer(r, "seed", 0));
        fs::create_directories(flags_.out);
    }

    const ConfigSource& src() const { return src_; }
    std::uint64_t seed() const { return seed_; }

    const json& section() const {
        static const json empty = json::object();
        return src_.root().contains(command_) ? src_.root().at(command_) : empty;
    }

    SystemParams system() const {
        static const json empty = json::object();
        return parse_system(src_, src_.root().contains("system") ? src_.root().at("system") : empty);
    }

    Truncation truncation() const {
        if (!flags_.trunc_override.empty()) return parse_truncation_override(flags_.trunc_override);
        static const json empty = json::object();
        return parse_truncation(src_, src_.root().contains("truncation") ? src_.root().at("truncation") : empty);
    }

    // Relative paths inside a config are taken from the config's directory.
    std::string resolve(const std::string& path) const {
        const fs::path p(path);
        return p.is_absolute() ? path : (fs::path(src_.name()).parent_path() / p).string();
    }

    std::ofstream open(const std::string& file) {
        outputs_.push_back(file);
        std::ofstream os(fs::path(flags_.out) / file);
        if (!os) throw Error("cannot write " + (fs::path(flags_.out) / file).string());
        return os;
    }

    void write_json(const std::string& file, const json& j) { open(file) << j.dump(2) << "\n"; }

    void warn(const std::string& message) {
        std::cerr << "warning: " << message << "\n";
        warnings_.push_back(message);
    }

    void warn_all(const std::vector<std::string>& ws) {
        for (const auto& w : ws) warn(w);
    }

    void finish(double seconds, const Truncation& t) {
        json m;
        m["tool"] = "qexchange";
        m["version"] = QEXCHANGE_VERSION;
        m["schema_version"] = kSchemaVersion;
        m["subcommand"] = command_;
        m["config"] = src_.name();
        m["inputs"] = src_.root();
        m["seed"] = seed_;
        m["threads"] = default_thread_count().load();
        m["truncation"] = {{"n_a", t.n_a()}, {"n_b", t.n_b()}};
        m["outputs"] = outputs_;
        m["warnings"] = warnings_;
        m["runtime_seconds"] = seconds;
        std::ofstream(fs::path(flags_.out) / "manifest.json") << m.dump(2) << "\n";
    }

private:
    std::string command_;
    Flags flags_;
    const ConfigSource& src_;
    std::uint64_t seed_{0};
    std::vector<std::string> outputs_;
    std::vector<std::string> warnings_;
};

// An explicit list, or {"min", "max", "points", "spacing": "linear"|"log"}.
std::vector<double> grid(const ConfigSource& src, const json& obj, const std::string& key, std::vector<double> fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (v.is_array()) return src.numbers(obj, key, {});
    if (!v.is_object()) src.fail(key, "'" + key + "' must be a list or {min, max, points}");
    src.check_keys(v, {"min", "max", "points", "spacing"}, key);
    const double lo = src.required_number(v, "min"), hi = src.required_number(v, "max");
    const int n = src.integer(v, "points", 11);
    const std::string spacing = src.string(v, "spacing", "linear");
    if (n < 1) src.fail(key, "'" + key + "' needs points >= 1");
    if (spacing != "linear" && spacing != "log") src.fail("spacing", "spacing must be 'linear' or 'log'");
    if (spacing == "log" && !(lo > 0.0 && hi > 0.0)) src.fail(key, "log spacing needs positive bounds");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        out[static_cast<std::size_t>(i)] =
            spacing == "log" ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f;
    }
    return out;
}

ControlMask parse_controls(const ConfigSource& src, const json& obj, ControlMask fallback) {
    if (!obj.contains("controls")) return fallback;
    ControlMask m{false, false, false};
    for (const auto& c : src.strings(obj, "controls", {})) {
        if (c == "x") m[0] = true;
        else if (c == "y") m[1] = true;
        else if (c == "z") m[2] = true;
        else src.fail("controls", "unknown control '" + c + "' (use x, y, z)");
    }
    return m;
}

std::vector<BasisIndex> parse_labels(const ConfigSource& src, const json& obj, const std::string& key) {
    std::vector<BasisIndex> out;
    for (const auto& s : src.strings(obj, key, {})) {
        try {
            out.push_back(parse_label(s));
        } catch (const Error& e) {
            src.fail(key, e.what());
        }
    }
    return out;
}

// Labels named by a state entry, used as default trajectory columns.
std::vector<BasisIndex> state_labels(const json& v) {
    std::vector<BasisIndex> out;
    if (v.is_string()) out.push_back(parse_label(v.get<std::string>()));
    if (v.is_array())
        for (const auto& e : v) out.push_back(parse_label(e.get<std::string>()));
    return out;
}

Vector required_state(const Run& run, const json& obj, const std::string& key, const Truncation& t) {
    if (!obj.contains(key)) run.src().fail(key, "missing required key '" + key + "'");
    return parse_state(run.src(), obj.at(key), key, t);
}

SinusoidalDrive parse_drive(const ConfigSource& src, const json& obj) {
    src.check_keys(obj, {"amplitude", "ratio", "frequency", "theta"}, "drive");
    SinusoidalDrive d;
    d.Omega_c = src.number(obj, "frequency", 3.0);
    d.theta_c = src.number(obj, "theta", 0.5 * kPi);
    if (obj.contains("amplitude") && obj.contains("ratio")) src.fail("ratio", "give either amplitude or ratio");
    d.A_c = obj.contains("ratio") ? src.number(obj, "ratio", 0.0) * d.Omega_c : src.number(obj, "amplitude", 0.0);
    try {
        d.validate();
    } catch (const InvalidParameter& e) {
        src.fail("drive", e.what());
    }
    return d;
}

json summary_of_trajectory(const Trajectory& traj, const Truncation& t, const std::vector<BasisIndex>& columns) {
    json cols = json::array();
    for (const auto& b : columns) {
        const auto c = traj.populations.col(flat_index(b, t));
        Eigen::Index row = 0;
        const double peak = c.maxCoeff(&row);
        cols.push_back({{"state", to_string(b)},
                        {"max_population", peak},
                        {"t_at_max", traj.times[static_cast<std::size_t>(row)]},
                        {"final_population", c(c.size() - 1)}});
    }
    const auto [lo, hi] = std::minmax_element(traj.ipr_series.begin(), traj.ipr_series.end());
    return {{"columns", cols},
            {"ipr_min", *lo},
            {"ipr_max", *hi},
            {"max_leakage", traj.max_leakage},
            {"leakage_flagged", traj.leakage_flagged}};
}

// --------------------------------------------------------------- subcommands

void cmd_simulate(Run& run, const SystemParams& p, const Truncation& t) {
    const auto& src = run.src();
    const auto& s = run.section();
    src.check_keys(s, {"initial", "duration", "steps", "decimation", "columns", "drive", "field_csv", "controls"},
                   "simulate");
    const Vector psi0 = required_state(run, s, "initial", t);
    auto columns = parse_labels(src, s, "columns");
    if (columns.empty()) columns = state_labels(s.at("initial"));

    std::optional<ControlField> field;
    if (s.contains("field_csv")) {
        if (s.contains("drive")) src.fail("field_csv", "give either drive or field_csv");
        try {
            field = read_field_csv(run.resolve(src.string(s, "field_csv", "")), parse_controls(src, s, {true, true, true}));
        } catch (const Error& e) {
            src.fail("field_csv", e.what());
        }
    } else {
        const double duration = src.required_number(s, "duration");
        const int steps = src.integer(s, "steps", static_cast<int>(std::ceil(duration)));
        if (!(duration > 0.0) || steps < 1) src.fail("duration", "need duration > 0 and steps >= 1");
        const double dt = duration / steps;
        FieldSamples samples = FieldSamples::Zero(steps, 3);
        if (s.contains("drive")) {
            const auto d = parse_drive(src, s.at("drive"));
            for (int j = 0; j < steps; ++j) samples.row(j) = d.field((j + 0.5) * dt).transpose();
        }
        field.emplace(dt, samples);
    }

    PropagateOptions opts;
    opts.decimation = src.integer(s, "decimation", 1);
    opts.store_states = false;
    if (opts.decimation < 1) src.fail("decimation", "decimation must be >= 1");
    const auto traj = propagate(p, t, *field, psi0, opts);
    run.warn_all(traj.warnings);

    auto os = run.open("trajectory.csv");
    write_trajectory_csv(os, traj, t, columns);
    run.write_json("summary.json", summary_of_trajectory(traj, t, columns));
}

void cmd_spectrum(Run& run, const SystemParams& p, const Truncation& t) {
    const auto& src = run.src();
    const auto& s = run.section();
    src.check_keys(s, {"g_values", "g_ratio"}, "spectrum");
    const auto g = grid(src, s, "g_values", {0.0, 0.05, 0.1, 0.15, 0.2, 0.25});
    const double ratio = src.number(s, "g_ratio", p.g_a > 0.0 ? p.g_b / p.g_a : 1.0);
    const auto systems = spectrum_scan(p, t, g, ratio);
    auto os = run.open("spectrum.csv");
    write_spectrum_csv(os, g, systems);
}

void cmd_perturb(Run& run, const SystemParams& p, const Truncation& t) {
    const auto& src = run.src();
    const auto& s = run.section();
    src.check_keys(s, {"mode", "omega_ratios", "g_ratios", "omega_ratio", "g_ratio", "points", "resonance", "order"},
                   "perturb");
    const std::string mode = src.string(s, "mode", "block");
    GlobalOptions opts;
    opts.seed = run.seed();

    if (mode == "angle_map") {
        const auto wr = grid(src, s, "omega_ratios", {0.3});
        const auto gr = grid(src, s, "g_ratios", {0.5});
        auto os = run.open("angle_map.csv");
        CsvWriter w(os, {"omega_ratio", "g_ratio", "F_eig", "phi_a_opt", "phi_b_opt"});
        for (double a : wr)
            for (double b : gr) {
                try {
                    const auto r = optimize_r2_angles(a, b, opts);
                    w.row({a, b, r.f_eig, r.phi_a, r.phi_b});
                } catch (const SingularResonance& e) {
                    run.warn(std::string("skipped: ") + e.what());
                }
            }
    } else if (mode == "landscape") {
        const double wr = src.number(s, "omega_ratio", 0.3), gr = src.number(s, "g_ratio", 0.5);
        const int n = src.integer(s, "points", 101);
        if (n < 2) src.fail("points", "points must be >= 2");
        auto os = run.open("landscape.csv");
        CsvWriter w(os, {"phi_a", "phi_b", "F_eig"});
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double a = kPi * i / (n - 1), b = kPi * j / (n - 1);
                w.row({a, b, r2_block_fidelity(wr, gr, a, b)});
            }
        const auto best = optimize_r2_angles(wr, gr, opts);
        run.write_json("optimum.json", {{"omega_ratio", wr},
                                        {"g_ratio", gr},
                                        {"phi_a", best.phi_a},
                                        {"phi_b", best.phi_b},
                                        {"phi_a_over_pi", best.phi_a / kPi},
                                        {"phi_b_over_pi", best.phi_b / kPi},
                                        {"F_eig", best.f_eig}});
    } else if (mode == "block") {
        const std::string res = src.string(s, "resonance", "R1");
        const int order = src.integer(s, "order", res == "R2" ? 2 : 1);
        if (res != "R1" && res != "R2") src.fail("resonance", "resonance must be R1 or R2");
        const auto labels = res == "R1" ? r1_labels() : r2_labels();
        const auto block = effective_block(p, t, labels, order);
        json rows = json::array();
        for (Eigen::Index i = 0; i < block.matrix.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < block.matrix.cols(); ++j)
                row.push_back({block.matrix(i, j).real(), block.matrix(i, j).imag()});
            rows.push_back(row);
        }
        json labs = json::array();
        for (const auto& b : block.basis.labels) labs.push_back(to_string(b));
        json out{{"resonance", res}, {"order", order}, {"basis", labs}, {"energy", block.basis.energy}, {"matrix", rows}};
        std::optional<EffectiveBlock> closed;
        try {
            if (res == "R1") closed = closed_form_r1(p);
            else if (p.alpha == 1 && p.theta_a == 0.0 && p.theta_b == 0.0) closed = closed_form_r2(p);
        } catch (const Error& e) {
            run.warn(e.what());
        }
        if (closed) {
            Matrix a = block.matrix, b = closed->matrix;
            a -= a.trace() / 3.0 * Matrix::Identity(3, 3);
            b -= b.trace() / 3.0 * Matrix::Identity(3, 3);
            out["closed_form_deviation"] = (a - b).cwiseAbs().maxCoeff();
        }
        run.write_json("block.json", out);
    } else {
        src.fail("mode", "mode must be block, angle_map or landscape");
    }
}

void cmd_drive_map(Run& run, const SystemParams& p, const Truncation& t) {
    const auto& src = run.src();
    const auto& s = run.section();
    src.check_keys(s, {"target", "thetas", "x", "ratio_target", "x_max"}, "drive-map");
    const Vector target = required_state(run, s, "target", t);
    const auto thetas = grid(src, s, "thetas", {0.5 * kPi});
    const auto xs = grid(src, s, "x", {1.60202});
    const auto pts = fidelity_map_drive(p, t, target, thetas, xs);
    auto os = run.open("drive_map.csv");
    CsvWriter w(os, {"theta_c", "x", "F_eig"});
    std::size_t best = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        w.row({pts[i].theta_c, pts[i].x, pts[i].f_eig});
        if (pts[i].f_eig > pts[best].f_eig) best = i;
    }
    const auto roots = solve_drive_ratio(src.number(s, "ratio_target", -1.0 / std::sqrt(2.0)), src.number(s, "x_max", 4.0));
    run.write_json("summary.json", {{"grid_maximum", {{"theta_c", pts[best].theta_c}, {"x", pts[best].x}, {"F_eig", pts[best].f_eig}}},
                                    {"ratio_roots", roots.roots},
                                    {"limit_root_at_zero", roots.limit_root_at_zero}});
}

GrapeProblem parse_grape(const Run& run, const json& s, const SystemParams& p, const Truncation& t) {
    const auto& src = run.src();
    src.check_keys(s, {"initial", "target", "duration", "steps", "controls", "max_iters", "convergence_tol",
                       "stall_window", "stall_tol", "target_fidelity", "max_seconds", "init_amplitude",
                       "init_frequency", "method", "lbfgs_memory", "adam_rate", "amplitude_clamp", "decimation",
                       "check_truncation", "envelope_g_max"},
                   "grape");
    GrapeProblem g;
    g.params = p;
    g.trunc = t;
    g.psi0 = required_state(run, s, "initial", t);
    g.target = required_state(run, s, "target", t);
    g.duration = src.number(s, "duration", 40.0);
    g.steps = src.integer(s, "steps", 256);
    g.active = parse_controls(src, s, {false, true, true});
    g.max_iters = src.integer(s, "max_iters", g.max_iters);
    g.convergence_tol = src.number(s, "convergence_tol", g.convergence_tol);
    g.stall_window = src.integer(s, "stall_window", g.stall_window);
    g.stall_tol = src.number(s, "stall_tol", g.stall_tol);
    g.target_fidelity = src.number(s, "target_fidelity", g.target_fidelity);
    g.max_seconds = src.number(s, "max_seconds", g.max_seconds);
    g.init_amplitude = src.number(s, "init_amplitude", g.init_amplitude);
    g.init_frequency = src.number(s, "init_frequency", g.init_frequency);
    const std::string method = src.string(s, "method", "lbfgs");
    if (method == "lbfgs") g.method = AscentMethod::lbfgs;
    else if (method == "adam") g.method = AscentMethod::adam;
    else src.fail("method", "method must be lbfgs or adam");
    g.lbfgs_memory = src.integer(s, "lbfgs_memory", g.lbfgs_memory);
    g.adam_rate = src.number(s, "adam_rate", g.adam_rate);
    g.amplitude_clamp = src.number(s, "amplitude_clamp", g.amplitude_clamp);
    g.seed = run.seed();
    try {
        g.validate();
    } catch (const Error& e) {
        src.fail("grape", e.what());
    }
    return g;
}

GrapeResult optimize_with_progress(const GrapeProblem& g) {
    return grape_optimize(g, std::nullopt, [](int it, double f, double gn) {
        if (it % 25 == 0) std::cerr << "iteration " << it << "  F = " << fmt(f) << "  |grad| = " << fmt(gn) << "\n";
    });
}

void cmd_grape(Run& run, const SystemParams& p, const Truncation& t) {
    const auto& src = run.src();
    const auto& s = run.section();
    const auto g = parse_grape(run, s, p, t);
    const auto r = optimize_with_progress(g);

    {
        auto os = run.open("field.csv");
        write_field_csv(os, r.field);
    }
    {
        auto os = run.open("history.csv");
        CsvWriter w(os, {"iteration", "fidelity"});
        for (std::size_t i = 0; i < r.fidelity_history.size(); ++i)
            w.row({static_cast<double>(i), r.fidelity_history[i]});
    }
    PropagateOptions opts;
    opts.store_states = false;
    opts.decimation = src.integer(s, "decimation", 1);
    const auto traj = propagate(p, t, r.field, g.psi0, opts);
    run.warn_all(traj.warnings);
    auto columns = state_labels(s.at("initial"));
    for (const auto& b : state_labels(s.at("target"))) columns.push_back(b);
    {
        auto os = run.open("trajectory.csv");
        write_trajectory_csv(os, traj, t, columns);
    }
    const auto sp = spectral_analysis(r.field, 4.0 * p.omega_a);
    {
        auto os = run.open("field_spectrum.csv");
        CsvWriter w(os, {"frequency", "amp_x", "amp_y", "amp_z"});
        for (Eigen::Index k = 0; k < sp.frequencies.size(); ++k)
            w.row({sp.frequencies(k), sp.amplitudes(k, 0), sp.amplitudes(k, 1), sp.amplitudes(k, 2)});
    }

    json out{{"fidelity", r.fidelity},
             {"iterations", r.iterations},
             {"converged", r.converged},
             {"stop_reason", r.stop_reason},
             {"gradient_norm_final", r.gradient_norm_final},
             {"max_leakage", traj.max_leakage},
             {"spectral_fraction_below_4_omega_a", sp.fraction_below_total}};
    if (s.contains("check_truncation")) {
        GrapeProblem wide = g;
        try {
            wide.trunc = parse_truncation_override(src.string(s, "check_truncation", ""));
        } catch (const Error& e) {
            src.fail("check_truncation", e.what());
        }
        wide.psi0 = parse_state(src, s.at("initial"), "initial", wide.trunc);
        wide.target = parse_state(src, s.at("target"), "target", wide.trunc);
        out["fidelity_check_truncation"] = grape_fidelity(wide, r.field);
    }
    if (s.contains("envelope_g_max")) {
        const auto env = no_control_envelope(p, t, g.psi0, g.target, src.number(s, "envelope_g_max", p.g_a), g.duration);
        out["envelope"] = {{"fidelity", env.fidelity}, {"g_a", env.g_a}, {"time", env.time}};
        if (r.fidelity <= env.fidelity) run.warn("optimized field does not beat the no-control envelope");
    }
    run.write_json("result.json", out);
}

void cmd_rabi(Run& run, const SystemParams&, const Truncation&) {
    const auto& src = run.src();
    const auto& s = run.section();
    src.check_keys(s, {"omega", "n", "m", "k", "n_offsets", "ratios", "k_max", "g"}, "rabi");
    RabiParams rp;
    rp.omega = src.number(s, "omega", 1.0);
    rp.n = src.integer(s, "n", 40);
    const int m = src.integer(s, "m", 1), k = src.integer(s, "k", 5);
    const auto offs = src.numbers(s, "n_offsets", {-2.0, 2.0});
    if (offs.size() != 2) src.fail("n_offsets", "n_offsets must be [lo, hi]");
    const auto ratios = grid(src, s, "ratios", {0.0, 0.05, 0.1});
    try {
        rp.validate();
        const auto rows = overlap_scan(m, k, rp, static_cast<int>(offs[0]), static_cast<int>(offs[1]), ratios);
        auto os = run.open("overlaps.csv");
        CsvWriter w(os, {"g_over_omega", "n_offset", "overlap"});
        for (const auto& r : rows) w.row({r.g_over_omega, static_cast<double>(r.n_offset), r.overlap});
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidParameter& e) {
        src.fail("rabi", e.what());
    }

    rp.g = src.number(s, "g", 0.1) * rp.omega;
    const int k_max = src.integer(s, "k_max", 10);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rabi_hamiltonian(rp), Eigen::EigenvaluesOnly);
    auto os = run.open("eigenvalues.csv");
    CsvWriter w(os, {"m", "k", "energy", "dense_deviation"});
    for (int mm : {-1, 0, 1})
        for (int kk = 0; kk <= k_max; ++kk) {
            const double e = rabi_eigenvalue(mm, kk, rp);
            w.row({static_cast<double>(mm), static_cast<double>(kk), e,
                   (es.eigenvalues().array() - e).abs().minCoeff()});
        }
}

void cmd_envelope(Run& run, const SystemParams& p, const Truncation& t) {
    const auto& src = run.src();
    const auto& s = run.section();
    src.check_keys(s, {"initial", "target", "g_max", "durations", "g_points", "t_points"}, "envelope");
    const Vector psi0 = required_state(run, s, "initial", t);
    const Vector target = required_state(run, s, "target", t);
    const double g_max = src.number(s, "g_max", p.g_a);
    const auto durations = grid(src, s, "durations", {40.0});
    EnvelopeGrid eg;
    eg.g_points = src.integer(s, "g_points", eg.g_points);
    eg.t_points = src.integer(s, "t_points", eg.t_points);
    auto os = run.open("envelope.csv");
    CsvWriter w(os, {"T", "fidelity", "g_a", "t_best", "leakage"});
    for (double T : durations) {
        const auto e = no_control_envelope(p, t, psi0, target, g_max, T, eg);
        w.row({T, e.fidelity, e.g_a, e.time, e.leakage});
        if (e.leakage > kLeakageThreshold)
            run.warn("envelope optimum at T = " + fmt(T) + " has truncation leakage " + fmt(e.leakage));
    }
}

void cmd_robustness(Run& run, const SystemParams& p, const Truncation& t) {
    const auto& src = run.src();
    const auto& s = run.section();
    src.check_keys(s, {"field_csv", "parameters", "deltas"}, "robustness");
    if (!src.root().contains("grape")) src.fail("robustness", "robustness needs a 'grape' section for the problem");
    const auto g = parse_grape(run, src.root().at("grape"), p, t);
    ControlField field = ControlField::zeros(g.dt(), g.steps, g.active);
    if (s.contains("field_csv")) {
        try {
            field = read_field_csv(run.resolve(src.string(s, "field_csv", "")), g.active);
        } catch (const Error& e) {
            src.fail("field_csv", e.what());
        }
    } else {
        field = optimize_with_progress(g).field;
    }
    const auto names = src.strings(s, "parameters", {"g_a", "g_b", "D", "omega_z", "omega_b"});
    const auto deltas = grid(src, s, "deltas", {-0.02, -0.01, 0.0, 0.01, 0.02});
    std::vector<RobustnessRow> rows;
    try {
        rows = robustness_scan(g, field, names, deltas);
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidParameter& e) {
        src.fail("parameters", e.what());
    } catch (const DimensionMismatch& e) {
        src.fail("field_csv", e.what());
    }
    auto os = run.open("robustness.csv");
    CsvWriter w(os, {"parameter", "delta", "fidelity", "loss"});
    for (const auto& r : rows) w.write_row({r.parameter, fmt(r.delta), fmt(r.fidelity), fmt(r.loss)});
}

void cmd_controllability(Run& run, const SystemParams& p, const Truncation& t) {
    const auto& src = run.src();
    const auto& s = run.section();
    src.check_keys(s, {"model", "controls", "omega", "g", "n"}, "controllability");
    const std::string model = src.string(s, "model", "full");
    ControllabilityReport r;
    json out{{"model", model}};
    if (model == "full") {
        r = is_controllable(p, t, parse_controls(src, s, {true, true, true}));
        out["dimension"] = t.dim();
    } else if (model == "rabi") {
        const int n = src.integer(s, "n", 5);
        if (n < 2) src.fail("n", "n must be >= 2");
        r = controllability_report(rabi_generators(p.D, p.omega_z, src.number(s, "omega", p.omega_a),
                                                   src.number(s, "g", p.g_a), n,
                                                   parse_controls(src, s, {false, true, true})));
        out["dimension"] = 3 * n;
    } else {
        src.fail("model", "model must be full or rabi");
    }
    out["rank"] = r.rank;
    out["expected"] = r.expected;
    out["controllable"] = r.controllable;
    out["generators"] = r.generators_used;
    run.write_json("result.json", out);
}

const std::map<std::string, std::function<void(Run&, const SystemParams&, const Truncation&)>> kHandlers{
    {"simulate", cmd_simulate}, {"spectrum", cmd_spectrum},     {"perturb", cmd_perturb},
    {"drive-map", cmd_drive_map}, {"grape", cmd_grape},         {"rabi", cmd_rabi},
    {"envelope", cmd_envelope}, {"robustness", cmd_robustness}, {"controllability", cmd_controllability},
};

int execute(const std::string& command, const Flags& flags) {
    const auto t0 = std::chrono::steady_clock::now();
    if (flags.threads > 0) set_default_threads(flags.threads);
    const auto src = ConfigSource::from_file(flags.config);
    Run run(command, flags, src);
    const auto p = run.system();
    const auto t = run.truncation();
    kHandlers.at(command)(run, p, t);
    run.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), t);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qexchange: spin-1 / two-oscillator exchange toolkit"};
    app.set_version_flag("--version", QEXCHANGE_VERSION);
    app.require_subcommand(1);
    Flags flags;
    std::uint64_t seed = 0;
    std::string chosen;
    for (const auto& name : kSubcommands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", flags.config, "scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", flags.out, "output directory")->capture_default_str();
        sub->add_option("--seed", seed, "seed for stochastic initialisation (overrides the config)");
        sub->add_option("--threads", flags.threads, "worker thread cap")->check(CLI::NonNegativeNumber);
        sub->add_option("--trunc-override", flags.trunc_override, "truncation N or NA,NB");
        sub->callback([&chosen, name] { chosen = name; });
    }
    CLI11_PARSE(app, argc, argv);
    for (const auto& sub : app.get_subcommands())
        if (sub->count("--seed")) flags.seed = seed;

    try {
        return execute(chosen, flags);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
