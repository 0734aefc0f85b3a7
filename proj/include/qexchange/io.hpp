// io.hpp: CSV emitters and JSON scenario parsing with line-level diagnostics.

#pragma once

#include "qexchange/dynamics.hpp"
#include "qexchange/hilbert.hpp"
#include "qexchange/types.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace qex {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------- CSV -------------------------------------

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os), width_(header.size()) {
        write_row(header);
    }

    void row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(fmt(v));
        write_row(cells);
    }

    void write_row(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw DimensionMismatch("csv: row width does not match header");
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << '\n';
    }

private:
    std::ostream& os_;
    std::size_t width_;
};

inline void write_spectrum_csv(std::ostream& os, const std::vector<double>& g_values,
                               const std::vector<EigenSystem>& systems) {
    CsvWriter w(os, {"g_a", "eigen_index", "energy", "ipr"});
    for (std::size_t i = 0; i < systems.size(); ++i)
        for (Eigen::Index n = 0; n < systems[i].eigenvalues.size(); ++n)
            w.row({g_values[i], static_cast<double>(n), systems[i].eigenvalues(n), systems[i].ipr_per_vector(n)});
}

// Columns t, one population per basis label (or per `columns` subset), ipr.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const Truncation& t,
                                 const std::vector<BasisIndex>& columns = {}) {
    std::vector<Eigen::Index> idx;
    std::vector<std::string> header{"t"};
    if (columns.empty()) {
        for (Eigen::Index i = 0; i < t.dim(); ++i) idx.push_back(i);
    } else {
        for (const auto& b : columns) idx.push_back(flat_index(b, t));
    }
    for (auto i : idx) header.push_back("pop" + to_string(basis_label(i, t)));
    header.push_back("ipr");
    CsvWriter w(os, header);
    for (std::size_t r = 0; r < traj.times.size(); ++r) {
        std::vector<double> row{traj.times[r]};
        for (auto i : idx) row.push_back(traj.populations(static_cast<Eigen::Index>(r), i));
        row.push_back(traj.ipr_series[r]);
        w.row(row);
    }
}

inline void write_field_csv(std::ostream& os, const ControlField& f) {
    CsvWriter w(os, {"t", "omega_x", "omega_y", "omega_z"});
    for (int j = 0; j < f.steps(); ++j) {
        const auto s = f.sample(j);
        w.row({j * f.dt(), s(0), s(1), s(2)});
    }
}

// Inverse of write_field_csv.
inline ControlField read_field_csv(const std::string& path, const ControlMask& mask = {true, true, true}) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("cannot open field file '" + path + "'");
    std::string line;
    std::getline(in, line);
    std::vector<std::array<double, 4>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::array<double, 4> r{};
        std::stringstream ss(line);
        std::string cell;
        for (auto& v : r) {
            if (!std::getline(ss, cell, ',')) throw InvalidParameter("field file '" + path + "': short row");
            v = std::stod(cell);
        }
        rows.push_back(r);
    }
    if (rows.size() < 2) throw InvalidParameter("field file '" + path + "' needs at least two samples");
    const double dt = rows[1][0] - rows[0][0];
    FieldSamples s(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t j = 0; j < rows.size(); ++j)
        for (int c = 0; c < 3; ++c) s(static_cast<Eigen::Index>(j), c) = rows[j][c + 1];
    return ControlField(dt, s, mask);
}

// -------------------------------- config ------------------------------------

class ConfigError : public InvalidParameter {
public:
    using InvalidParameter::InvalidParameter;
};

class ConfigSource {
public:
    ConfigSource(std::string name, std::string text) : name_(std::move(name)), text_(std::move(text)) {
        try {
            root_ = json::parse(text_);
        } catch (const json::parse_error& e) {
            throw ConfigError(name_ + ":" + std::to_string(line_of_byte(e.byte)) + ": JSON syntax error: " + e.what());
        }
        if (!root_.is_object()) throw ConfigError(name_ + ":1: top level must be an object");
    }

    static ConfigSource from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError(path + ": cannot open config file");
        std::stringstream ss;
        ss << in.rdbuf();
        return ConfigSource(path, ss.str());
    }

    const json& root() const { return root_; }
    const std::string& name() const { return name_; }

    // First line that mentions "key"; 0 when not found.
    std::size_t line_of_key(const std::string& key) const {
        const auto pos = text_.find("\"" + key + "\"");
        return pos == std::string::npos ? 0 : line_of_byte(pos + 1);
    }

    [[noreturn]] void fail(const std::string& key, const std::string& message) const {
        const auto line = line_of_key(key);
        throw ConfigError(name_ + ":" + (line ? std::to_string(line) : std::string("?")) + ": " + message);
    }

    void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) const {
        if (!obj.is_object()) fail(where, "'" + where + "' must be an object");
        for (const auto& [k, v] : obj.items())
            if (!allowed.count(k)) fail(k, "unknown key '" + k + "' in " + where);
    }

    double number(const json& obj, const std::string& key, double fallback) const {
        if (!obj.contains(key)) return fallback;
        return as_number(obj.at(key), key);
    }

    double required_number(const json& obj, const std::string& key) const {
        if (!obj.contains(key)) fail(key, "missing required key '" + key + "'");
        return as_number(obj.at(key), key);
    }

    int integer(const json& obj, const std::string& key, int fallback) const {
        if (!obj.contains(key)) return fallback;
        const auto& v = obj.at(key);
        if (!v.is_number_integer()) fail(key, "'" + key + "' must be an integer");
        return v.get<int>();
    }

    std::string string(const json& obj, const std::string& key, const std::string& fallback) const {
        if (!obj.contains(key)) return fallback;
        const auto& v = obj.at(key);
        if (!v.is_string()) fail(key, "'" + key + "' must be a string");
        return v.get<std::string>();
    }

    bool boolean(const json& obj, const std::string& key, bool fallback) const {
        if (!obj.contains(key)) return fallback;
        const auto& v = obj.at(key);
        if (!v.is_boolean()) fail(key, "'" + key + "' must be true or false");
        return v.get<bool>();
    }

    std::vector<double> numbers(const json& obj, const std::string& key, std::vector<double> fallback) const {
        if (!obj.contains(key)) return fallback;
        const auto& v = obj.at(key);
        if (!v.is_array()) fail(key, "'" + key + "' must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) out.push_back(as_number(e, key));
        return out;
    }

    std::vector<std::string> strings(const json& obj, const std::string& key, std::vector<std::string> fallback) const {
        if (!obj.contains(key)) return fallback;
        const auto& v = obj.at(key);
        if (!v.is_array()) fail(key, "'" + key + "' must be an array of strings");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) fail(key, "'" + key + "' must be an array of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    // Numbers, or strings such as "pi/2", "0.25pi", "3pi/4", "sqrt2", "1/sqrt2".
    double as_number(const json& v, const std::string& key) const {
        if (v.is_number()) return v.get<double>();
        if (v.is_string()) {
            double out = 0.0;
            if (parse_expression(v.get<std::string>(), out)) return out;
        }
        fail(key, "'" + key + "' must be a number or a pi/sqrt2 expression");
    }

private:
    static bool parse_factor(std::string s, double& out) {
        if (s.empty()) return false;
        double coef = 1.0;
        std::string unit;
        for (const char* u : {"pi", "sqrt2"}) {
            const std::string us(u);
            if (s.size() >= us.size() && s.compare(s.size() - us.size(), us.size(), us) == 0) {
                unit = us;
                s = s.substr(0, s.size() - us.size());
                if (!s.empty() && s.back() == '*') s.pop_back();
                break;
            }
        }
        if (!s.empty()) {
            std::size_t used = 0;
            try {
                coef = std::stod(s, &used);
            } catch (...) {
                return false;
            }
            if (used != s.size()) return false;
        } else if (unit.empty()) {
            return false;
        }
        out = coef * (unit == "pi" ? kPi : unit == "sqrt2" ? std::sqrt(2.0) : 1.0);
        return true;
    }

    static bool parse_expression(std::string s, double& out) {
        s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
        double sign = 1.0;
        if (!s.empty() && s.front() == '-') {
            sign = -1.0;
            s.erase(s.begin());
        }
        const auto slash = s.find('/');
        double num = 0.0, den = 1.0;
        if (slash == std::string::npos) {
            if (!parse_factor(s, num)) return false;
        } else {
            if (!parse_factor(s.substr(0, slash), num) || !parse_factor(s.substr(slash + 1), den) || den == 0.0)
                return false;
        }
        out = sign * num / den;
        return true;
    }

    std::size_t line_of_byte(std::size_t byte) const {
        const std::size_t end = std::min(byte, text_.size());
        return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<long>(end), '\n'));
    }

    std::string name_;
    std::string text_;
    json root_;
};

// "|m,k,l>" or "m,k,l"
inline BasisIndex parse_label(const std::string& text) {
    std::string s = text;
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == '|' || c == '>' || c == ' '; }), s.end());
    std::stringstream ss(s);
    std::string part;
    std::vector<int> v;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stoi(part, &used));
            if (used != part.size()) throw InvalidParameter("");
        } catch (...) {
            throw InvalidParameter("bad basis label '" + text + "'");
        }
    }
    if (v.size() != 3) throw InvalidParameter("basis label '" + text + "' must have three entries m,k,l");
    spin_slot(v[0]);
    return {v[0], v[1], v[2]};
}

inline SystemParams parse_system(const ConfigSource& src, const json& obj) {
    src.check_keys(obj, {"omega_a", "omega_b", "D", "omega_z", "g_a", "g_b", "g_ratio", "theta_a", "theta_b", "phi_a",
                         "phi_b", "gamma_b", "alpha", "resonance"},
                   "system");
    SystemParams p;
    p.omega_a = src.number(obj, "omega_a", 1.0);
    p.omega_b = src.number(obj, "omega_b", 0.3);
    p.g_a = src.number(obj, "g_a", 0.0);
    if (obj.contains("g_b") && obj.contains("g_ratio")) src.fail("g_ratio", "give either g_b or g_ratio, not both");
    p.g_b = obj.contains("g_ratio") ? src.number(obj, "g_ratio", 0.0) * p.g_a : src.number(obj, "g_b", 0.0);
    p.theta_a = src.number(obj, "theta_a", 0.0);
    p.theta_b = src.number(obj, "theta_b", 0.0);
    p.phi_a = src.number(obj, "phi_a", 0.0);
    p.phi_b = src.number(obj, "phi_b", 0.0);
    p.gamma_b = src.number(obj, "gamma_b", 0.0);
    p.alpha = src.integer(obj, "alpha", 0);
    if (obj.contains("resonance")) {
        if (obj.contains("D") || obj.contains("omega_z"))
            src.fail("resonance", "'resonance' fixes D and omega_z; remove the explicit values");
        try {
            p = with_resonance(p, parse_resonance(src.string(obj, "resonance", "")));
        } catch (const InvalidParameter& e) {
            src.fail("resonance", e.what());
        }
    } else {
        p.D = src.number(obj, "D", 0.0);
        p.omega_z = src.number(obj, "omega_z", 0.0);
    }
    try {
        p.validate();
    } catch (const InvalidParameter& e) {
        src.fail("system", std::string("invalid system parameters: ") + e.what());
    }
    return p;
}

inline Truncation parse_truncation(const ConfigSource& src, const json& obj) {
    src.check_keys(obj, {"n", "n_a", "n_b"}, "truncation");
    const int n = src.integer(obj, "n", 6);
    try {
        return Truncation(src.integer(obj, "n_a", n), src.integer(obj, "n_b", n));
    } catch (const InvalidTruncation& e) {
        src.fail("truncation", e.what());
    }
}

// A label or a list of labels (equal-weight superposition).
inline Vector parse_state(const ConfigSource& src, const json& v, const std::string& key, const Truncation& t) {
    std::vector<std::string> labels;
    if (v.is_string()) {
        labels.push_back(v.get<std::string>());
    } else if (v.is_array()) {
        for (const auto& e : v) {
            if (!e.is_string()) src.fail(key, "'" + key + "' entries must be basis labels");
            labels.push_back(e.get<std::string>());
        }
    } else {
        src.fail(key, "'" + key + "' must be a basis label or a list of labels");
    }
    if (labels.empty()) src.fail(key, "'" + key + "' is empty");
    Vector out = Vector::Zero(t.dim());
    try {
        for (const auto& l : labels) out += basis_state(parse_label(l), t);
    } catch (const Error& e) {
        src.fail(key, e.what());
    }
    return out / out.norm();
}

// "N" or "NA,NB"
inline Truncation parse_truncation_override(const std::string& s) {
    const auto comma = s.find(',');
    try {
        if (comma == std::string::npos) return Truncation(std::stoi(s));
        return Truncation(std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1)));
    } catch (const InvalidTruncation&) {
        throw;
    } catch (...) {
        throw InvalidParameter("--trunc-override expects N or NA,NB");
    }
}

inline json params_to_json(const SystemParams& p) {
    return json{{"omega_a", p.omega_a}, {"omega_b", p.omega_b}, {"D", p.D},           {"omega_z", p.omega_z},
                {"g_a", p.g_a},         {"g_b", p.g_b},         {"theta_a", p.theta_a}, {"theta_b", p.theta_b},
                {"phi_a", p.phi_a},     {"phi_b", p.phi_b},     {"gamma_b", p.gamma_b}, {"alpha", p.alpha}};
}

} // namespace qex
