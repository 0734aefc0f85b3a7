// optimize.hpp: Bounded derivative-free minimisation: Nelder-Mead plus a
// multi-start driver seeded from a coarse grid or a seeded random sample.

#pragma once

#include "qexchange/parallel.hpp"
#include "qexchange/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace qex {

using Objective = std::function<double(const RealVector&)>;

struct Bounds {
    RealVector lower;
    RealVector upper;

    Eigen::Index dim() const { return lower.size(); }
    RealVector clamp(const RealVector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

struct MinimizeResult {
    RealVector arg;
    double value{std::numeric_limits<double>::infinity()};
    long evaluations{0};
};

struct NelderMeadOptions {
    double initial_step{0.05};  // fraction of each box edge
    int max_evals{4000};
    double xtol{1e-10};
    double ftol{1e-15};
    int restarts{1};
};

struct GlobalOptions {
    int grid_points{24};       // per dimension; ignored when random_samples > 0
    int random_samples{0};
    int starts{8};             // local refinements from the best seeds
    double tie_tol{1e-9};      // values this close count as equal optima
    std::uint64_t seed{0};
    NelderMeadOptions local{};
};

inline void validate_bounds(const Bounds& b) {
    if (b.lower.size() != b.upper.size() || b.lower.size() == 0)
        throw InvalidParameter("bounds: lower/upper size mismatch or empty");
    for (Eigen::Index i = 0; i < b.dim(); ++i)
        if (!(b.lower(i) <= b.upper(i))) throw InvalidParameter("bounds: lower > upper");
}

inline MinimizeResult nelder_mead(const Objective& f, const RealVector& x0, const Bounds& box,
                                  const NelderMeadOptions& opts = {}) {
    validate_bounds(box);
    const Eigen::Index n = box.dim();
    MinimizeResult res;
    auto eval = [&](const RealVector& x) {
        ++res.evaluations;
        return f(box.clamp(x));
    };

    RealVector start = box.clamp(x0);
    for (int round = 0; round <= opts.restarts; ++round) {
        std::vector<RealVector> simplex(static_cast<std::size_t>(n + 1), start);
        std::vector<double> fv(static_cast<std::size_t>(n + 1));
        for (Eigen::Index i = 0; i < n; ++i) {
            double h = opts.initial_step * (box.upper(i) - box.lower(i));
            if (h == 0.0) h = 1e-3;
            if (start(i) + h > box.upper(i)) h = -h;
            simplex[static_cast<std::size_t>(i + 1)](i) += h;
        }
        for (std::size_t i = 0; i < simplex.size(); ++i) fv[i] = eval(simplex[i]);

        std::vector<std::size_t> order(simplex.size());
        while (res.evaluations < opts.max_evals) {
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
            const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];

            double diameter = 0.0;
            for (const auto& v : simplex) diameter = std::max(diameter, (v - simplex[best]).cwiseAbs().maxCoeff());
            if (diameter <= opts.xtol && std::abs(fv[worst] - fv[best]) <= opts.ftol * (1.0 + std::abs(fv[best])))
                break;
            if (diameter <= opts.xtol * 1e-3) break;

            RealVector centroid = RealVector::Zero(n);
            for (std::size_t i = 0; i < simplex.size(); ++i)
                if (i != worst) centroid += simplex[i];
            centroid /= static_cast<double>(n);

            const RealVector xr = box.clamp(centroid + (centroid - simplex[worst]));
            const double fr = eval(xr);
            if (fr < fv[best]) {
                const RealVector xe = box.clamp(centroid + 2.0 * (centroid - simplex[worst]));
                const double fe = eval(xe);
                if (fe < fr) {
                    simplex[worst] = xe;
                    fv[worst] = fe;
                } else {
                    simplex[worst] = xr;
                    fv[worst] = fr;
                }
            } else if (fr < fv[second]) {
                simplex[worst] = xr;
                fv[worst] = fr;
            } else {
                const bool outside = fr < fv[worst];
                const RealVector xc = outside ? RealVector(centroid + 0.5 * (xr - centroid))
                                              : RealVector(centroid + 0.5 * (simplex[worst] - centroid));
                const double fc = eval(xc);
                if (fc < std::min(fr, fv[worst])) {
                    simplex[worst] = xc;
                    fv[worst] = fc;
                } else {
                    for (std::size_t i = 0; i < simplex.size(); ++i) {
                        if (i == best) continue;
                        simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
                        fv[i] = eval(simplex[i]);
                    }
                }
            }
        }
        const auto it = std::min_element(fv.begin(), fv.end());
        const std::size_t bi = static_cast<std::size_t>(it - fv.begin());
        if (*it < res.value || res.arg.size() == 0) {
            res.value = *it;
            res.arg = box.clamp(simplex[bi]);
        }
        start = res.arg;
    }
    return res;
}

namespace detail {

// Strict lexicographic order on coordinates.
inline bool lex_less(const RealVector& a, const RealVector& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) < b(i)) return true;
        if (a(i) > b(i)) return false;
    }
    return false;
}

} // namespace detail

// Among optima within tie_tol of the best value the lexicographically smallest
// argument is returned.
inline MinimizeResult global_minimize(const Objective& f, const Bounds& box, const GlobalOptions& opts = {}) {
    validate_bounds(box);
    const Eigen::Index d = box.dim();

    std::vector<RealVector> seeds;
    std::vector<std::vector<int>> grid_index;
    if (opts.random_samples > 0) {
        std::mt19937_64 rng(opts.seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int s = 0; s < opts.random_samples; ++s) {
            RealVector x(d);
            for (Eigen::Index i = 0; i < d; ++i) x(i) = box.lower(i) + u(rng) * (box.upper(i) - box.lower(i));
            seeds.push_back(x);
        }
    } else {
        const int g = std::max(1, opts.grid_points);
        const double total = std::pow(static_cast<double>(g), static_cast<double>(d));
        if (total > 5e6) throw InvalidParameter("global_minimize: grid too large; use random_samples");
        std::vector<int> idx(static_cast<std::size_t>(d), 0);
        for (long c = 0; c < static_cast<long>(total); ++c) {
            RealVector x(d);
            for (Eigen::Index i = 0; i < d; ++i) {
                const double frac = g == 1 ? 0.5 : static_cast<double>(idx[static_cast<std::size_t>(i)]) / (g - 1);
                x(i) = box.lower(i) + frac * (box.upper(i) - box.lower(i));
            }
            seeds.push_back(x);
            grid_index.push_back(idx);
            for (Eigen::Index i = d - 1; i >= 0; --i) {
                if (++idx[static_cast<std::size_t>(i)] < g) break;
                idx[static_cast<std::size_t>(i)] = 0;
            }
        }
    }

    std::vector<double> values(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) { values[i] = f(seeds[i]); });
    long evaluations = static_cast<long>(seeds.size());

    // Candidate starts: grid-local minima first (keeps distinct basins), then the rest by value.
    std::vector<std::size_t> order(seeds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::size_t> starts;
    if (!grid_index.empty()) {
        const int g = std::max(1, opts.grid_points);
        auto flat = [&](const std::vector<int>& ix) {
            long c = 0;
            for (int v : ix) c = c * g + v;
            return static_cast<std::size_t>(c);
        };
        for (std::size_t i : order) {
            bool local_min = true;
            for (Eigen::Index ax = 0; ax < d && local_min; ++ax)
                for (int step : {-1, 1}) {
                    auto nb = grid_index[i];
                    nb[static_cast<std::size_t>(ax)] += step;
                    if (nb[static_cast<std::size_t>(ax)] < 0 || nb[static_cast<std::size_t>(ax)] >= g) continue;
                    if (values[flat(nb)] < values[i]) {
                        local_min = false;
                        break;
                    }
                }
            if (local_min) starts.push_back(i);
            if (static_cast<int>(starts.size()) >= opts.starts) break;
        }
    }
    for (std::size_t i : order) {
        if (static_cast<int>(starts.size()) >= opts.starts) break;
        if (std::find(starts.begin(), starts.end(), i) == starts.end()) starts.push_back(i);
    }

    std::vector<MinimizeResult> local(starts.size());
    parallel_for(starts.size(), [&](std::size_t s) { local[s] = nelder_mead(f, seeds[starts[s]], box, opts.local); });

    double ref = std::numeric_limits<double>::infinity();
    for (const auto& r : local) {
        evaluations += r.evaluations;
        ref = std::min(ref, r.value);
    }
    MinimizeResult best;
    for (const auto& r : local)
        if (r.value <= ref + opts.tie_tol && (best.arg.size() == 0 || detail::lex_less(r.arg, best.arg))) best = r;
    best.evaluations = evaluations;
    return best;
}

} // namespace qex
