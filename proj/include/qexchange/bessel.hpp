// bessel.hpp: Integer-order Bessel functions of the first kind.
//
// Miller's backward recurrence normalised by J_0 + 2 sum_k J_2k = 1. Starting
// the recurrence well above max(n, |x|) keeps the absolute error near machine
// precision for the |x| <= 50 range used here.

#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

namespace qex {

// J_0(x) .. J_nmax(x)
inline std::vector<double> bessel_j_all(int nmax, double x) {
    std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
    const double ax = std::abs(x);
    if (ax == 0.0) {
        out[0] = 1.0;
        return out;
    }
    const double reach = std::max(static_cast<double>(nmax), ax);
    int start = static_cast<int>(reach + 30.0 + 4.0 * std::sqrt(reach));
    if (start % 2) ++start;

    double next = 0.0, cur = 1e-300, norm = 0.0;
    const double two_over_x = 2.0 / ax;
    for (int k = start; k >= 1; --k) {
        // cur holds J_k, next holds J_{k+1}
        if (k <= nmax) out[static_cast<std::size_t>(k)] = cur;
        if (k % 2 == 0) norm += 2.0 * cur;
        const double prev = k * two_over_x * cur - next;
        next = cur;
        cur = prev;
        if (std::abs(cur) > 1e250) {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for (int i = k; i <= nmax && i <= start; ++i) out[static_cast<std::size_t>(i)] *= 1e-250;
        }
    }
    out[0] = cur;
    norm += cur;
    for (auto& v : out) v /= norm;
    if (x < 0.0)
        for (int k = 1; k <= nmax; k += 2) out[static_cast<std::size_t>(k)] = -out[static_cast<std::size_t>(k)];
    return out;
}

inline double bessel_j(int n, double x) {
    const int an = std::abs(n);
    const double v = bessel_j_all(an, x)[static_cast<std::size_t>(an)];
    return (n < 0 && an % 2) ? -v : v;
}

} // namespace qex
