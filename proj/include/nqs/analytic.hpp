// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nqs/errors.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace nqs {

/// Nonzero eigenvalues lambda_i = C(n-m, n/2-i) C(m, i) / C(n, n/2) of a
/// subsystem of m spins in the n-spin Dicke state, ordered by i.
struct DickeSpectrum {
    int                 n = 0;
    int                 m = 0;
    int                 i_min = 0;
    std::vector<double> eigenvalues;
    bool                exact      = false; // computed in rational arithmetic
    bool                sum_is_one = false; // exact identity check (exact mode only)
};

inline constexpr int kDickeExactLimit = 64;

namespace detail {
inline boost::multiprecision::cpp_int binomial_exact(int a, int b) {
    boost::multiprecision::cpp_int r = 1;
    for(int j = 1; j <= b; ++j) r = r * (a - b + j) / j;
    return r;
}
inline double log_binomial(int a, int b) {
    return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
}
} // namespace detail

[[nodiscard]] inline DickeSpectrum dicke_spectrum(int n, int m) {
    require(n >= 2 && n % 2 == 0, Errc::domain, "Dicke spectrum needs an even n >= 2");
    require(m >= 1 && m <= n - 1, Errc::domain, "subsystem size must lie in [1, n-1]");
    DickeSpectrum out;
    out.n          = n;
    out.m          = m;
    const int half = n / 2;
    out.i_min      = std::max(0, m - half);
    const int imax = std::min(m, half);
    if(n <= kDickeExactLimit) {
        using boost::multiprecision::cpp_rational;
        const auto   denom = detail::binomial_exact(n, half);
        cpp_rational total = 0;
        for(int i = out.i_min; i <= imax; ++i) {
            cpp_rational l(detail::binomial_exact(n - m, half - i) * detail::binomial_exact(m, i), denom);
            total += l;
            out.eigenvalues.push_back(static_cast<double>(l));
        }
        out.exact      = true;
        out.sum_is_one = total == 1;
    } else {
        const double log_denom = detail::log_binomial(n, half);
        for(int i = out.i_min; i <= imax; ++i)
            out.eigenvalues.push_back(std::exp(detail::log_binomial(n - m, half - i) + detail::log_binomial(m, i) - log_denom));
    }
    return out;
}

[[nodiscard]] inline double dicke_entropy(int n, int m) {
    double s = 0.0;
    for(double l : dicke_spectrum(n, m).eigenvalues)
        if(l > 0.0) s -= l * std::log(l);
    return s;
}

/// (1/2) ln(2 pi e (n/2) p (1-p)); -inf at p = 0 or 1.
[[nodiscard]] inline double dicke_entropy_asymptotic(int n, double p) {
    require(p >= 0.0 && p <= 1.0, Errc::domain, "p must lie in [0, 1]");
    if(p == 0.0 || p == 1.0) return -std::numeric_limits<double>::infinity();
    return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * (n / 2.0) * p * (1.0 - p));
}

/// Gaussian entropy with the hypergeometric variance m (n-m) / (4 (n-1)) at
/// m = p n, i.e. (1/2) ln(2 pi e n p (1-p) / 4) for large n.
[[nodiscard]] inline double dicke_entropy_hypergeometric_gaussian(int n, double p) {
    require(p > 0.0 && p < 1.0, Errc::domain, "p must lie in (0, 1)");
    const double m   = p * n;
    const double var = m * (n - m) / (4.0 * (n - 1.0));
    return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * var);
}

/// Haar-average entropy of m spins out of n (m and n-m are interchangeable):
/// psi(2^n + 1) - psi(2^(n-m) + 1) - (2^m - 1) / 2^(n-m+1).
[[nodiscard]] inline double page_value(int m, int n) {
    require(n >= 2 && n <= 62, Errc::domain, "Page value needs 2 <= n <= 62");
    require(m >= 1 && m <= n - 1, Errc::domain, "subsystem size must lie in [1, n-1]");
    m             = std::min(m, n - m);
    const double D = std::ldexp(1.0, n);
    const double B = std::ldexp(1.0, n - m);
    using boost::math::digamma;
    return digamma(D + 1.0) - digamma(B + 1.0) - (std::ldexp(1.0, m) - 1.0) / (2.0 * B);
}

} // namespace nqs
