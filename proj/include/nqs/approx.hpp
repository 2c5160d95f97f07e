// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nqs/activations.hpp"
#include "nqs/core.hpp"
#include "nqs/entanglement.hpp"
#include "nqs/errors.hpp"
#include "nqs/graph.hpp"
#include "nqs/statevector.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nqs {

inline constexpr int kMaxTensorVariables = 4;
inline constexpr int kMaxMonomialDegree  = 30;
inline constexpr int kEmpiricalGridSize  = 10000;

/// Sup-norm certificate for a Chebyshev fit from analyticity of the target on
/// the product of Bernstein ellipses B(a) (rho = e^a) with |f| <= C there.
struct ChebyshevCertificate {
    double a                = 0.0;
    double rho              = 1.0;
    double C                = 0.0;
    double truncation_bound = 0.0;
    double aliasing_bound   = 0.0;
    bool   exact_polynomial = false;

    [[nodiscard]] double total() const { return exact_polynomial ? 0.0 : truncation_bound + aliasing_bound; }
};

/// Tensor of Chebyshev coefficients c_n, n_j in [0, d], with variable 0
/// varying fastest; evaluated at x_j = t_j / t_bar_j.
struct ChebyshevApprox {
    int                                 mu = 0;
    int                                 d  = 0;
    std::vector<double>                 t_bar;
    std::vector<cplx>                   coeffs;
    double                              error_empirical = 0.0;
    std::optional<double>               error_bound{};
    std::optional<ChebyshevCertificate> certificate{};

    [[nodiscard]] std::size_t stride(int j) const {
        std::size_t s = 1;
        for(int i = 0; i < j; ++i) s *= static_cast<std::size_t>(d + 1);
        return s;
    }

    [[nodiscard]] cplx evaluate_scaled(std::span<const double> x) const {
        const auto          D = static_cast<std::size_t>(d + 1);
        std::vector<double> T(static_cast<std::size_t>(mu) * D);
        for(int j = 0; j < mu; ++j) {
            double *row = T.data() + static_cast<std::size_t>(j) * D;
            row[0]      = 1.0;
            if(d >= 1) row[1] = x[static_cast<std::size_t>(j)];
            for(std::size_t k = 2; k < D; ++k) row[k] = 2.0 * x[static_cast<std::size_t>(j)] * row[k - 1] - row[k - 2];
        }
        cplx acc{};
        for(std::size_t idx = 0; idx < coeffs.size(); ++idx) {
            double      w   = 1.0;
            std::size_t rem = idx;
            for(int j = 0; j < mu; ++j) {
                w *= T[static_cast<std::size_t>(j) * D + rem % D];
                rem /= D;
            }
            acc += coeffs[idx] * w;
        }
        return acc;
    }

    [[nodiscard]] cplx evaluate(std::span<const double> t) const {
        std::vector<double> x(static_cast<std::size_t>(mu));
        for(int j = 0; j < mu; ++j) x[static_cast<std::size_t>(j)] = t[static_cast<std::size_t>(j)] / t_bar[static_cast<std::size_t>(j)];
        return evaluate_scaled(x);
    }
    [[nodiscard]] cplx evaluate(double t) const { return evaluate(std::span<const double>(&t, 1)); }
};

// ---------------------------------------------------------------- bound formulas

/// mu C rho^-1 (2 rho / (rho - 1))^mu rho^-d; for mu = 1 this is 2 C rho^-d / (rho - 1).
[[nodiscard]] inline double chebyshev_truncation_bound(double C, double rho, int d, int mu) {
    require(rho > 1.0, Errc::domain, "rho must exceed 1");
    return mu * C / rho * std::pow(2.0 * rho / (rho - 1.0), mu) * std::pow(rho, -d);
}

/// Error from computing coefficients by N-point Chebyshev-Gauss quadrature
/// instead of exact projection: every alias image of a retained coefficient
/// has some index >= 2N - d, giving
/// mu 2^(mu+1) C (rho / (rho - 1))^mu rho^-(2N - d) / (1 - rho^-2N).
[[nodiscard]] inline double chebyshev_aliasing_bound(double C, double rho, int d, int mu, int nodes) {
    require(rho > 1.0, Errc::domain, "rho must exceed 1");
    return mu * std::ldexp(C, mu + 1) * std::pow(rho / (rho - 1.0), mu) * std::pow(rho, -(2.0 * nodes - d)) / (1.0 - std::pow(rho, -2.0 * nodes));
}

[[nodiscard]] inline int quadrature_nodes(int d) { return 4 * (d + 1); }

namespace detail {
inline constexpr double kCeilSlack = 1e-9;
inline int ceil_clamped(double x) {
    require(std::isfinite(x), Errc::domain, "degree formula is not finite");
    return std::max(0, static_cast<int>(std::ceil(x - kCeilSlack)));
}
} // namespace detail

/// Smallest d with d >= (n / 2a) ln 2 + (1/a) ln n + (1/a) ln(8C / (e^a - 1)).
[[nodiscard]] inline int degree_for_n(int n, double a, double C) {
    require(n >= 1 && a > 0.0 && C > 0.0, Errc::domain, "degree_for_n needs n >= 1, a > 0, C > 0");
    return detail::ceil_clamped(n / (2.0 * a) * std::numbers::ln2 + std::log(static_cast<double>(n)) / a + std::log(8.0 * C / std::expm1(a)) / a);
}

/// Smallest d with d >= n ln2 / (2 ln rho) + 2 ln n / ln rho
///                     + ln(C 2^(mu+2) mu (rho - 1)^-mu rho^(mu-1)) / ln rho.
[[nodiscard]] inline int degree_for_n_multi(int n, double rho, double C, int mu) {
    require(rho > 1.0, Errc::domain, "rho must exceed 1");
    require(n >= 1 && C > 0.0 && mu >= 1, Errc::domain, "degree_for_n_multi needs n >= 1, C > 0, mu >= 1");
    const double L     = std::log(rho);
    const double konst = std::log(C) + (mu + 2) * std::numbers::ln2 + std::log(static_cast<double>(mu)) - mu * std::log(rho - 1.0) + (mu - 1) * L;
    return detail::ceil_clamped(n * std::numbers::ln2 / (2.0 * L) + 2.0 * std::log(static_cast<double>(n)) / L + konst / L);
}

/// ((d+1)(d+2)/2)^mu exactly.
[[nodiscard]] inline boost::multiprecision::cpp_int rank_bound(int d, int mu) {
    require(d >= 0 && mu >= 1, Errc::domain, "rank_bound needs d >= 0 and mu >= 1");
    boost::multiprecision::cpp_int base = boost::multiprecision::cpp_int(d + 1) * (d + 2) / 2;
    return boost::multiprecision::pow(base, static_cast<unsigned>(mu));
}

[[nodiscard]] inline double log_rank_bound(int d, int mu) { return mu * std::log((d + 1.0) * (d + 2.0) / 2.0); }

/// w0 ln[(h^d0 + 1)(h^d0 + 2) / 2].
[[nodiscard]] inline double poly_mlp_bound(int w0, int d0, int h) {
    require(w0 >= 1 && d0 >= 1 && h >= 1, Errc::domain, "poly_mlp_bound needs w0, d0, h >= 1");
    const double p = std::pow(static_cast<double>(h), d0);
    return w0 * std::log((p + 1.0) * (p + 2.0) / 2.0);
}

// ---------------------------------------------------------------- fitting

namespace detail {

/// Chebyshev-Gauss nodes cos(pi (k + 1/2) / N).
inline std::vector<double> gauss_nodes(int N) {
    std::vector<double> x(static_cast<std::size_t>(N));
    for(int k = 0; k < N; ++k) x[static_cast<std::size_t>(k)] = std::cos(std::numbers::pi * (k + 0.5) / N);
    return x;
}

/// P[j][k] = (2 - [j == 0]) / N * T_j(x_k).
inline std::vector<double> projection_matrix(int d, int N) {
    std::vector<double> P(static_cast<std::size_t>((d + 1) * N));
    for(int j = 0; j <= d; ++j)
        for(int k = 0; k < N; ++k)
            P[static_cast<std::size_t>(j * N + k)] = (j == 0 ? 1.0 : 2.0) / N * std::cos(j * std::numbers::pi * (k + 0.5) / N);
    return P;
}

inline void require_finite(cplx v) {
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), Errc::numeric, "target function is not finite on the fitting grid");
}

inline int grid_per_axis(int mu) {
    return std::max(2, static_cast<int>(std::ceil(std::pow(static_cast<double>(kEmpiricalGridSize), 1.0 / mu))));
}

/// Calls body(x) for every point of a tensor grid with `per_axis` equispaced
/// points per axis on [-1, 1].
template<class Body>
void for_each_grid_point(int mu, int per_axis, Body &&body) {
    std::vector<int>    idx(static_cast<std::size_t>(mu), 0);
    std::vector<double> x(static_cast<std::size_t>(mu));
    for(;;) {
        for(int j = 0; j < mu; ++j) x[static_cast<std::size_t>(j)] = -1.0 + 2.0 * idx[static_cast<std::size_t>(j)] / (per_axis - 1);
        body(std::span<const double>(x));
        int j = 0;
        while(j < mu && ++idx[static_cast<std::size_t>(j)] == per_axis) idx[static_cast<std::size_t>(j++)] = 0;
        if(j == mu) return;
    }
}

} // namespace detail

using MultiFunction = std::function<cplx(std::span<const double>)>;

/// Tensor-product Chebyshev-Gauss quadrature at N = 4(d+1) nodes per axis,
/// with the empirical sup error measured on a dense grid (about 10^4 points).
[[nodiscard]] inline ChebyshevApprox cheb_fit_multi(const MultiFunction &G, std::vector<double> t_bar, int d) {
    const int mu = static_cast<int>(t_bar.size());
    require(d >= 0, Errc::domain, "degree must be >= 0");
    require(mu >= 1, Errc::domain, "need at least one variable");
    require(mu <= kMaxTensorVariables, Errc::capacity,
            "tensor Chebyshev fits support at most " + std::to_string(kMaxTensorVariables) + " variables, got " + std::to_string(mu));
    for(double tb : t_bar) require(tb > 0.0 && std::isfinite(tb), Errc::domain, "domain half-widths must be positive");
    const int  N     = quadrature_nodes(d);
    const auto nodes = detail::gauss_nodes(N);
    const auto P     = detail::projection_matrix(d, N);

    // Sample G on the node grid, then contract one axis at a time.
    std::size_t total = 1;
    for(int j = 0; j < mu; ++j) total *= static_cast<std::size_t>(N);
    std::vector<cplx>   values(total);
    std::vector<double> t(static_cast<std::size_t>(mu));
    for(std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        for(int j = 0; j < mu; ++j) {
            t[static_cast<std::size_t>(j)] = t_bar[static_cast<std::size_t>(j)] * nodes[rem % static_cast<std::size_t>(N)];
            rem /= static_cast<std::size_t>(N);
        }
        values[flat] = G(t);
        detail::require_finite(values[flat]);
    }
    // Axis j: extents are (d+1) for axes < j and N for axes >= j.
    std::vector<std::size_t> ext(static_cast<std::size_t>(mu), static_cast<std::size_t>(N));
    for(int j = 0; j < mu; ++j) {
        std::size_t inner = 1, outer = 1;
        for(int i = 0; i < j; ++i) inner *= ext[static_cast<std::size_t>(i)];
        for(int i = j + 1; i < mu; ++i) outer *= ext[static_cast<std::size_t>(i)];
        std::vector<cplx> next(inner * static_cast<std::size_t>(d + 1) * outer);
        for(std::size_t o = 0; o < outer; ++o)
            for(int row = 0; row <= d; ++row)
                for(std::size_t in = 0; in < inner; ++in) {
                    cplx acc{};
                    for(int k = 0; k < N; ++k)
                        acc += P[static_cast<std::size_t>(row * N + k)] * values[(o * static_cast<std::size_t>(N) + static_cast<std::size_t>(k)) * inner + in];
                    next[(o * static_cast<std::size_t>(d + 1) + static_cast<std::size_t>(row)) * inner + in] = acc;
                }
        values                         = std::move(next);
        ext[static_cast<std::size_t>(j)] = static_cast<std::size_t>(d + 1);
    }
    ChebyshevApprox out;
    out.mu     = mu;
    out.d      = d;
    out.t_bar  = std::move(t_bar);
    out.coeffs = std::move(values);
    double err = 0.0;
    detail::for_each_grid_point(mu, detail::grid_per_axis(mu), [&](std::span<const double> x) {
        for(int j = 0; j < mu; ++j) t[static_cast<std::size_t>(j)] = out.t_bar[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
        const cplx g = G(t);
        detail::require_finite(g);
        err = std::max(err, std::abs(g - out.evaluate_scaled(x)));
    });
    out.error_empirical = err;
    return out;
}

/// One-dimensional fit of F on [-t_bar, t_bar]. When analyticity parameters
/// are supplied the certified bound includes truncation and aliasing terms.
[[nodiscard]] inline ChebyshevApprox cheb_fit_1d(const std::function<cplx(double)> &F, double t_bar, int d,
                                                 const std::optional<AnalyticityParams> &params = std::nullopt) {
    auto out = cheb_fit_multi([&](std::span<const double> t) { return F(t[0]); }, {t_bar}, d);
    if(params) {
        ChebyshevCertificate cert;
        cert.a                = params->a;
        cert.rho              = std::exp(params->a);
        cert.C                = params->C;
        cert.exact_polynomial = params->poly_degree && *params->poly_degree <= d;
        cert.truncation_bound = chebyshev_truncation_bound(cert.C, cert.rho, d, 1);
        cert.aliasing_bound   = chebyshev_aliasing_bound(cert.C, cert.rho, d, 1, quadrature_nodes(d));
        out.certificate       = cert;
        out.error_bound       = cert.total();
    }
    return out;
}

/// Candidate Bernstein parameters scanned during certification.
[[nodiscard]] inline std::vector<double> ellipse_candidates() {
    std::vector<double> out;
    for(double a = 0.02; a < 12.0; a *= 1.2) out.push_back(a);
    return out;
}

/// Best certified parameters for F = sigma or exp(sigma) on [-t_bar, t_bar]
/// at degree d, scanning ellipse sizes for entire functions.
[[nodiscard]] inline std::optional<AnalyticityParams> best_params_1d(const Activation &act, double t_bar, bool wrap_exp, int d) {
    std::optional<AnalyticityParams> best;
    double                           best_bound = std::numeric_limits<double>::infinity();
    auto                             consider   = [&](const std::optional<AnalyticityParams> &p) {
        if(!p || !std::isfinite(p->C) || p->a <= 0.0) return;
        const double rho = std::exp(p->a);
        const double b   = chebyshev_truncation_bound(p->C, rho, d, 1) + chebyshev_aliasing_bound(p->C, rho, d, 1, quadrature_nodes(d));
        if(std::isfinite(b) && b < best_bound) {
            best_bound = b;
            best       = p;
        }
    };
    auto first = analyticity_params(act, t_bar, wrap_exp);
    if(!first) return std::nullopt;
    if(!first->entire) {
        consider(first);
        return best ? best : first;
    }
    for(double a : ellipse_candidates()) consider(analyticity_params(act, t_bar, wrap_exp, a));
    return best;
}

// ---------------------------------------------------------------- reduced forms

/// Per-feature half-widths sum |w| + |b|.
[[nodiscard]] inline std::vector<double> feature_supnorms(const ReducedForm &r) {
    std::vector<double> out;
    for(const auto &f : r.features) out.push_back(feature_supnorm(f));
    return out;
}

/// Degree of G in each port if every live nonlinearity is a polynomial and the
/// output is a plain amplitude; nullopt otherwise.
[[nodiscard]] inline std::optional<int> residual_polynomial_degree(const ComputationGraph &g) {
    if(g.output().output_mode != OutputMode::amplitude) return std::nullopt;
    std::vector<int> deg(g.nodes().size(), 0);
    for(int p : g.order()) {
        const auto &nd = g.nodes()[static_cast<std::size_t>(p)];
        if(nd.kind == NodeKind::input) {
            deg[static_cast<std::size_t>(p)] = 1;
            continue;
        }
        int in = 0;
        for(const auto &e : nd.inputs)
            in = std::max(in, e.from.kind == Source::Kind::spin ? 1 : deg[static_cast<std::size_t>(g.position_of(e.from.index))]);
        if(nd.kind == NodeKind::nonlinear) {
            if(!g.is_live_position(p)) continue;
            const auto pd = polynomial_degree(*nd.activation);
            if(!pd) return std::nullopt;
            in *= *pd;
        }
        deg[static_cast<std::size_t>(p)] = in;
    }
    return deg[static_cast<std::size_t>(g.output_position())];
}

/// Evaluates G at complex feature values, verifying that every nonlinearity
/// is certifiable and that its pre-activation stays inside its analytic strip.
class ComplexProbe {
  public:
    explicit ComplexProbe(const ReducedForm &r) : ev_(r.residual) {}

    std::optional<cplx> operator()(std::span<const cplx> t) {
        bool ok = true;
        try {
            const cplx v = ev_.run(t, [&](int, const Activation &act, cplx z) {
                if(!ok) return;
                ok = is_certifiable(act) && within_analytic_margin(act, z) && std::isfinite(z.real()) && std::isfinite(z.imag());
                if(!ok) throw Error(Errc::domain, "outside analytic region");
            });
            if(!ok || !std::isfinite(v.real()) || !std::isfinite(v.imag())) return std::nullopt;
            return v;
        } catch(const Error &) { return std::nullopt; }
    }

  private:
    GraphEvaluator ev_;
};

/// Max |G| over the distinguished boundary of prod_j t_bar_j B(a), inflated by
/// 1.1, or nullopt if some sample leaves the analytic region.
[[nodiscard]] inline std::optional<double> polyellipse_sup(const ReducedForm &r, const std::vector<double> &t_bar, double a) {
    const int           mu  = static_cast<int>(t_bar.size());
    const int           per = std::max(16, detail::grid_per_axis(mu));
    ComplexProbe        probe(r);
    std::vector<cplx>   t(static_cast<std::size_t>(mu));
    std::vector<int>    idx(static_cast<std::size_t>(mu), 0);
    double              best = 0.0;
    for(;;) {
        for(int j = 0; j < mu; ++j)
            t[static_cast<std::size_t>(j)] = t_bar[static_cast<std::size_t>(j)] * bernstein_point(a, 2.0 * std::numbers::pi * idx[static_cast<std::size_t>(j)] / per);
        const auto v = probe(t);
        if(!v) return std::nullopt;
        best = std::max(best, std::abs(*v));
        int j = 0;
        while(j < mu && ++idx[static_cast<std::size_t>(j)] == per) idx[static_cast<std::size_t>(j++)] = 0;
        if(j == mu) break;
    }
    return kSupSafetyInflation * best;
}

/// Certificate minimizing truncation + aliasing at degree d over the
/// candidate ellipses; nullopt when no candidate passes the analytic checks.
[[nodiscard]] inline std::optional<ChebyshevCertificate> certify_reduced(const ReducedForm &r, const std::vector<double> &t_bar, int d) {
    const int mu = static_cast<int>(t_bar.size());
    if(mu == 0) return std::nullopt;
    std::optional<ChebyshevCertificate> best;
    const auto                          poly = residual_polynomial_degree(r.residual);
    for(double a : ellipse_candidates()) {
        const auto C = polyellipse_sup(r, t_bar, a);
        if(!C || !std::isfinite(*C)) continue;
        ChebyshevCertificate cert;
        cert.a                = a;
        cert.rho              = std::exp(a);
        cert.C                = *C;
        cert.exact_polynomial = poly && *poly <= d;
        cert.truncation_bound = chebyshev_truncation_bound(cert.C, cert.rho, d, mu);
        cert.aliasing_bound   = chebyshev_aliasing_bound(cert.C, cert.rho, d, mu, quadrature_nodes(d));
        if(!std::isfinite(cert.truncation_bound + cert.aliasing_bound)) continue;
        if(!best || cert.total() < best->total()) best = cert;
    }
    return best;
}

/// Chebyshev fit of G over the feature box, with a certificate when available.
[[nodiscard]] inline ChebyshevApprox fit_reduced(const ReducedForm &r, int d, bool certify = true) {
    require(r.mu >= 1, Errc::domain, "reduced form has no features; the state is constant");
    auto           t_bar = feature_supnorms(r);
    GraphEvaluator ev(r.residual);
    auto           out = cheb_fit_multi([&](std::span<const double> t) { return ev(t); }, t_bar, d);
    if(certify) {
        out.certificate = certify_reduced(r, out.t_bar, d);
        if(out.certificate) out.error_bound = out.certificate->total();
    }
    return out;
}

// ---------------------------------------------------------------- monomials

/// Row k holds the monomial coefficients of T_k.
[[nodiscard]] inline std::vector<std::vector<double>> chebyshev_to_monomial_matrix(int d) {
    std::vector<std::vector<double>> T(static_cast<std::size_t>(d + 1), std::vector<double>(static_cast<std::size_t>(d + 1), 0.0));
    T[0][0] = 1.0;
    if(d >= 1) T[1][1] = 1.0;
    for(int k = 2; k <= d; ++k)
        for(int p = 0; p <= k; ++p)
            T[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)] =
                (p > 0 ? 2.0 * T[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(p - 1)] : 0.0) - T[static_cast<std::size_t>(k - 2)][static_cast<std::size_t>(p)];
    return T;
}

/// Monomial coefficients alpha_n of prod_j x_j^(n_j) in the scaled variables,
/// same tensor layout as the Chebyshev coefficients.
[[nodiscard]] inline std::vector<cplx> monomial_expand(const ChebyshevApprox &c) {
    require(c.d <= kMaxMonomialDegree, Errc::degree,
            "degree " + std::to_string(c.d) + " exceeds the monomial conversion limit of " + std::to_string(kMaxMonomialDegree) +
                "; keep the Chebyshev basis");
    const auto  M = chebyshev_to_monomial_matrix(c.d);
    const auto  D = static_cast<std::size_t>(c.d + 1);
    auto        values = c.coeffs;
    for(int j = 0; j < c.mu; ++j) {
        const std::size_t stride = c.stride(j);
        std::vector<cplx> next(values.size(), cplx{});
        for(std::size_t idx = 0; idx < values.size(); ++idx) {
            const std::size_t k    = (idx / stride) % D;
            const std::size_t base = idx - k * stride;
            for(std::size_t p = 0; p <= k; ++p) next[base + p * stride] += M[k][p] * values[idx];
        }
        values = std::move(next);
    }
    return values;
}

[[nodiscard]] inline cplx evaluate_monomial(const std::vector<cplx> &alpha, int mu, int d, std::span<const double> x) {
    const auto D   = static_cast<std::size_t>(d + 1);
    cplx       acc{};
    for(std::size_t idx = 0; idx < alpha.size(); ++idx) {
        double      w   = 1.0;
        std::size_t rem = idx;
        for(int j = 0; j < mu; ++j) {
            w *= std::pow(x[static_cast<std::size_t>(j)], static_cast<int>(rem % D));
            rem /= D;
        }
        acc += alpha[idx] * w;
    }
    return acc;
}

// ---------------------------------------------------------------- auxiliary state

/// Normalized state with amplitudes P(t_1(s), ..., t_mu(s)).
[[nodiscard]] inline Statevector auxiliary_state(const ReducedForm &r, const ChebyshevApprox &P, int threads = 0) {
    require(P.mu == r.mu, Errc::contract, "approximation and reduced form have different feature counts");
    return materialize_with(
        r.n,
        [&] {
            return [&r, &P, t = std::vector<double>(static_cast<std::size_t>(r.mu))](const SpinConfig &s) mutable {
                for(int j = 0; j < r.mu; ++j) t[static_cast<std::size_t>(j)] = r.features[static_cast<std::size_t>(j)].evaluate(s);
                return P.evaluate(t);
            };
        },
        threads);
}

// ---------------------------------------------------------------- bound report

struct BoundReport {
    int                       n = 0, k = 0, mu = 0, d = 0;
    std::uint64_t             region_mask = 0;
    int                       region_size = 0;
    bool                      certified   = false;
    bool                      empirical_only = true;
    std::string               note;
    std::optional<ChebyshevCertificate> certificate{};
    std::string               rank_bound;        // exact decimal
    double                    entropy_bound_aux = 0.0;
    double                    eps_poly          = 0.0; // on the normalized state
    double                    eps_raw           = 0.0;
    double                    eps_empirical     = 0.0; // on the normalized state
    double                    delta_norm_bound  = 0.0;
    double                    trace_bound       = 0.0;
    double                    fa_slack          = 0.0;
    double                    entropy_bound_final = 0.0;
    double                    norm_was            = 0.0;
    double                    measured_entropy     = 0.0;
    double                    aux_entropy          = 0.0;
    int                       aux_schmidt_rank     = 0;
    double                    measured_delta_norm  = 0.0;
    double                    measured_trace_distance = 0.0; // on the smaller side of the cut
    std::uint64_t             trace_region_mask       = 0;
    std::optional<int>        degree_formula{};
};

/// Degree from the closed-form formulas for the certificate's (a, C).
[[nodiscard]] inline int formula_degree(int n, int mu, const ChebyshevCertificate &c) {
    return mu == 1 ? degree_for_n(n, c.a, c.C) : degree_for_n_multi(n, c.rho, c.C, mu);
}

inline constexpr int kAutoDegreeCap = 40;

/// Full chain for each region: reduce, fit G at degree d (or choose d from the
/// degree formula), build the auxiliary state once, and bound S_A by ln(rank)
/// plus Fannes-Audenaert slack.
[[nodiscard]] inline std::vector<BoundReport> full_bound_reports(const ComputationGraph &g, const std::vector<Subregion> &regions,
                                                                 std::optional<int> degree, int threads = 0) {
    for(const auto &A : regions) {
        require(A.n == g.n(), Errc::contract, "subregion and graph have different spin counts");
        require(A.size() >= 1 && A.size() <= g.n() - 1, Errc::contract, "subregion must be a proper nonempty subset");
    }
    const auto  r   = feature_reduce(g);
    const auto  psi = materialize(g, threads);
    BoundReport base;
    base.n        = g.n();
    base.k        = g.k();
    base.mu       = r.mu;
    base.norm_was = psi.norm_was;
    auto per_region = [&](const BoundReport &shared, auto &&fill) {
        std::vector<BoundReport> out;
        for(const auto &A : regions) {
            BoundReport rep      = shared;
            rep.region_mask      = A.mask;
            rep.region_size      = A.size();
            rep.measured_entropy = subregion_entropy(psi, A).entropy;
            fill(rep, A, std::min(A.size(), g.n() - A.size()));
            out.push_back(std::move(rep));
        }
        return out;
    };
    if(r.mu == 0) {
        base.note           = "state does not depend on the spins";
        base.certified      = true;
        base.empirical_only = false;
        base.rank_bound     = "1";
        return per_region(base, [](BoundReport &, const Subregion &, int) {});
    }
    if(r.mu > kMaxTensorVariables) {
        base.note              = "mu exceeds the tensor fitting cap; no auxiliary state";
        base.d                 = degree.value_or(0);
        base.rank_bound        = rank_bound(base.d, r.mu).str();
        base.entropy_bound_aux = log_rank_bound(base.d, r.mu);
        return per_region(base, [](BoundReport &rep, const Subregion &, int m_small) {
            rep.fa_slack            = m_small * std::numbers::ln2;
            rep.entropy_bound_final = rep.entropy_bound_aux + rep.fa_slack;
        });
    }
    int d = 0;
    if(degree) {
        d = *degree;
    } else {
        // Pick (a, C) at a nominal degree, then apply the closed-form formula.
        const auto nominal = certify_reduced(r, feature_supnorms(r), 8);
        if(nominal) {
            base.degree_formula = formula_degree(g.n(), r.mu, *nominal);
            d                   = std::min(*base.degree_formula, kAutoDegreeCap);
        } else {
            d = 8;
        }
    }
    require(d >= 0, Errc::domain, "degree must be >= 0");
    base.d               = d;
    const auto P         = fit_reduced(r, d);
    base.certificate     = P.certificate;
    base.certified       = P.certificate.has_value();
    base.empirical_only  = !base.certified;
    if(base.certified && !base.degree_formula) base.degree_formula = formula_degree(g.n(), r.mu, *P.certificate);
    if(!base.certified) base.note = "nonlinearity not certifiable; slack uses the empirical error";
    base.eps_raw       = base.certified ? P.certificate->total() : P.error_empirical;
    base.eps_poly      = base.eps_raw / psi.norm_was;
    base.eps_empirical = P.error_empirical / psi.norm_was;

    const auto aux           = auxiliary_state(r, P, threads);
    base.measured_delta_norm = two_norm_distance(psi, aux);
    base.delta_norm_bound    = 2.0 * std::sqrt(base.eps_poly) * std::pow(2.0, g.n() / 4.0);
    base.trace_bound         = std::min(1.0, base.delta_norm_bound);
    base.rank_bound          = rank_bound(d, r.mu).str();
    base.entropy_bound_aux   = log_rank_bound(d, r.mu);
    return per_region(base, [&](BoundReport &rep, const Subregion &A, int m_small) {
        const auto aux_ent          = subregion_entropy(aux, A);
        rep.aux_entropy             = aux_ent.entropy;
        rep.aux_schmidt_rank        = aux_ent.schmidt_rank;
        const Subregion small       = 2 * A.size() <= g.n() ? A : A.complement();
        rep.trace_region_mask       = small.mask;
        rep.measured_trace_distance = reduced_trace_distance(psi, aux, small);
        const double T_envelope     = std::min(rep.trace_bound, 1.0 - std::ldexp(1.0, -m_small));
        rep.fa_slack                = fannes_audenaert_bound(T_envelope, m_small);
        rep.entropy_bound_final     = rep.entropy_bound_aux + rep.fa_slack;
    });
}

[[nodiscard]] inline BoundReport full_bound_report(const ComputationGraph &g, const Subregion &A, std::optional<int> degree, int threads = 0) {
    return full_bound_reports(g, {A}, degree, threads).front();
}

} // namespace nqs
