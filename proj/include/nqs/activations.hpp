// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nqs/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nqs {

using cplx = std::complex<double>;

enum class ActivationId { identity, tanh, sin, cos, relu, gelu, softplus, exp, dicke_delta, poly, log, rsqrt };

/// How a real nonlinearity is lifted to a complex value.
///   real_only: sigma(x)      imag_only: i sigma(x)
///   mixed:     (1+i) sigma(x) pair:     sigma_1(x) + i sigma_2(x)
enum class ComplexMode { real_only, imag_only, mixed, pair };

/// One real scalar function. `beta` is used by softplus, `coeffs` (ascending
/// powers) by poly.
struct ScalarFunction {
    ActivationId        id    = ActivationId::identity;
    double              beta  = 1.0;
    std::vector<double> coeffs{};

    friend bool operator==(const ScalarFunction &, const ScalarFunction &) = default;
};

struct Activation {
    ScalarFunction primary{};
    ComplexMode    mode = ComplexMode::real_only;
    ScalarFunction secondary{}; // imaginary part, only read in pair mode

    Activation() = default;
    Activation(ActivationId id, ComplexMode mode_ = ComplexMode::real_only) : primary{id}, mode(mode_) {}
    Activation(ScalarFunction f, ComplexMode mode_ = ComplexMode::real_only) : primary(std::move(f)), mode(mode_) {}

    static Activation pair(ScalarFunction real_part, ScalarFunction imag_part) {
        Activation a(std::move(real_part), ComplexMode::pair);
        a.secondary = std::move(imag_part);
        return a;
    }
    static Activation polynomial(std::vector<double> coeffs, ComplexMode mode_ = ComplexMode::real_only) {
        return {ScalarFunction{ActivationId::poly, 1.0, std::move(coeffs)}, mode_};
    }
    static Activation softplus(double beta, ComplexMode mode_ = ComplexMode::real_only) {
        return {ScalarFunction{ActivationId::softplus, beta, {}}, mode_};
    }
    static Activation square() { return polynomial({0.0, 0.0, 1.0}); }

    friend bool operator==(const Activation &, const Activation &) = default;
};

inline constexpr std::array<std::pair<ActivationId, std::string_view>, 12> kActivationNames{{
    {ActivationId::identity, "identity"},
    {ActivationId::tanh, "tanh"},
    {ActivationId::sin, "sin"},
    {ActivationId::cos, "cos"},
    {ActivationId::relu, "relu"},
    {ActivationId::gelu, "gelu"},
    {ActivationId::softplus, "softplus"},
    {ActivationId::exp, "exp"},
    {ActivationId::dicke_delta, "dicke_delta"},
    {ActivationId::poly, "poly"},
    {ActivationId::log, "log"},
    {ActivationId::rsqrt, "rsqrt"},
}};

[[nodiscard]] inline std::string_view to_string(ActivationId id) {
    for(auto [k, name] : kActivationNames)
        if(k == id) return name;
    return "?";
}

[[nodiscard]] inline ActivationId activation_from_string(std::string_view name) {
    for(auto [k, text] : kActivationNames)
        if(text == name) return k;
    fail(Errc::parse, "unknown activation '" + std::string(name) + "'");
}

[[nodiscard]] inline std::string_view to_string(ComplexMode mode) {
    switch(mode) {
        case ComplexMode::real_only: return "real";
        case ComplexMode::imag_only: return "imag";
        case ComplexMode::mixed: return "mixed";
        case ComplexMode::pair: return "pair";
    }
    return "?";
}

[[nodiscard]] inline ComplexMode complex_mode_from_string(std::string_view name) {
    if(name == "real" || name == "real_only") return ComplexMode::real_only;
    if(name == "imag" || name == "imag_only") return ComplexMode::imag_only;
    if(name == "mixed") return ComplexMode::mixed;
    if(name == "pair") return ComplexMode::pair;
    fail(Errc::parse, "unknown complex mode '" + std::string(name) + "'");
}

namespace detail {

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline double softplus_real(double x, double beta) {
    const double bx = beta * x;
    // log(1 + e^{bx}) = max(bx, 0) + log1p(e^{-|bx|})
    return (std::max(bx, 0.0) + std::log1p(std::exp(-std::abs(bx)))) / beta;
}

template<class T>
T horner(const std::vector<double> &coeffs, T x) {
    T acc{0.0};
    for(auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + T(*it);
    return acc;
}

inline double eval_real(const ScalarFunction &f, double x) {
    switch(f.id) {
        case ActivationId::identity: return x;
        case ActivationId::tanh: return std::tanh(x);
        case ActivationId::sin: return std::sin(x);
        case ActivationId::cos: return std::cos(x);
        case ActivationId::relu: return relu(x);
        case ActivationId::gelu: return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
        case ActivationId::softplus: return softplus_real(x, f.beta);
        case ActivationId::exp: return std::exp(x);
        case ActivationId::dicke_delta: return relu(x - 1.0) - 2.0 * relu(x) + relu(x + 1.0);
        case ActivationId::poly: return horner(f.coeffs, x);
        case ActivationId::log:
            require(x > 0.0, Errc::numeric, "log activation needs a positive argument");
            return std::log(x);
        case ActivationId::rsqrt:
            require(x > 0.0, Errc::numeric, "rsqrt activation needs a positive argument");
            return 1.0 / std::sqrt(x);
    }
    return x;
}

inline cplx eval_complex(const ScalarFunction &f, cplx z) {
    switch(f.id) {
        case ActivationId::identity: return z;
        case ActivationId::tanh: return std::tanh(z);
        case ActivationId::sin: return std::sin(z);
        case ActivationId::cos: return std::cos(z);
        case ActivationId::exp: return std::exp(z);
        case ActivationId::softplus: return std::log(1.0 + std::exp(f.beta * z)) / f.beta;
        case ActivationId::poly: return horner(f.coeffs, z);
        case ActivationId::log:
            require(!(z.imag() == 0.0 && z.real() <= 0.0), Errc::numeric, "log activation evaluated on its branch cut");
            return std::log(z);
        case ActivationId::rsqrt:
            require(z != cplx{0.0}, Errc::numeric, "rsqrt activation evaluated at zero");
            return 1.0 / std::sqrt(z);
        case ActivationId::relu:
        case ActivationId::gelu:
        case ActivationId::dicke_delta:
            fail(Errc::numeric, std::string("activation '") + std::string(to_string(f.id)) + "' has no analytic extension off the real axis");
    }
    return z;
}

inline cplx eval_function(const ScalarFunction &f, cplx z) {
    if(z.imag() == 0.0) return {eval_real(f, z.real()), 0.0};
    return eval_complex(f, z);
}

inline cplx lift(const Activation &a, cplx z) {
    const cplx v = eval_function(a.primary, z);
    switch(a.mode) {
        case ComplexMode::real_only: return v;
        case ComplexMode::imag_only: return cplx{0.0, 1.0} * v;
        case ComplexMode::mixed: return cplx{1.0, 1.0} * v;
        case ComplexMode::pair: return v + cplx{0.0, 1.0} * eval_function(a.secondary, z);
    }
    return v;
}

inline bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

} // namespace detail

/// sigma(z) for real or complex pre-activations. Non-real arguments use the
/// analytic continuation and are rejected for relu, gelu and dicke_delta.
[[nodiscard]] inline cplx apply(const Activation &a, cplx z) {
    require(detail::finite(z), Errc::numeric, "non-finite pre-activation");
    const cplx out = detail::lift(a, z);
    require(detail::finite(out), Errc::amplitude_overflow,
            "activation '" + std::string(to_string(a.primary.id)) + "' overflowed");
    return out;
}

[[nodiscard]] inline cplx apply(const Activation &a, double x) { return apply(a, cplx{x, 0.0}); }

/// Distance from the real axis to the nearest singularity of f, for functions
/// whose singularities sit on horizontal lines. +inf for entire functions,
/// nullopt when no such strip exists (non-analytic or branch-point functions).
[[nodiscard]] inline std::optional<double> singularity_half_width(const ScalarFunction &f) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch(f.id) {
        case ActivationId::identity:
        case ActivationId::sin:
        case ActivationId::cos:
        case ActivationId::exp:
        case ActivationId::poly: return inf;
        case ActivationId::tanh: return std::numbers::pi / 2.0;
        case ActivationId::softplus: return std::numbers::pi / f.beta;
        default: return std::nullopt;
    }
}

/// True when f stays at least 10% away from its nearest singularity at z.
/// For log the test is Re z >= 0.1 |z|; since Re is harmonic, checking it on
/// a domain boundary keeps the whole domain off the branch cut.
[[nodiscard]] inline bool within_analytic_margin(const ScalarFunction &f, cplx z) {
    if(f.id == ActivationId::log) return z.real() > 0.0 && z.real() >= 0.1 * std::abs(z);
    auto width = singularity_half_width(f);
    if(!width) return false;
    return std::abs(z.imag()) <= 0.9 * *width;
}

[[nodiscard]] inline bool within_analytic_margin(const Activation &a, cplx z) {
    if(!within_analytic_margin(a.primary, z)) return false;
    return a.mode != ComplexMode::pair || within_analytic_margin(a.secondary, z);
}

/// Whether certification machinery may treat this activation as analytic.
/// rsqrt only appears inside LayerNorm, which is excluded from certification.
[[nodiscard]] inline bool is_certifiable(const ScalarFunction &f) {
    return f.id == ActivationId::log || singularity_half_width(f).has_value();
}

[[nodiscard]] inline bool is_certifiable(const Activation &a) {
    return is_certifiable(a.primary) && (a.mode != ComplexMode::pair || is_certifiable(a.secondary));
}

/// Degree when the lifted activation is a polynomial, nullopt otherwise.
[[nodiscard]] inline std::optional<int> polynomial_degree(const Activation &a) {
    auto degree_of = [](const ScalarFunction &f) -> std::optional<int> {
        if(f.id == ActivationId::identity) return 1;
        if(f.id != ActivationId::poly) return std::nullopt;
        int d = static_cast<int>(f.coeffs.size()) - 1;
        while(d > 0 && f.coeffs[static_cast<std::size_t>(d)] == 0.0) --d;
        return std::max(d, 0);
    };
    auto d = degree_of(a.primary);
    if(!d) return std::nullopt;
    if(a.mode == ComplexMode::pair) {
        auto d2 = degree_of(a.secondary);
        if(!d2) return std::nullopt;
        return std::max(*d, *d2);
    }
    return d;
}

/// Point on the boundary of the Bernstein ellipse B(a) at angle theta.
[[nodiscard]] inline cplx bernstein_point(double a, double theta) { return {std::cosh(a) * std::cos(theta), std::sinh(a) * std::sin(theta)}; }

inline constexpr int    kEllipseSamples     = 10000;
inline constexpr double kSupSafetyInflation = 1.1;

/// 1.1 x max |f| over `samples` equispaced boundary points of B(a). By the
/// maximum modulus principle this estimates the sup over the closed ellipse.
template<class F>
[[nodiscard]] double ellipse_sup_estimate(F &&f, double a, int samples = kEllipseSamples) {
    double best = 0.0;
    for(int j = 0; j < samples; ++j) {
        const double theta = 2.0 * std::numbers::pi * (j + 0.5) / samples;
        const double v     = std::abs(f(bernstein_point(a, theta)));
        if(!std::isfinite(v)) return std::numeric_limits<double>::infinity();
        best = std::max(best, v);
    }
    return kSupSafetyInflation * best;
}

struct AnalyticityParams {
    double             a = 0.0;         // Bernstein parameter, rho = e^a
    double             C = 0.0;         // estimated sup of f(x) = F(t_bar x) on B(a)
    bool               entire = false;  // no finite singularity
    std::optional<int> poly_degree{};   // set when F is a polynomial
};

/// Bernstein ellipse and sup bound for f(x) = F(t_bar x) where F = sigma or
/// F = exp(sigma). For functions with a singular strip, the ellipse keeps a 10%
/// margin (sinh a = 0.9 w / t_bar); for entire functions `entire_a` is used.
/// Returns nullopt for relu, gelu, dicke_delta and the internal log/rsqrt.
[[nodiscard]] inline std::optional<AnalyticityParams> analyticity_params(const Activation &act, double t_bar, bool wrap_exp = false,
                                                                        double entire_a = 1.0) {
    require(t_bar > 0.0, Errc::domain, "t_bar must be positive");
    auto w1 = singularity_half_width(act.primary);
    if(!w1) return std::nullopt;
    double width = *w1;
    if(act.mode == ComplexMode::pair) {
        auto w2 = singularity_half_width(act.secondary);
        if(!w2) return std::nullopt;
        width = std::min(width, *w2);
    }
    AnalyticityParams p;
    p.entire = std::isinf(width);
    p.a      = p.entire ? entire_a : std::asinh(0.9 * width / t_bar);
    if(!wrap_exp) p.poly_degree = polynomial_degree(act);
    auto f = [&](cplx x) {
        const cplx s = detail::lift(act, t_bar * x);
        return wrap_exp ? std::exp(s) : s;
    };
    p.C = ellipse_sup_estimate(f, p.a);
    return p;
}

} // namespace nqs
