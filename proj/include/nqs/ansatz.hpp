// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nqs/graph.hpp"
#include "nqs/graph_json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace nqs {

/// Incremental graph assembly with fresh ids; spins are referenced directly.
class GraphBuilder {
  public:
    explicit GraphBuilder(int n) : n_(n) {}

    int linear(std::vector<Edge> in, double bias = 0.0) { return push(Node::linear(next_, std::move(in), bias)); }
    int nonlinear(Activation act, std::vector<Edge> in, double bias = 0.0) {
        return push(Node::nonlinear(next_, std::move(act), std::move(in), bias));
    }
    int output(std::vector<Edge> in, cplx bias = {}, OutputMode mode = OutputMode::amplitude) {
        return push(Node::output(next_, std::move(in), bias, mode));
    }

    /// x * y = ((x + y)^2 - (x - y)^2) / 4, two square nonlinearities.
    int product(int x, int y) {
        const int plus  = nonlinear(Activation::square(), {{Source::node(x), 1.0}, {Source::node(y), 1.0}});
        const int minus = nonlinear(Activation::square(), {{Source::node(x), 1.0}, {Source::node(y), -1.0}});
        return linear({{Source::node(plus), 0.25}, {Source::node(minus), -0.25}});
    }

    /// (z_i - mean z) / sqrt(var z + eps) without affine parameters; costs
    /// 3w + 1 nonlinearities for w inputs.
    std::vector<int> layer_norm(const std::vector<int> &z, double eps) {
        const auto        w = static_cast<double>(z.size());
        std::vector<int>  centered;
        for(std::size_t i = 0; i < z.size(); ++i) {
            std::vector<Edge> in;
            for(std::size_t j = 0; j < z.size(); ++j) in.push_back({Source::node(z[j]), (i == j ? 1.0 : 0.0) - 1.0 / w});
            centered.push_back(linear(std::move(in)));
        }
        std::vector<Edge> var_terms;
        for(int c : centered) {
            const int sq = nonlinear(Activation::square(), {{Source::node(c), 1.0}});
            var_terms.push_back({Source::node(sq), 1.0 / w});
        }
        const int        inv_std = nonlinear(Activation(ActivationId::rsqrt), std::move(var_terms), eps);
        std::vector<int> out;
        for(int c : centered) out.push_back(product(c, inv_std));
        return out;
    }

    ComputationGraph build() && { return ComputationGraph::create(n_, std::move(nodes_)); }
    [[nodiscard]] int n() const noexcept { return n_; }

  private:
    int push(Node nd) {
        nodes_.push_back(std::move(nd));
        return next_++;
    }
    int               n_;
    int               next_ = 0;
    std::vector<Node> nodes_;
};

inline std::vector<Edge> spin_edges(const std::vector<double> &w, int offset = 0) {
    std::vector<Edge> out;
    for(std::size_t i = 0; i < w.size(); ++i) out.push_back({Source::spin(offset + static_cast<int>(i)), w[i]});
    return out;
}

// ---------------------------------------------------------------- SN-NQS

enum class SnParameterization { wrap_exp, direct };

/// Psi = exp(sigma(w.s + b)) or sigma(w.s + b).
struct SnnqsSpec {
    int                n = 10;
    Activation         activation{ActivationId::tanh, ComplexMode::imag_only};
    SnParameterization parameterization = SnParameterization::wrap_exp;
    double             weight_std       = 1.0;
    double             bias_std         = 0.5;
};

/// Draw order: w_1..w_n, then b.
[[nodiscard]] inline ComputationGraph build_snnqs(const SnnqsSpec &spec, RngStream &rng) {
    require(spec.n >= 1, Errc::spec, "SN-NQS needs n >= 1");
    std::vector<double> w(static_cast<std::size_t>(spec.n));
    for(auto &x : w) x = rng.normal(0.0, spec.weight_std);
    const double b = rng.normal(0.0, spec.bias_std);
    GraphBuilder gb(spec.n);
    const int    sigma = gb.nonlinear(spec.activation, spin_edges(w), b);
    gb.output({{Source::node(sigma), 1.0}}, {},
              spec.parameterization == SnParameterization::wrap_exp ? OutputMode::log_amplitude : OutputMode::amplitude);
    return std::move(gb).build();
}

// ---------------------------------------------------------------- MLP-NQS

enum class HeadInit { all_ones, random };

struct MlpSpec {
    int        n     = 10;
    int        width = 3;
    int        depth = 2;
    Activation activation{ActivationId::tanh};
    double     sigma_w   = 1.0;
    double     sigma_b   = 0.2;
    bool       layernorm = true;
    double     ln_eps    = 1e-5;
    HeadInit   heads     = HeadInit::random;
    OutputMode output    = OutputMode::amplitude;
};

/// Weights ~ N(0, sigma_w^2 / fan_in), biases ~ N(0, sigma_b^2). Draw order:
/// per layer W row-major then b; then (w_R, b_R, w_I, b_I) for random heads.
[[nodiscard]] inline ComputationGraph build_mlp(const MlpSpec &spec, RngStream &rng) {
    require(spec.n >= 1, Errc::spec, "MLP needs n >= 1");
    require(spec.width >= 1 && spec.depth >= 1, Errc::spec, "MLP needs width >= 1 and depth >= 1");
    GraphBuilder     gb(spec.n);
    std::vector<int> h;
    for(int layer = 0; layer < spec.depth; ++layer) {
        const int           fan_in = layer == 0 ? spec.n : spec.width;
        const double        std_w  = spec.sigma_w / std::sqrt(static_cast<double>(fan_in));
        std::vector<double> W(static_cast<std::size_t>(spec.width * fan_in));
        for(auto &x : W) x = rng.normal(0.0, std_w);
        std::vector<double> b(static_cast<std::size_t>(spec.width));
        for(auto &x : b) x = rng.normal(0.0, spec.sigma_b);
        auto row = [&](int i) {
            std::vector<Edge> in;
            for(int j = 0; j < fan_in; ++j) {
                const double wij = W[static_cast<std::size_t>(i * fan_in + j)];
                in.push_back({layer == 0 ? Source::spin(j) : Source::node(h[static_cast<std::size_t>(j)]), wij});
            }
            return in;
        };
        std::vector<int> next;
        if(spec.layernorm) {
            std::vector<int> z;
            for(int i = 0; i < spec.width; ++i) z.push_back(gb.linear(row(i), b[static_cast<std::size_t>(i)]));
            for(int y : gb.layer_norm(z, spec.ln_eps)) next.push_back(gb.nonlinear(spec.activation, {{Source::node(y), 1.0}}));
        } else {
            for(int i = 0; i < spec.width; ++i) next.push_back(gb.nonlinear(spec.activation, row(i), b[static_cast<std::size_t>(i)]));
        }
        h = std::move(next);
    }
    std::vector<double> wr(static_cast<std::size_t>(spec.width), 1.0), wi(static_cast<std::size_t>(spec.width), 1.0);
    double              br = 0.0, bi = 0.0;
    if(spec.heads == HeadInit::random) {
        const double std_w = spec.sigma_w / std::sqrt(static_cast<double>(spec.width));
        for(auto &x : wr) x = rng.normal(0.0, std_w);
        br = rng.normal(0.0, spec.sigma_b);
        for(auto &x : wi) x = rng.normal(0.0, std_w);
        bi = rng.normal(0.0, spec.sigma_b);
    }
    std::vector<Edge> out;
    for(std::size_t i = 0; i < h.size(); ++i) out.push_back({Source::node(h[i]), cplx{wr[i], wi[i]}});
    gb.output(std::move(out), {br, bi}, spec.output);
    return std::move(gb).build();
}

// ---------------------------------------------------------------- T-NQS

struct TransformerSpec {
    int           n          = 16;
    int           patch      = 6;
    int           stride     = 5;
    int           embed_dim  = 32;
    int           heads      = 4;
    int           layers     = 2;
    int           ffn_width  = 64;
    Activation    activation{ActivationId::tanh};
    double        sigma_w     = 1.0;
    double        sigma_b     = 0.2;
    bool          frozen      = true;
    std::uint64_t frozen_seed = 0x5eedf00dULL;
    OutputMode    output      = OutputMode::log_amplitude;

    [[nodiscard]] int tokens() const { return (n - patch) / stride + 1; }
};

/// Identity patch embedding, `layers` blocks of multi-head softmax attention
/// (heads concatenated), one per-token FFN W2 sigma(W1 z + b1) + b2, then two
/// real heads f_R, f_I. Products use polarization and softmax uses
/// a_ij = exp(s_ij - log sum_j exp(s_ij)), so every scalar nonlinearity is a
/// graph node. Attention and head weights come from a fixed stream when frozen.
[[nodiscard]] inline ComputationGraph build_transformer(const TransformerSpec &spec, RngStream &rng) {
    require(spec.patch >= 1 && spec.patch <= spec.n, Errc::spec, "patch size must lie in [1, n]");
    require(spec.stride >= 1, Errc::spec, "stride must be >= 1");
    require(spec.heads >= 1 && spec.embed_dim % spec.heads == 0, Errc::spec, "embed_dim must be a multiple of heads");
    require(spec.layers >= 1 && spec.ffn_width >= 1, Errc::spec, "need >= 1 layer and ffn_width >= 1");
    const int M  = spec.tokens();
    const int d  = spec.embed_dim;
    const int dh = d / spec.heads;

    RngStream frozen = spec.frozen ? RngStream(spec.frozen_seed, stream_key({0x7a11})) : rng.child(0x7a11);
    RngStream ffn    = rng.child(0xff17);

    GraphBuilder gb(spec.n);
    // Token coordinates as edge lists over their sources.
    std::vector<std::vector<Source>> tokens(static_cast<std::size_t>(M));
    for(int j = 0; j < M; ++j)
        for(int p = 0; p < spec.patch; ++p) tokens[static_cast<std::size_t>(j)].push_back(Source::spin(j * spec.stride + p));

    auto project = [&](RngStream &src, const std::vector<Source> &x, int out_dim, double std_w, bool with_bias, double std_b) {
        std::vector<int> out;
        std::vector<double> W(static_cast<std::size_t>(out_dim) * x.size());
        for(auto &v : W) v = src.normal(0.0, std_w);
        std::vector<double> b(static_cast<std::size_t>(out_dim), 0.0);
        if(with_bias)
            for(auto &v : b) v = src.normal(0.0, std_b);
        for(int o = 0; o < out_dim; ++o) {
            std::vector<Edge> in;
            for(std::size_t i = 0; i < x.size(); ++i) in.push_back({x[i], W[static_cast<std::size_t>(o) * x.size() + i]});
            out.push_back(gb.linear(std::move(in), b[static_cast<std::size_t>(o)]));
        }
        return out;
    };

    for(int layer = 0; layer < spec.layers; ++layer) {
        const int    fan_in = static_cast<int>(tokens[0].size());
        const double std_w  = spec.sigma_w / std::sqrt(static_cast<double>(fan_in));
        // Per token: Q, K, V of width d (all heads side by side).
        std::vector<std::vector<int>> Q, K, V;
        for(int j = 0; j < M; ++j) {
            Q.push_back(project(frozen, tokens[static_cast<std::size_t>(j)], d, std_w, false, 0.0));
            K.push_back(project(frozen, tokens[static_cast<std::size_t>(j)], d, std_w, false, 0.0));
            V.push_back(project(frozen, tokens[static_cast<std::size_t>(j)], d, std_w, false, 0.0));
        }
        std::vector<std::vector<Source>> next(static_cast<std::size_t>(M), std::vector<Source>(static_cast<std::size_t>(d), Source::node(0)));
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        for(int hd = 0; hd < spec.heads; ++hd) {
            const int off = hd * dh;
            for(int i = 0; i < M; ++i) {
                std::vector<int> score(static_cast<std::size_t>(M));
                for(int j = 0; j < M; ++j) {
                    std::vector<Edge> terms;
                    for(int t = 0; t < dh; ++t) {
                        const int q = Q[static_cast<std::size_t>(i)][static_cast<std::size_t>(off + t)];
                        const int k = K[static_cast<std::size_t>(j)][static_cast<std::size_t>(off + t)];
                        terms.push_back({Source::node(gb.product(q, k)), scale});
                    }
                    score[static_cast<std::size_t>(j)] = gb.linear(std::move(terms));
                }
                std::vector<Edge> sum_exp;
                for(int j = 0; j < M; ++j)
                    sum_exp.push_back({Source::node(gb.nonlinear(Activation(ActivationId::exp), {{Source::node(score[static_cast<std::size_t>(j)]), 1.0}})), 1.0});
                const int log_norm = gb.nonlinear(Activation(ActivationId::log), std::move(sum_exp));
                std::vector<int> attn(static_cast<std::size_t>(M));
                for(int j = 0; j < M; ++j)
                    attn[static_cast<std::size_t>(j)] = gb.nonlinear(Activation(ActivationId::exp),
                                                                     {{Source::node(score[static_cast<std::size_t>(j)]), 1.0}, {Source::node(log_norm), -1.0}});
                for(int t = 0; t < dh; ++t) {
                    std::vector<Edge> terms;
                    for(int j = 0; j < M; ++j)
                        terms.push_back({Source::node(gb.product(attn[static_cast<std::size_t>(j)], V[static_cast<std::size_t>(j)][static_cast<std::size_t>(off + t)])), 1.0});
                    next[static_cast<std::size_t>(i)][static_cast<std::size_t>(off + t)] = Source::node(gb.linear(std::move(terms)));
                }
            }
        }
        tokens = std::move(next);
    }

    // Per-token feed-forward network.
    std::vector<Source> features;
    for(int j = 0; j < M; ++j) {
        const auto         &z    = tokens[static_cast<std::size_t>(j)];
        const double        std1 = spec.sigma_w / std::sqrt(static_cast<double>(d));
        std::vector<double> W1(static_cast<std::size_t>(spec.ffn_width * d));
        for(auto &v : W1) v = ffn.normal(0.0, std1);
        std::vector<double> b1(static_cast<std::size_t>(spec.ffn_width));
        for(auto &v : b1) v = ffn.normal(0.0, spec.sigma_b);
        std::vector<Source> hidden;
        for(int u = 0; u < spec.ffn_width; ++u) {
            std::vector<Edge> in;
            for(int t = 0; t < d; ++t) in.push_back({z[static_cast<std::size_t>(t)], W1[static_cast<std::size_t>(u * d + t)]});
            hidden.push_back(Source::node(gb.nonlinear(spec.activation, std::move(in), b1[static_cast<std::size_t>(u)])));
        }
        const double std2 = spec.sigma_w / std::sqrt(static_cast<double>(spec.ffn_width));
        for(int id : project(ffn, hidden, d, std2, true, spec.sigma_b)) features.push_back(Source::node(id));
    }

    const double        std_h = spec.sigma_w / std::sqrt(static_cast<double>(features.size()));
    std::vector<double> wr(features.size()), wi(features.size());
    for(auto &v : wr) v = frozen.normal(0.0, std_h);
    for(auto &v : wi) v = frozen.normal(0.0, std_h);
    std::vector<Edge> out;
    for(std::size_t i = 0; i < features.size(); ++i) out.push_back({features[i], cplx{wr[i], wi[i]}});
    gb.output(std::move(out), {}, spec.output);
    return std::move(gb).build();
}

// ---------------------------------------------------------------- CosNet

struct CosnetSpec {
    int    n       = 12;
    int    k       = 4;
    double sigma_a = 10.0;
    double sigma_w = 1.0;
    /// w_i ~ N(0, sigma_w^2 / n) when set, N(0, sigma_w^2) otherwise.
    bool scale_weights_by_n = true;
};

/// Psi = sum_i a_i cos(w_i.s + b_i) + i sum_i a'_i cos(w'_i.s + b'_i).
/// Draw order per part and unit: a_i, w_i (n values), b_i.
[[nodiscard]] inline ComputationGraph build_cosnet(const CosnetSpec &spec, RngStream &rng) {
    require(spec.n >= 1, Errc::spec, "CosNet needs n >= 1");
    require(spec.k >= 1, Errc::spec, "CosNet needs k >= 1 hidden units");
    const double std_a = spec.sigma_a / std::sqrt(static_cast<double>(spec.k));
    const double std_w = spec.scale_weights_by_n ? spec.sigma_w / std::sqrt(static_cast<double>(spec.n)) : spec.sigma_w;
    GraphBuilder      gb(spec.n);
    std::vector<Edge> out;
    for(int part = 0; part < 2; ++part) {
        const cplx unit = part == 0 ? cplx{1.0, 0.0} : cplx{0.0, 1.0};
        for(int i = 0; i < spec.k; ++i) {
            const double        a = rng.normal(0.0, std_a);
            std::vector<double> w(static_cast<std::size_t>(spec.n));
            for(auto &x : w) x = rng.normal(0.0, std_w);
            const double b  = rng.uniform(-std::numbers::pi, std::numbers::pi);
            const int    id = gb.nonlinear(Activation(ActivationId::cos), spin_edges(w), b);
            out.push_back({Source::node(id), unit * a});
        }
    }
    gb.output(std::move(out));
    return std::move(gb).build();
}

// ---------------------------------------------------------------- Dicke

struct DickeSpec {
    int n = 4;
};

/// Psi(s) = dicke_delta(sum_i s_i); nonzero exactly on zero magnetization.
[[nodiscard]] inline ComputationGraph build_dicke(const DickeSpec &spec) {
    require(spec.n >= 2 && spec.n % 2 == 0, Errc::spec, "Dicke state needs an even n >= 2, got " + std::to_string(spec.n));
    GraphBuilder gb(spec.n);
    const int    d = gb.nonlinear(Activation(ActivationId::dicke_delta), spin_edges(std::vector<double>(static_cast<std::size_t>(spec.n), 1.0)));
    gb.output({{Source::node(d), 1.0}});
    return std::move(gb).build();
}

// ---------------------------------------------------------------- random DAGs

struct RandomDagSpec {
    int    n            = 8;
    int    k            = 4;
    int    max_linear   = 3;
    double edge_prob    = 0.5;
    double weight_scale = 0.5;
};

/// Random feed-forward graph with k smooth nonlinearities and a few linear
/// nodes mixed in. Output weights on spins and linear nodes are real, so the
/// output contributes a single direct feature.
[[nodiscard]] inline ComputationGraph build_random_dag(const RandomDagSpec &spec, RngStream &rng) {
    require(spec.n >= 1 && spec.k >= 0, Errc::spec, "random DAG needs n >= 1, k >= 0");
    static const std::array<ActivationId, 5> kinds{ActivationId::tanh, ActivationId::sin, ActivationId::cos, ActivationId::softplus,
                                                   ActivationId::poly};
    static const std::array<ComplexMode, 3>  modes{ComplexMode::real_only, ComplexMode::imag_only, ComplexMode::mixed};
    GraphBuilder gb(spec.n);
    struct Made {
        int  id;
        bool nonlinear;
    };
    std::vector<Made> made;
    const int         linear_count = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(spec.max_linear) + 1));
    const int         total        = spec.k + linear_count;
    // Place linear nodes at random slots among the nonlinear ones.
    std::vector<char> is_nonlinear(static_cast<std::size_t>(total), 1);
    for(int placed = 0; placed < linear_count;) {
        auto slot = static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(total)));
        if(is_nonlinear[slot]) {
            is_nonlinear[slot] = 0;
            ++placed;
        }
    }
    auto random_inputs = [&](bool allow_spins) {
        std::vector<Edge> in;
        if(allow_spins)
            for(int i = 0; i < spec.n; ++i)
                if(rng.uniform(0.0, 1.0) < spec.edge_prob) in.push_back({Source::spin(i), rng.normal(0.0, spec.weight_scale)});
        for(const auto &m : made)
            if(rng.uniform(0.0, 1.0) < spec.edge_prob) in.push_back({Source::node(m.id), rng.normal(0.0, spec.weight_scale)});
        return in;
    };
    for(int slot = 0; slot < total; ++slot) {
        auto         in   = random_inputs(true);
        const double bias = rng.normal(0.0, spec.weight_scale);
        if(is_nonlinear[static_cast<std::size_t>(slot)]) {
            const auto  id   = kinds[rng.uniform_index(kinds.size())];
            const auto  mode = modes[rng.uniform_index(modes.size())];
            Activation  act  = id == ActivationId::poly ? Activation::polynomial({0.1, 0.5, 0.3}, mode)
                              : id == ActivationId::softplus ? Activation::softplus(1.5, mode)
                                                             : Activation(id, mode);
            made.push_back({gb.nonlinear(std::move(act), std::move(in), bias), true});
        } else {
            made.push_back({gb.linear(std::move(in), bias), false});
        }
    }
    std::vector<Edge> out;
    for(const auto &m : made)
        if(rng.uniform(0.0, 1.0) < 0.7) {
            const double re = rng.normal(0.0, 1.0);
            out.push_back({Source::node(m.id), m.nonlinear ? cplx{re, rng.normal(0.0, 1.0)} : cplx{re, 0.0}});
        }
    for(int i = 0; i < spec.n; ++i)
        if(rng.uniform(0.0, 1.0) < 0.3) out.push_back({Source::spin(i), rng.normal(0.0, 0.3)});
    gb.output(std::move(out), {rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)});
    return std::move(gb).build();
}

// ---------------------------------------------------------------- specs as JSON

using AnsatzSpec = std::variant<SnnqsSpec, MlpSpec, TransformerSpec, CosnetSpec, DickeSpec>;

[[nodiscard]] inline std::string family_name(const AnsatzSpec &spec) {
    static constexpr std::array<const char *, 5> names{"snnqs", "mlp", "transformer", "cosnet", "dicke"};
    return names[spec.index()];
}

[[nodiscard]] inline int spec_n(const AnsatzSpec &spec) {
    return std::visit([](const auto &s) { return s.n; }, spec);
}

inline void set_spec_n(AnsatzSpec &spec, int n) {
    std::visit([n](auto &s) { s.n = n; }, spec);
}

[[nodiscard]] inline ComputationGraph build_ansatz(const AnsatzSpec &spec, RngStream &rng) {
    return std::visit(
        [&](const auto &s) -> ComputationGraph {
            using T = std::decay_t<decltype(s)>;
            if constexpr(std::is_same_v<T, SnnqsSpec>) return build_snnqs(s, rng);
            else if constexpr(std::is_same_v<T, MlpSpec>) return build_mlp(s, rng);
            else if constexpr(std::is_same_v<T, TransformerSpec>) return build_transformer(s, rng);
            else if constexpr(std::is_same_v<T, CosnetSpec>) return build_cosnet(s, rng);
            else return build_dicke(s);
        },
        spec);
}

namespace detail {

inline Activation activation_from_block(const json &j, Activation fallback) {
    if(!j.contains("activation")) return fallback;
    Activation act(function_from_json(j, "activation", ""));
    if(j.contains("complex_mode")) act.mode = complex_mode_from_string(j.at("complex_mode").get<std::string>());
    if(act.mode == ComplexMode::pair) act.secondary = function_from_json(j, "activation_imag", "_imag");
    return act;
}

inline void activation_to_block(json &j, const Activation &act) {
    function_to_json(j, act.primary, "activation", "");
    j["complex_mode"] = std::string(to_string(act.mode));
    if(act.mode == ComplexMode::pair) function_to_json(j, act.secondary, "activation_imag", "_imag");
}

inline OutputMode output_mode_from_string(const std::string &s) {
    if(s == "amplitude") return OutputMode::amplitude;
    if(s == "log_amplitude") return OutputMode::log_amplitude;
    fail(Errc::parse, "unknown output mode " + s);
}

inline std::string output_mode_name(OutputMode m) { return m == OutputMode::amplitude ? "amplitude" : "log_amplitude"; }

template<class T>
void read_opt(const json &j, const char *key, T &dst) {
    if(j.contains(key)) dst = j.at(key).get<T>();
}

} // namespace detail

/// Ansatz block: {"family": "snnqs"|"mlp"|"transformer"|"cosnet"|"dicke", ...}.
/// Every field has a default; unknown fields are rejected.
[[nodiscard]] inline AnsatzSpec ansatz_from_json(const json &j) {
    try {
        const auto family = j.at("family").get<std::string>();
        const std::initializer_list<std::string_view> act_keys{"activation", "complex_mode", "beta", "coeffs", "activation_imag", "beta_imag", "coeffs_imag"};
        auto allowed = [&](std::initializer_list<std::string_view> own, bool with_act) {
            std::vector<std::string_view> keys{"family", "n"};
            keys.insert(keys.end(), own.begin(), own.end());
            if(with_act) keys.insert(keys.end(), act_keys.begin(), act_keys.end());
            for(const auto &[key, _] : j.items())
                require(std::find(keys.begin(), keys.end(), key) != keys.end(), Errc::parse, "unknown " + family + " field \"" + key + "\"");
        };
        if(family == "snnqs") {
            allowed({"parameterization", "weight_std", "bias_std"}, true);
            SnnqsSpec s;
            detail::read_opt(j, "n", s.n);
            s.activation = detail::activation_from_block(j, s.activation);
            if(j.contains("parameterization")) {
                const auto p = j.at("parameterization").get<std::string>();
                require(p == "wrap_exp" || p == "direct", Errc::parse, "parameterization must be wrap_exp or direct");
                s.parameterization = p == "wrap_exp" ? SnParameterization::wrap_exp : SnParameterization::direct;
            }
            detail::read_opt(j, "weight_std", s.weight_std);
            detail::read_opt(j, "bias_std", s.bias_std);
            return s;
        }
        if(family == "mlp") {
            allowed({"width", "depth", "sigma_w", "sigma_b", "layernorm", "ln_eps", "heads", "output_mode"}, true);
            MlpSpec s;
            detail::read_opt(j, "n", s.n);
            s.activation = detail::activation_from_block(j, s.activation);
            detail::read_opt(j, "width", s.width);
            detail::read_opt(j, "depth", s.depth);
            detail::read_opt(j, "sigma_w", s.sigma_w);
            detail::read_opt(j, "sigma_b", s.sigma_b);
            detail::read_opt(j, "layernorm", s.layernorm);
            detail::read_opt(j, "ln_eps", s.ln_eps);
            if(j.contains("heads")) {
                const auto h = j.at("heads").get<std::string>();
                require(h == "all_ones" || h == "random", Errc::parse, "heads must be all_ones or random");
                s.heads = h == "all_ones" ? HeadInit::all_ones : HeadInit::random;
            }
            if(j.contains("output_mode")) s.output = detail::output_mode_from_string(j.at("output_mode").get<std::string>());
            return s;
        }
        if(family == "transformer") {
            allowed({"patch", "stride", "embed_dim", "heads", "layers", "ffn_width", "sigma_w", "sigma_b", "frozen", "frozen_seed", "output_mode"}, true);
            TransformerSpec s;
            detail::read_opt(j, "n", s.n);
            s.activation = detail::activation_from_block(j, s.activation);
            detail::read_opt(j, "patch", s.patch);
            detail::read_opt(j, "stride", s.stride);
            detail::read_opt(j, "embed_dim", s.embed_dim);
            detail::read_opt(j, "heads", s.heads);
            detail::read_opt(j, "layers", s.layers);
            detail::read_opt(j, "ffn_width", s.ffn_width);
            detail::read_opt(j, "sigma_w", s.sigma_w);
            detail::read_opt(j, "sigma_b", s.sigma_b);
            detail::read_opt(j, "frozen", s.frozen);
            detail::read_opt(j, "frozen_seed", s.frozen_seed);
            if(j.contains("output_mode")) s.output = detail::output_mode_from_string(j.at("output_mode").get<std::string>());
            return s;
        }
        if(family == "cosnet") {
            allowed({"k", "sigma_a", "sigma_w", "scale_weights_by_n"}, false);
            CosnetSpec s;
            detail::read_opt(j, "n", s.n);
            detail::read_opt(j, "k", s.k);
            detail::read_opt(j, "sigma_a", s.sigma_a);
            detail::read_opt(j, "sigma_w", s.sigma_w);
            detail::read_opt(j, "scale_weights_by_n", s.scale_weights_by_n);
            return s;
        }
        if(family == "dicke") {
            allowed({}, false);
            DickeSpec s;
            detail::read_opt(j, "n", s.n);
            return s;
        }
        fail(Errc::parse, "unknown ansatz family " + family);
    } catch(const json::exception &e) { fail(Errc::parse, std::string("malformed ansatz block: ") + e.what()); }
}

/// Fully resolved spec (every default written out).
[[nodiscard]] inline json ansatz_to_json(const AnsatzSpec &spec) {
    json j;
    j["family"] = family_name(spec);
    std::visit(
        [&](const auto &s) {
            using T = std::decay_t<decltype(s)>;
            j["n"]  = s.n;
            if constexpr(std::is_same_v<T, SnnqsSpec>) {
                detail::activation_to_block(j, s.activation);
                j["parameterization"] = s.parameterization == SnParameterization::wrap_exp ? "wrap_exp" : "direct";
                j["weight_std"]       = s.weight_std;
                j["bias_std"]         = s.bias_std;
            } else if constexpr(std::is_same_v<T, MlpSpec>) {
                detail::activation_to_block(j, s.activation);
                j["width"]       = s.width;
                j["depth"]       = s.depth;
                j["sigma_w"]     = s.sigma_w;
                j["sigma_b"]     = s.sigma_b;
                j["layernorm"]   = s.layernorm;
                j["ln_eps"]      = s.ln_eps;
                j["heads"]       = s.heads == HeadInit::all_ones ? "all_ones" : "random";
                j["output_mode"] = detail::output_mode_name(s.output);
            } else if constexpr(std::is_same_v<T, TransformerSpec>) {
                detail::activation_to_block(j, s.activation);
                j["patch"]       = s.patch;
                j["stride"]      = s.stride;
                j["embed_dim"]   = s.embed_dim;
                j["heads"]       = s.heads;
                j["layers"]      = s.layers;
                j["ffn_width"]   = s.ffn_width;
                j["sigma_w"]     = s.sigma_w;
                j["sigma_b"]     = s.sigma_b;
                j["frozen"]      = s.frozen;
                j["frozen_seed"] = s.frozen_seed;
                j["output_mode"] = detail::output_mode_name(s.output);
            } else if constexpr(std::is_same_v<T, CosnetSpec>) {
                j["k"]                  = s.k;
                j["sigma_a"]            = s.sigma_a;
                j["sigma_w"]            = s.sigma_w;
                j["scale_weights_by_n"] = s.scale_weights_by_n;
            }
        },
        spec);
    return j;
}

} // namespace nqs
