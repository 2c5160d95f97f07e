// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nqs/activations.hpp"
#include "nqs/core.hpp"
#include "nqs/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace nqs {

enum class NodeKind { input, linear, nonlinear, output };
enum class OutputMode { amplitude, log_amplitude };

[[nodiscard]] inline std::string_view to_string(NodeKind k) {
    switch(k) {
        case NodeKind::input: return "input";
        case NodeKind::linear: return "linear";
        case NodeKind::nonlinear: return "nonlinear";
        case NodeKind::output: return "output";
    }
    return "?";
}

/// Edge source: another node (by id) or a raw spin s_i.
struct Source {
    enum class Kind { node, spin };
    Kind kind  = Kind::node;
    int  index = 0;

    static Source node(int id) { return {Kind::node, id}; }
    static Source spin(int i) { return {Kind::spin, i}; }
    friend bool operator==(const Source &, const Source &) = default;
};

struct Edge {
    Source from{};
    cplx   weight{1.0, 0.0};
};

/// One vertex of the network. Linear and nonlinear nodes carry real
/// coefficients; only the output node may use complex ones (e.g. a head
/// w_R^T h + i w_I^T h).
struct Node {
    int                       id   = 0;
    NodeKind                  kind = NodeKind::linear;
    int                       input_index = -1;
    std::optional<Activation> activation{};
    std::vector<Edge>         inputs{};
    cplx                      bias{0.0, 0.0};
    OutputMode                output_mode = OutputMode::amplitude;

    static Node input(int id, int index) {
        Node n;
        n.id          = id;
        n.kind        = NodeKind::input;
        n.input_index = index;
        return n;
    }
    static Node linear(int id, std::vector<Edge> in, double bias = 0.0) {
        Node n;
        n.id     = id;
        n.kind   = NodeKind::linear;
        n.inputs = std::move(in);
        n.bias   = bias;
        return n;
    }
    static Node nonlinear(int id, Activation act, std::vector<Edge> in, double bias = 0.0) {
        Node n;
        n.id         = id;
        n.kind       = NodeKind::nonlinear;
        n.activation = std::move(act);
        n.inputs     = std::move(in);
        n.bias       = bias;
        return n;
    }
    static Node output(int id, std::vector<Edge> in, cplx bias = {}, OutputMode mode = OutputMode::amplitude) {
        Node n;
        n.id          = id;
        n.kind        = NodeKind::output;
        n.inputs      = std::move(in);
        n.bias        = bias;
        n.output_mode = mode;
        return n;
    }
};

/// Topological order (as positions into `nodes`) by Kahn's algorithm, breaking
/// ties by the lowest node id. Throws Errc::acyclicity naming one cycle.
[[nodiscard]] inline std::vector<int> validate_and_sort(const std::vector<Node> &nodes) {
    std::unordered_map<int, int> pos_of;
    for(int p = 0; p < static_cast<int>(nodes.size()); ++p) {
        auto [it, fresh] = pos_of.emplace(nodes[static_cast<std::size_t>(p)].id, p);
        require(fresh, Errc::contract, "duplicate node id " + std::to_string(nodes[static_cast<std::size_t>(p)].id));
    }
    const auto                    count = nodes.size();
    std::vector<int>              indegree(count, 0);
    std::vector<std::vector<int>> successors(count);
    std::vector<std::vector<int>> predecessors(count);
    for(std::size_t p = 0; p < count; ++p) {
        for(const auto &e : nodes[p].inputs) {
            if(e.from.kind != Source::Kind::node) continue;
            auto it = pos_of.find(e.from.index);
            require(it != pos_of.end(), Errc::contract,
                    "node " + std::to_string(nodes[p].id) + " reads unknown node " + std::to_string(e.from.index));
            successors[static_cast<std::size_t>(it->second)].push_back(static_cast<int>(p));
            predecessors[p].push_back(it->second);
            ++indegree[p];
        }
    }
    auto id_of   = [&](int p) { return nodes[static_cast<std::size_t>(p)].id; };
    auto greater = [&](int a, int b) { return id_of(a) > id_of(b); };
    std::priority_queue<int, std::vector<int>, decltype(greater)> ready(greater);
    for(std::size_t p = 0; p < count; ++p)
        if(indegree[p] == 0) ready.push(static_cast<int>(p));
    std::vector<int> order;
    order.reserve(count);
    while(!ready.empty()) {
        int p = ready.top();
        ready.pop();
        order.push_back(p);
        for(int q : successors[static_cast<std::size_t>(p)])
            if(--indegree[static_cast<std::size_t>(q)] == 0) ready.push(q);
    }
    if(order.size() == count) return order;

    // Every unsorted node still has an unsorted predecessor, so walking
    // predecessors from any of them must revisit a node.
    int start = -1;
    for(std::size_t p = 0; p < count; ++p)
        if(indegree[p] > 0 && (start < 0 || id_of(static_cast<int>(p)) < id_of(start))) start = static_cast<int>(p);
    std::vector<int>         walk;
    std::unordered_map<int, std::size_t> seen;
    int                      cur = start;
    while(!seen.contains(cur)) {
        seen[cur] = walk.size();
        walk.push_back(cur);
        int next = -1;
        for(int q : predecessors[static_cast<std::size_t>(cur)])
            if(indegree[static_cast<std::size_t>(q)] > 0 && (next < 0 || id_of(q) < id_of(next))) next = q;
        cur = next;
    }
    std::vector<int> cycle(walk.begin() + static_cast<std::ptrdiff_t>(seen[cur]), walk.end());
    std::reverse(cycle.begin(), cycle.end());
    std::string text;
    for(int p : cycle) text += std::to_string(id_of(p)) + " -> ";
    text += std::to_string(id_of(cycle.front()));
    fail(Errc::acyclicity, "graph contains a directed cycle: " + text);
}

/// Validated, immutable feed-forward network over n inputs.
class ComputationGraph {
  public:
    ComputationGraph() = default;

    static ComputationGraph create(int n, std::vector<Node> nodes) {
        ComputationGraph g;
        g.n_     = n;
        g.nodes_ = std::move(nodes);
        g.validate();
        g.compile();
        return g;
    }

    [[nodiscard]] int                      n() const noexcept { return n_; }
    [[nodiscard]] int                      k() const noexcept { return k_; }
    [[nodiscard]] const std::vector<Node> &nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::vector<int>  &order() const noexcept { return order_; }
    [[nodiscard]] int                      output_position() const noexcept { return output_pos_; }
    [[nodiscard]] const Node              &output() const { return nodes_[static_cast<std::size_t>(output_pos_)]; }
    [[nodiscard]] int                      position_of(int id) const { return pos_of_.at(id); }
    [[nodiscard]] const Node              &node(int id) const { return nodes_[static_cast<std::size_t>(position_of(id))]; }

    /// Ids of nodes that cannot influence the output.
    [[nodiscard]] std::vector<int> dead_nodes() const {
        std::vector<int> out;
        for(std::size_t p = 0; p < nodes_.size(); ++p)
            if(!live_[p]) out.push_back(nodes_[p].id);
        std::sort(out.begin(), out.end());
        return out;
    }
    [[nodiscard]] bool is_live_position(int p) const { return live_[static_cast<std::size_t>(p)]; }

    /// Non-input nodes that have no path from any input (constants).
    [[nodiscard]] std::vector<int> constant_nodes() const {
        std::vector<char> reached(nodes_.size(), 0);
        for(int p : order_) {
            const auto &nd = nodes_[static_cast<std::size_t>(p)];
            bool        r  = nd.kind == NodeKind::input;
            for(const auto &e : nd.inputs)
                r = r || e.from.kind == Source::Kind::spin || reached[static_cast<std::size_t>(pos_of_.at(e.from.index))];
            reached[static_cast<std::size_t>(p)] = r;
        }
        std::vector<int> out;
        for(std::size_t p = 0; p < nodes_.size(); ++p)
            if(!reached[p]) out.push_back(nodes_[p].id);
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Flattened forward program in topological order.
    struct Term {
        std::int32_t slot; // >= 0: topological slot of a node, < 0: spin -(slot+1)
        cplx         weight;
    };
    struct Step {
        NodeKind          kind;
        const Activation *activation;
        cplx              bias;
        std::uint32_t     begin, end;
        int               input_index;
        int               position;
    };
    [[nodiscard]] const std::vector<Step> &steps() const noexcept { return steps_; }
    [[nodiscard]] const std::vector<Term> &terms() const noexcept { return terms_; }

  private:
    void validate() {
        require(n_ >= 0 && n_ <= 63, Errc::contract, "graph input count out of range");
        int outputs = 0;
        for(const auto &nd : nodes_) {
            const std::string who = "node " + std::to_string(nd.id);
            switch(nd.kind) {
                case NodeKind::input:
                    require(nd.inputs.empty(), Errc::contract, who + ": input nodes take no predecessors");
                    require(nd.input_index >= 0 && nd.input_index < n_, Errc::contract, who + ": input index out of range");
                    break;
                case NodeKind::nonlinear:
                    require(nd.activation.has_value(), Errc::contract, who + ": nonlinear node without activation");
                    [[fallthrough]];
                case NodeKind::linear:
                    require(nd.bias.imag() == 0.0, Errc::contract, who + ": only the output node may have a complex bias");
                    for(const auto &e : nd.inputs)
                        require(e.weight.imag() == 0.0, Errc::contract, who + ": only the output node may have complex weights");
                    break;
                case NodeKind::output: ++outputs; break;
            }
            for(const auto &e : nd.inputs)
                if(e.from.kind == Source::Kind::spin)
                    require(e.from.index >= 0 && e.from.index < n_, Errc::contract, who + ": spin reference out of range");
        }
        require(outputs == 1, Errc::contract, "graph must have exactly one output node, found " + std::to_string(outputs));
        order_ = validate_and_sort(nodes_);
        pos_of_.clear();
        for(int p = 0; p < static_cast<int>(nodes_.size()); ++p) pos_of_[nodes_[static_cast<std::size_t>(p)].id] = p;
        k_ = 0;
        for(const auto &nd : nodes_) {
            if(nd.kind == NodeKind::nonlinear) ++k_;
            if(nd.kind == NodeKind::output) output_pos_ = pos_of_[nd.id];
            for(const auto &e : nd.inputs)
                if(e.from.kind == Source::Kind::node)
                    require(node(e.from.index).kind != NodeKind::output, Errc::contract, "the output node cannot feed other nodes");
        }
        live_.assign(nodes_.size(), 0);
        live_[static_cast<std::size_t>(output_pos_)] = 1;
        for(auto it = order_.rbegin(); it != order_.rend(); ++it) {
            if(!live_[static_cast<std::size_t>(*it)]) continue;
            for(const auto &e : nodes_[static_cast<std::size_t>(*it)].inputs)
                if(e.from.kind == Source::Kind::node) live_[static_cast<std::size_t>(pos_of_[e.from.index])] = 1;
        }
    }

    void compile() {
        std::vector<int> slot_of(nodes_.size(), -1);
        for(int s = 0; s < static_cast<int>(order_.size()); ++s) slot_of[static_cast<std::size_t>(order_[static_cast<std::size_t>(s)])] = s;
        steps_.clear();
        terms_.clear();
        for(int p : order_) {
            const auto &nd = nodes_[static_cast<std::size_t>(p)];
            Step        st{nd.kind, nd.activation ? &*nd.activation : nullptr, nd.bias, static_cast<std::uint32_t>(terms_.size()), 0,
                           nd.input_index, p};
            for(const auto &e : nd.inputs) {
                std::int32_t slot = e.from.kind == Source::Kind::spin ? -(e.from.index + 1) : slot_of[static_cast<std::size_t>(pos_of_[e.from.index])];
                terms_.push_back({slot, e.weight});
            }
            st.end = static_cast<std::uint32_t>(terms_.size());
            steps_.push_back(st);
        }
    }

    int                          n_ = 0;
    int                          k_ = 0;
    int                          output_pos_ = -1;
    std::vector<Node>            nodes_;
    std::vector<int>             order_;
    std::unordered_map<int, int> pos_of_;
    std::vector<char>            live_;
    std::vector<Step>            steps_;
    std::vector<Term>            terms_;
};

inline constexpr double kLogAmplitudeLimit = 700.0;

/// Reusable forward-pass evaluator (one per thread). The optional observer is
/// called with (topological position, activation, pre-activation) before each
/// nonlinearity is applied.
class GraphEvaluator {
  public:
    explicit GraphEvaluator(const ComputationGraph &g) : g_(&g), values_(g.steps().size()) {}

    template<class Scalar, class Observer>
    cplx run(std::span<const Scalar> x, Observer &&observe) {
        const auto &steps = g_->steps();
        const auto &terms = g_->terms();
        for(std::size_t s = 0; s < steps.size(); ++s) {
            const auto &st = steps[s];
            if(st.kind == NodeKind::input) {
                values_[s] = cplx(x[static_cast<std::size_t>(st.input_index)]);
                continue;
            }
            cplx acc = st.bias;
            for(auto t = st.begin; t < st.end; ++t) {
                const auto &term = terms[t];
                const cplx  v    = term.slot >= 0 ? values_[static_cast<std::size_t>(term.slot)]
                                                  : cplx(x[static_cast<std::size_t>(-term.slot - 1)]);
                acc += term.weight * v;
            }
            if(st.kind == NodeKind::nonlinear) {
                observe(st.position, *st.activation, acc);
                acc = apply(*st.activation, acc);
            }
            values_[s] = acc;
        }
        const cplx out = values_[static_cast<std::size_t>(index_of_output())];
        if(g_->output().output_mode == OutputMode::log_amplitude) {
            require(out.real() <= kLogAmplitudeLimit, Errc::amplitude_overflow,
                    "log-amplitude real part " + std::to_string(out.real()) + " exceeds " + std::to_string(kLogAmplitudeLimit));
            return std::exp(out);
        }
        return out;
    }

    template<class Scalar>
    cplx operator()(std::span<const Scalar> x) {
        return run(x, [](int, const Activation &, cplx) {});
    }
    cplx operator()(const std::vector<double> &x) { return (*this)(std::span<const double>(x)); }

    cplx operator()(const SpinConfig &s) {
        spins_.resize(static_cast<std::size_t>(s.n));
        for(int i = 0; i < s.n; ++i) spins_[static_cast<std::size_t>(i)] = s.value(i);
        return (*this)(std::span<const double>(spins_));
    }

    /// Values of every node from the last run, indexed by topological slot.
    [[nodiscard]] const std::vector<cplx> &values() const noexcept { return values_; }

  private:
    std::size_t index_of_output() const {
        const auto &steps = g_->steps();
        for(std::size_t s = steps.size(); s-- > 0;)
            if(steps[s].kind == NodeKind::output) return s;
        return 0;
    }
    const ComputationGraph *g_;
    std::vector<cplx>       values_;
    std::vector<double>     spins_;
};

/// Psi(s) by a forward pass in topological order; log-amplitude outputs are
/// exponentiated.
[[nodiscard]] inline cplx eval_full(const ComputationGraph &g, const SpinConfig &s) {
    require(s.n == g.n(), Errc::contract, "configuration size does not match graph inputs");
    GraphEvaluator ev(g);
    return ev(s);
}

/// Copy of g without nodes that cannot reach the output.
[[nodiscard]] inline ComputationGraph eliminate_dead(const ComputationGraph &g) {
    std::vector<Node> kept;
    for(std::size_t p = 0; p < g.nodes().size(); ++p)
        if(g.is_live_position(static_cast<int>(p))) kept.push_back(g.nodes()[p]);
    return ComputationGraph::create(g.n(), std::move(kept));
}

/// Psi(s) = G(t_1(s), ..., t_mu(s)). `residual` is the original network with
/// its spin inputs replaced by mu feature ports (input nodes 0..mu-1).
struct ReducedForm {
    int                        n  = 0;
    int                        k  = 0;
    int                        mu = 0;
    std::vector<AffineFeature> features;
    ComputationGraph           residual;

    [[nodiscard]] std::vector<double> feature_values(const SpinConfig &s) const {
        std::vector<double> t(features.size());
        for(std::size_t i = 0; i < features.size(); ++i) t[i] = features[i].evaluate(s);
        return t;
    }
};

inline constexpr double kFeatureDependenceTol = 1e-10;

namespace detail {

struct DirectPart {
    std::vector<double> u;
    double              c = 0.0;
};

struct FeatureBasis {
    std::vector<int>                 retained;  // row indices
    std::vector<std::vector<double>> alpha;     // per row: coefficients on retained rows
    std::vector<double>              beta;      // per row: constant offset
};

/// Selects linearly independent weight vectors by column-pivoted QR with a
/// relative rank tolerance, then solves for coefficients expressing every row
/// through the retained ones. Pivoting keeps the retained set well conditioned.
/// Constant offsets are absorbed into beta, so rows with u = 0 are constants.
inline FeatureBasis select_features(const std::vector<DirectPart> &rows, int n) {
    FeatureBasis    fb;
    const int       m = static_cast<int>(rows.size());
    Eigen::MatrixXd W(n, m);
    for(int r = 0; r < m; ++r) W.col(r) = Eigen::Map<const Eigen::VectorXd>(rows[static_cast<std::size_t>(r)].u.data(), n);
    if(n > 0 && m > 0 && W.cwiseAbs().maxCoeff() > 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> piv(W);
        piv.setThreshold(kFeatureDependenceTol);
        const auto rank = piv.rank();
        for(Eigen::Index j = 0; j < rank; ++j) fb.retained.push_back(piv.colsPermutation().indices()(j));
        std::sort(fb.retained.begin(), fb.retained.end());
    }
    const int       mu = static_cast<int>(fb.retained.size());
    Eigen::MatrixXd U(n, mu);
    for(int j = 0; j < mu; ++j)
        U.col(j) = Eigen::Map<const Eigen::VectorXd>(rows[static_cast<std::size_t>(fb.retained[static_cast<std::size_t>(j)])].u.data(), n);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
    if(mu > 0) qr.compute(U);
    fb.alpha.resize(rows.size());
    fb.beta.resize(rows.size());
    for(std::size_t r = 0; r < rows.size(); ++r) {
        std::vector<double> a(static_cast<std::size_t>(mu), 0.0);
        auto                hit = std::find(fb.retained.begin(), fb.retained.end(), static_cast<int>(r));
        if(hit != fb.retained.end()) {
            a[static_cast<std::size_t>(hit - fb.retained.begin())] = 1.0;
            fb.alpha[r]                                           = a;
            fb.beta[r]                                            = 0.0;
            continue;
        }
        Eigen::Map<const Eigen::VectorXd> u(rows[r].u.data(), n);
        double                            beta = rows[r].c;
        if(mu > 0 && u.norm() > 0.0) {
            Eigen::VectorXd sol = qr.solve(u);
            for(int j = 0; j < mu; ++j) {
                double v = sol(j);
                if(std::abs(v) <= 1e-14 * (1.0 + sol.cwiseAbs().maxCoeff())) v = 0.0;
                a[static_cast<std::size_t>(j)] = v;
                beta -= v * rows[static_cast<std::size_t>(fb.retained[static_cast<std::size_t>(j)])].c;
            }
        }
        fb.alpha[r] = std::move(a);
        fb.beta[r]  = beta;
    }
    return fb;
}

} // namespace detail

/// Rewrites Psi as G(t_1..t_mu) over at most k+1 independent affine features
/// (k+2 if the output's direct affine term has linearly independent real and
/// imaginary weight vectors). Each nonlinearity contributes the affine part of
/// its pre-activation that reads the spins directly; the output contributes its
/// own direct part.
[[nodiscard]] inline ReducedForm feature_reduce(const ComputationGraph &g) {
    const int   n     = g.n();
    const auto &nodes = g.nodes();
    const auto  count = nodes.size();

    // Direct affine-in-s part of each node's value (linear/input nodes) and of
    // each nonlinear node's pre-activation.
    std::vector<detail::DirectPart> value_part(count, {std::vector<double>(static_cast<std::size_t>(n), 0.0), 0.0});
    std::vector<detail::DirectPart> pre_part(count, {std::vector<double>(static_cast<std::size_t>(n), 0.0), 0.0});
    detail::DirectPart              out_re{std::vector<double>(static_cast<std::size_t>(n), 0.0), 0.0};
    detail::DirectPart              out_im{std::vector<double>(static_cast<std::size_t>(n), 0.0), 0.0};

    for(int p : g.order()) {
        const auto &nd = nodes[static_cast<std::size_t>(p)];
        if(nd.kind == NodeKind::input) {
            value_part[static_cast<std::size_t>(p)].u[static_cast<std::size_t>(nd.input_index)] = 1.0;
            continue;
        }
        std::vector<cplx> u(static_cast<std::size_t>(n), cplx{});
        cplx              c = nd.bias;
        for(const auto &e : nd.inputs) {
            if(e.from.kind == Source::Kind::spin) {
                u[static_cast<std::size_t>(e.from.index)] += e.weight;
                continue;
            }
            const int   q    = g.position_of(e.from.index);
            const auto &pred = nodes[static_cast<std::size_t>(q)];
            if(pred.kind == NodeKind::nonlinear) continue;
            const auto &vp = value_part[static_cast<std::size_t>(q)];
            for(int i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] += e.weight * vp.u[static_cast<std::size_t>(i)];
            c += e.weight * vp.c;
        }
        auto real_part = [&](bool imag) {
            detail::DirectPart d{std::vector<double>(static_cast<std::size_t>(n)), imag ? c.imag() : c.real()};
            for(int i = 0; i < n; ++i) d.u[static_cast<std::size_t>(i)] = imag ? u[static_cast<std::size_t>(i)].imag() : u[static_cast<std::size_t>(i)].real();
            return d;
        };
        switch(nd.kind) {
            case NodeKind::linear: value_part[static_cast<std::size_t>(p)] = real_part(false); break;
            case NodeKind::nonlinear: pre_part[static_cast<std::size_t>(p)] = real_part(false); break;
            case NodeKind::output:
                out_re = real_part(false);
                out_im = real_part(true);
                break;
            default: break;
        }
    }

    // Candidate rows: live nonlinearities in topological order, then the output.
    std::vector<detail::DirectPart> rows;
    std::vector<int>                row_of_position(count, -1);
    for(int p : g.order()) {
        const auto &nd = nodes[static_cast<std::size_t>(p)];
        if(nd.kind != NodeKind::nonlinear || !g.is_live_position(p)) continue;
        row_of_position[static_cast<std::size_t>(p)] = static_cast<int>(rows.size());
        rows.push_back(pre_part[static_cast<std::size_t>(p)]);
    }
    const int row_out_re = static_cast<int>(rows.size());
    rows.push_back(out_re);
    const int row_out_im = static_cast<int>(rows.size());
    rows.push_back(out_im);

    const auto basis = detail::select_features(rows, n);
    const int  mu    = static_cast<int>(basis.retained.size());

    ReducedForm rf;
    rf.n  = n;
    rf.k  = g.k();
    rf.mu = mu;
    for(int r : basis.retained) rf.features.push_back({rows[static_cast<std::size_t>(r)].u, rows[static_cast<std::size_t>(r)].c});

    // Residual graph: ports 0..mu-1, then live non-input nodes in topological
    // order, renumbered after the ports.
    std::vector<Node> out_nodes;
    for(int j = 0; j < mu; ++j) out_nodes.push_back(Node::input(j, j));
    std::vector<int> new_id(count, -1);
    int              next_id = mu;
    for(int p : g.order()) {
        const auto &nd = nodes[static_cast<std::size_t>(p)];
        if(nd.kind == NodeKind::input || !g.is_live_position(p)) continue;
        new_id[static_cast<std::size_t>(p)] = next_id++;
    }
    auto port_edges = [&](int row, cplx scale) {
        std::vector<Edge> edges;
        const auto       &a = basis.alpha[static_cast<std::size_t>(row)];
        for(int j = 0; j < mu; ++j)
            if(a[static_cast<std::size_t>(j)] != 0.0) edges.push_back({Source::node(j), scale * a[static_cast<std::size_t>(j)]});
        return edges;
    };
    for(int p : g.order()) {
        const auto &nd = nodes[static_cast<std::size_t>(p)];
        if(nd.kind == NodeKind::input || !g.is_live_position(p)) continue;
        Node copy;
        copy.id          = new_id[static_cast<std::size_t>(p)];
        copy.kind        = nd.kind;
        copy.activation  = nd.activation;
        copy.output_mode = nd.output_mode;
        for(const auto &e : nd.inputs) {
            if(e.from.kind == Source::Kind::spin) continue;
            const int q = g.position_of(e.from.index);
            if(nodes[static_cast<std::size_t>(q)].kind == NodeKind::input) continue;
            copy.inputs.push_back({Source::node(new_id[static_cast<std::size_t>(q)]), e.weight});
        }
        if(nd.kind == NodeKind::nonlinear) {
            const int row = row_of_position[static_cast<std::size_t>(p)];
            auto      pe  = port_edges(row, 1.0);
            copy.inputs.insert(copy.inputs.begin(), pe.begin(), pe.end());
            copy.bias = basis.beta[static_cast<std::size_t>(row)];
        } else if(nd.kind == NodeKind::output) {
            auto re = port_edges(row_out_re, 1.0);
            auto im = port_edges(row_out_im, cplx{0.0, 1.0});
            // Merge real and imaginary contributions per port.
            std::map<int, cplx> merged;
            for(const auto &e : re) merged[e.from.index] += e.weight;
            for(const auto &e : im) merged[e.from.index] += e.weight;
            std::vector<Edge> pe;
            for(auto [j, w] : merged) pe.push_back({Source::node(j), w});
            copy.inputs.insert(copy.inputs.begin(), pe.begin(), pe.end());
            copy.bias = cplx{basis.beta[static_cast<std::size_t>(row_out_re)], basis.beta[static_cast<std::size_t>(row_out_im)]};
        } else {
            copy.bias = 0.0;
        }
        out_nodes.push_back(std::move(copy));
    }
    rf.residual = ComputationGraph::create(mu, std::move(out_nodes));
    return rf;
}

/// G(t_1(s), ..., t_mu(s)).
[[nodiscard]] inline cplx eval_reduced(const ReducedForm &r, const SpinConfig &s) {
    require(s.n == r.n, Errc::contract, "configuration size does not match reduced form");
    GraphEvaluator ev(r.residual);
    const auto     t = r.feature_values(s);
    return ev(std::span<const double>(t));
}

/// Reusable evaluator for a reduced form (one per thread).
class ReducedEvaluator {
  public:
    explicit ReducedEvaluator(const ReducedForm &r) : r_(&r), ev_(r.residual), t_(r.features.size()), s_(static_cast<std::size_t>(r.n)) {}

    cplx operator()(const SpinConfig &s) {
        for(int i = 0; i < s.n; ++i) s_[static_cast<std::size_t>(i)] = s.value(i);
        for(std::size_t j = 0; j < t_.size(); ++j) t_[j] = r_->features[j].evaluate(std::span<const double>(s_));
        return ev_(std::span<const double>(t_));
    }
    cplx at_features(std::span<const double> t) { return ev_(t); }

  private:
    const ReducedForm  *r_;
    GraphEvaluator      ev_;
    std::vector<double> t_;
    std::vector<double> s_;
};

} // namespace nqs
