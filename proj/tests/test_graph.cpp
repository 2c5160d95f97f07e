// SPDX-License-Identifier: Apache-2.0

#include "nqs/ansatz.hpp"
#include "nqs/graph.hpp"
#include "nqs/graph_json.hpp"

#include <gtest/gtest.h>

#include <optional>

using namespace nqs;

namespace {

std::optional<Errc> code_of(auto &&fn) {
    try {
        fn();
    } catch(const Error &e) { return e.code(); }
    return std::nullopt;
}

ComputationGraph two_spin_tanh() {
    // Psi(s) = tanh(s0 + 2 s1 + 0.5) + 0.3 s0
    return ComputationGraph::create(2, {Node::nonlinear(1, ActivationId::tanh, {{Source::spin(0), 1.0}, {Source::spin(1), 2.0}}, 0.5),
                                        Node::output(2, {{Source::node(1), 1.0}, {Source::spin(0), 0.3}})});
}

} // namespace

TEST(Graph, EvaluatesForwardPass) {
    const auto g = two_spin_tanh();
    for(const auto &s : enumerate_configs(2)) {
        const double want = std::tanh(s.value(0) + 2.0 * s.value(1) + 0.5) + 0.3 * s.value(0);
        EXPECT_NEAR(eval_full(g, s).real(), want, 1e-15);
        EXPECT_EQ(eval_full(g, s).imag(), 0.0);
    }
    EXPECT_EQ(g.k(), 1);
}

TEST(Graph, TopologicalOrderBreaksTiesByLowestId) {
    const auto g = ComputationGraph::create(1, {Node::output(9, {{Source::node(5), 1.0}, {Source::node(3), 1.0}}),
                                                Node::linear(5, {{Source::spin(0), 1.0}}), Node::linear(3, {{Source::spin(0), 1.0}})});
    std::vector<int> ids;
    for(int p : g.order()) ids.push_back(g.nodes()[static_cast<std::size_t>(p)].id);
    EXPECT_EQ(ids, (std::vector<int>{3, 5, 9}));
}

TEST(Graph, CycleIsReportedWithItsNodes) {
    try {
        (void)ComputationGraph::create(1, {Node::linear(1, {{Source::node(2), 1.0}}), Node::linear(2, {{Source::node(1), 1.0}}),
                                           Node::output(3, {{Source::node(2), 1.0}})});
        FAIL() << "cycle accepted";
    } catch(const Error &e) {
        EXPECT_EQ(e.code(), Errc::acyclicity);
        EXPECT_NE(std::string(e.what()).find("1 -> 2"), std::string::npos) << e.what();
    }
}

TEST(Graph, ContractViolations) {
    EXPECT_EQ(code_of([] { (void)ComputationGraph::create(1, {Node::linear(1, {{Source::spin(0), 1.0}})}); }), Errc::contract);
    EXPECT_EQ(code_of([] { (void)ComputationGraph::create(1, {Node::output(1, {{Source::spin(3), 1.0}})}); }), Errc::contract);
    EXPECT_EQ(code_of([] {
                  (void)ComputationGraph::create(1, {Node::linear(1, {{Source::spin(0), cplx{0.0, 1.0}}}), Node::output(2, {{Source::node(1), 1.0}})});
              }),
              Errc::contract);
}

TEST(Graph, DeadNodesDoNotCount) {
    const auto g = ComputationGraph::create(1, {Node::nonlinear(1, ActivationId::tanh, {{Source::spin(0), 1.0}}),
                                                Node::nonlinear(2, ActivationId::sin, {{Source::spin(0), 1.0}}),
                                                Node::output(3, {{Source::node(1), 1.0}})});
    EXPECT_EQ(g.dead_nodes(), (std::vector<int>{2}));
    const auto r = feature_reduce(g);
    EXPECT_EQ(r.mu, 1);
    EXPECT_EQ(eliminate_dead(g).nodes().size(), 2u);
}

TEST(Graph, LogAmplitudeOverflowIsReported) {
    const auto g = ComputationGraph::create(1, {Node::output(1, {{Source::spin(0), 800.0}}, {}, OutputMode::log_amplitude)});
    EXPECT_EQ(code_of([&] { (void)eval_full(g, SpinConfig{1, 1}); }), Errc::amplitude_overflow);
    EXPECT_NEAR(std::abs(eval_full(g, SpinConfig{0, 1})), 0.0, 1e-300);
}

TEST(FeatureReduction, SharedPreactivationsCollapse) {
    // Three nonlinearities reading the same direction s0 + s1 give mu = 1.
    auto e = [](double w) { return std::vector<Edge>{{Source::spin(0), w}, {Source::spin(1), w}}; };
    const auto g = ComputationGraph::create(
        3, {Node::nonlinear(1, ActivationId::tanh, e(1.0), 0.1), Node::nonlinear(2, ActivationId::sin, e(2.0), -0.3),
            Node::nonlinear(3, ActivationId::cos, e(-0.5)), Node::output(4, {{Source::node(1), 1.0}, {Source::node(2), 1.0}, {Source::node(3), 1.0}})});
    const auto r = feature_reduce(g);
    EXPECT_EQ(r.mu, 1);
    for(const auto &s : enumerate_configs(3)) EXPECT_NEAR(std::abs(eval_reduced(r, s) - eval_full(g, s)), 0.0, 1e-14);
}

TEST(FeatureReduction, ConstantNetworkHasNoFeatures) {
    const auto g = ComputationGraph::create(3, {Node::nonlinear(1, ActivationId::tanh, {}, 0.4), Node::output(2, {{Source::node(1), 2.0}}, 0.5)});
    const auto r = feature_reduce(g);
    EXPECT_EQ(r.mu, 0);
    for(const auto &s : enumerate_configs(3)) EXPECT_NEAR(std::abs(eval_reduced(r, s) - eval_full(g, s)), 0.0, 1e-15);
}

TEST(FeatureReduction, LinearNodesFoldIntoFeatures) {
    // h = tanh(L), L = s0 - s1 (linear), output = h + L + 2 s2.
    const auto g = ComputationGraph::create(
        3, {Node::linear(1, {{Source::spin(0), 1.0}, {Source::spin(1), -1.0}}, 0.2), Node::nonlinear(2, ActivationId::tanh, {{Source::node(1), 1.0}}),
            Node::output(3, {{Source::node(2), 1.0}, {Source::node(1), 1.0}, {Source::spin(2), 2.0}})});
    const auto r = feature_reduce(g);
    EXPECT_LE(r.mu, g.k() + 1);
    for(const auto &s : enumerate_configs(3)) EXPECT_NEAR(std::abs(eval_reduced(r, s) - eval_full(g, s)), 0.0, 1e-14);
}

TEST(FeatureReduction, RandomDagsStayWithinBudget) {
    for(std::uint64_t trial = 0; trial < 40; ++trial) {
        RngStream     rng(11, trial);
        RandomDagSpec spec;
        spec.n       = 6;
        spec.k       = 1 + static_cast<int>(trial % 6);
        const auto g = build_random_dag(spec, rng);
        const auto r = feature_reduce(g);
        EXPECT_LE(r.mu, g.k() + 1);
        ReducedEvaluator re(r);
        GraphEvaluator   fe(g);
        for(const auto &s : enumerate_configs(g.n())) {
            const cplx a = fe(s), b = re(s);
            EXPECT_LE(std::abs(a - b), 1e-12 * std::max(std::abs(a), 1e-300)) << "trial " << trial;
        }
    }
}

TEST(GraphJson, RoundTripPreservesValues) {
    RngStream     rng(3, 4);
    RandomDagSpec spec;
    const auto    g  = build_random_dag(spec, rng);
    const auto    g2 = graph_from_json(json::parse(graph_to_json(g).dump()));
    for(const auto &s : enumerate_configs(g.n())) EXPECT_EQ(eval_full(g, s), eval_full(g2, s));
}

TEST(GraphJson, ParsesSpinSourcesAndComplexWeights) {
    const auto doc = json::parse(R"({"n": 2, "nodes": [
        {"id": 0, "kind": "nonlinear", "activation": "tanh", "inputs": [{"from": "s_0", "weight": 1.0}, {"from": "s_1", "weight": 0.5}], "bias": 0.1},
        {"id": 1, "kind": "output", "inputs": [{"from": 0, "weight": [0.0, 1.0]}], "bias": [1.0, 0.0]}]})");
    const auto g   = graph_from_json(doc);
    const auto v   = eval_full(g, SpinConfig{0b11, 2});
    EXPECT_NEAR(v.real(), 1.0, 1e-15);
    EXPECT_NEAR(v.imag(), std::tanh(1.6), 1e-15);
    EXPECT_EQ(code_of([] { (void)graph_from_json(json::parse(R"({"n": 1})")); }), Errc::parse);
    EXPECT_EQ(code_of([] { (void)graph_from_json(json::parse(R"({"n": 1, "nodes": [{"id": 0, "kind": "gate"}]})")); }), Errc::parse);
}

TEST(Ansatz, BuildersAreDeterministicAndCounted) {
    RngStream  a(5, 1), b(5, 1);
    MlpSpec    mlp;
    const auto g1 = build_mlp(mlp, a);
    const auto g2 = build_mlp(mlp, b);
    for(const auto &s : enumerate_configs(mlp.n)) EXPECT_EQ(eval_full(g1, s), eval_full(g2, s));

    SnnqsSpec sn;
    sn.n = 6;
    RngStream r(1, 1);
    EXPECT_EQ(build_snnqs(sn, r).k(), 1);
    CosnetSpec cs;
    cs.n = 6;
    cs.k = 3;
    EXPECT_EQ(build_cosnet(cs, r).k(), 6);
}

TEST(Ansatz, ProductGadgetMultiplies) {
    GraphBuilder b(2);
    const int    x = b.linear(spin_edges({1.0, 0.5}), 0.25);
    const int    y = b.linear(spin_edges({-0.3, 2.0}), 0.0);
    b.output({{Source::node(b.product(x, y)), 1.0}});
    const auto g = std::move(b).build();
    for(const auto &s : enumerate_configs(2)) {
        const double xv = s.value(0) + 0.5 * s.value(1) + 0.25, yv = -0.3 * s.value(0) + 2.0 * s.value(1);
        EXPECT_NEAR(eval_full(g, s).real(), xv * yv, 1e-13);
    }
}

TEST(Ansatz, LayerNormNormalizes) {
    GraphBuilder     b(3);
    std::vector<int> z;
    for(int i = 0; i < 3; ++i) z.push_back(b.linear(spin_edges({1.0 + i, -0.5 * i, 0.3}), 0.1 * i));
    const auto h = b.layer_norm(z, 1e-5);
    std::vector<Edge> out;
    for(int id : h) out.push_back({Source::node(id), 1.0});
    b.output(out);
    const auto g = std::move(b).build();
    // The normalized components sum to zero.
    for(const auto &s : enumerate_configs(3)) EXPECT_NEAR(std::abs(eval_full(g, s)), 0.0, 1e-12);
}

TEST(Ansatz, JsonRejectsUnknownFields) {
    EXPECT_EQ(code_of([] { (void)ansatz_from_json(json::parse(R"({"family": "mlp", "widht": 3})")); }), Errc::parse);
    const auto spec = ansatz_from_json(json::parse(R"({"family": "snnqs", "n": 8, "activation": "sin"})"));
    EXPECT_EQ(spec_n(spec), 8);
    EXPECT_EQ(ansatz_from_json(ansatz_to_json(spec)).index(), spec.index());
}
