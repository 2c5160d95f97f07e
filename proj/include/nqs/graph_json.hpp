// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nqs/graph.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace nqs {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline cplx complex_from_json(const json &j, const std::string &what) {
    if(j.is_number()) return {j.get<double>(), 0.0};
    require(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(), Errc::parse,
            what + " must be a number or an [re, im] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json complex_to_json(cplx z) {
    if(z.imag() == 0.0) return z.real();
    return json::array({z.real(), z.imag()});
}

inline ScalarFunction function_from_json(const json &j, const std::string &name_key, const std::string &suffix) {
    ScalarFunction f{activation_from_string(j.at(name_key).get<std::string>())};
    if(j.contains("beta" + suffix)) f.beta = j.at("beta" + suffix).get<double>();
    if(j.contains("coeffs" + suffix)) f.coeffs = j.at("coeffs" + suffix).get<std::vector<double>>();
    if(f.id == ActivationId::poly) require(!f.coeffs.empty(), Errc::parse, "poly activation needs coefficients");
    return f;
}

inline void function_to_json(json &j, const ScalarFunction &f, const std::string &name_key, const std::string &suffix) {
    j[name_key] = std::string(to_string(f.id));
    if(f.id == ActivationId::softplus) j["beta" + suffix] = f.beta;
    if(f.id == ActivationId::poly) j["coeffs" + suffix] = f.coeffs;
}

inline Source source_from_json(const json &j) {
    if(j.is_number_integer()) return Source::node(j.get<int>());
    require(j.is_string(), Errc::parse, "edge source must be a node id or \"s_i\"");
    const auto text = j.get<std::string>();
    require(text.size() > 2 && text.starts_with("s_"), Errc::parse, "edge source must look like \"s_i\", got " + text);
    int idx = -1;
    try {
        std::size_t used = 0;
        idx              = std::stoi(text.substr(2), &used);
        require(used == text.size() - 2, Errc::parse, "bad spin reference " + text);
    } catch(const std::logic_error &) { fail(Errc::parse, "bad spin reference " + text); }
    return Source::spin(idx);
}

} // namespace detail

/// Parses the graph interchange document. Spin sources are written "s_i" with
/// 0-based i; output weights and bias may be [re, im] pairs.
[[nodiscard]] inline ComputationGraph graph_from_json(const json &doc) {
    try {
        const int         n = doc.at("n").get<int>();
        std::vector<Node> nodes;
        for(const auto &jn : doc.at("nodes")) {
            Node        nd;
            nd.id           = jn.at("id").get<int>();
            const auto kind = jn.at("kind").get<std::string>();
            if(kind == "input") nd.kind = NodeKind::input;
            else if(kind == "linear") nd.kind = NodeKind::linear;
            else if(kind == "nonlinear") nd.kind = NodeKind::nonlinear;
            else if(kind == "output") nd.kind = NodeKind::output;
            else fail(Errc::parse, "unknown node kind " + kind);
            if(nd.kind == NodeKind::input) nd.input_index = jn.at("index").get<int>();
            if(jn.contains("activation")) {
                Activation act(detail::function_from_json(jn, "activation", ""));
                if(jn.contains("complex_mode")) act.mode = complex_mode_from_string(jn.at("complex_mode").get<std::string>());
                if(act.mode == ComplexMode::pair) act.secondary = detail::function_from_json(jn, "activation_imag", "_imag");
                nd.activation = std::move(act);
            }
            if(jn.contains("inputs"))
                for(const auto &je : jn.at("inputs"))
                    nd.inputs.push_back({detail::source_from_json(je.at("from")), detail::complex_from_json(je.at("weight"), "edge weight")});
            if(jn.contains("bias")) nd.bias = detail::complex_from_json(jn.at("bias"), "bias");
            if(jn.contains("output_mode")) {
                const auto mode = jn.at("output_mode").get<std::string>();
                if(mode == "amplitude") nd.output_mode = OutputMode::amplitude;
                else if(mode == "log_amplitude") nd.output_mode = OutputMode::log_amplitude;
                else fail(Errc::parse, "unknown output mode " + mode);
            }
            nodes.push_back(std::move(nd));
        }
        return ComputationGraph::create(n, std::move(nodes));
    } catch(const json::exception &e) { fail(Errc::parse, std::string("malformed graph document: ") + e.what()); }
}

[[nodiscard]] inline json graph_to_json(const ComputationGraph &g) {
    json nodes = json::array();
    for(const auto &nd : g.nodes()) {
        json jn;
        jn["id"]   = nd.id;
        jn["kind"] = std::string(to_string(nd.kind));
        if(nd.kind == NodeKind::input) jn["index"] = nd.input_index;
        if(nd.activation) {
            detail::function_to_json(jn, nd.activation->primary, "activation", "");
            if(nd.activation->mode != ComplexMode::real_only) jn["complex_mode"] = std::string(to_string(nd.activation->mode));
            if(nd.activation->mode == ComplexMode::pair) detail::function_to_json(jn, nd.activation->secondary, "activation_imag", "_imag");
        }
        if(nd.kind != NodeKind::input) {
            json in = json::array();
            for(const auto &e : nd.inputs) {
                json je;
                je["from"]   = e.from.kind == Source::Kind::spin ? json("s_" + std::to_string(e.from.index)) : json(e.from.index);
                je["weight"] = detail::complex_to_json(e.weight);
                in.push_back(je);
            }
            jn["inputs"] = in;
            jn["bias"]   = detail::complex_to_json(nd.bias);
        }
        if(nd.kind == NodeKind::output) jn["output_mode"] = nd.output_mode == OutputMode::amplitude ? "amplitude" : "log_amplitude";
        nodes.push_back(jn);
    }
    return {{"n", g.n()}, {"nodes", nodes}};
}

[[nodiscard]] inline json reduced_to_json(const ReducedForm &r) {
    json feats = json::array();
    for(const auto &f : r.features) feats.push_back({{"weights", f.weights}, {"bias", f.bias}});
    return {{"schema_version", kSchemaVersion}, {"n", r.n},           {"k", r.k},
            {"mu", r.mu},                        {"features", feats}, {"residual_graph", graph_to_json(r.residual)}};
}

[[nodiscard]] inline json read_json_file(const std::string &path) {
    std::ifstream in(path);
    require(in.good(), Errc::io, "cannot open " + path);
    try {
        return json::parse(in);
    } catch(const json::exception &e) { fail(Errc::parse, path + ": " + e.what()); }
}

inline void write_text_file(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), Errc::io, "cannot write " + path);
    out << text;
    require(out.good(), Errc::io, "write failed for " + path);
}

} // namespace nqs
