// SPDX-License-Identifier: Apache-2.0

#include "nqs/nqs.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace nqs;

constexpr int kExitUsage  = 1;
constexpr int kExitDomain = 2;

struct Globals {
    std::uint64_t seed     = 1;
    int           threads  = 0;
    std::string   log_base = "e";
    int           max_n    = 0; // 0: keep the default cap
};

LogBase parse_log_base(const std::string &s) {
    if(s == "e") return LogBase::e;
    if(s == "2") return LogBase::two;
    fail(Errc::parse, "log base must be 2 or e");
}

json globals_json(const Globals &g) {
    return {{"seed", g.seed}, {"threads", resolve_threads(g.threads)}, {"log_base", g.log_base}, {"max_n", spin_cap()}};
}

void emit(const json &doc, const std::string &out) {
    const std::string text = doc.dump(2) + "\n";
    if(out.empty() || out == "-") std::cout << text;
    else write_text_file(out, text);
}

/// Graph from --graph (interchange JSON) or --ansatz (ansatz block built with --seed).
struct GraphSource {
    std::string graph_path;
    std::string ansatz_path;

    void add_to(CLI::App *cmd) {
        auto *g = cmd->add_option("--graph", graph_path, "graph interchange JSON")->check(CLI::ExistingFile);
        auto *a = cmd->add_option("--ansatz", ansatz_path, "ansatz JSON block, built with --seed")->check(CLI::ExistingFile);
        g->excludes(a);
    }
    [[nodiscard]] bool given() const { return !graph_path.empty() || !ansatz_path.empty(); }

    [[nodiscard]] ComputationGraph load(const Globals &glob) const {
        if(!graph_path.empty()) return graph_from_json(read_json_file(graph_path));
        require(!ansatz_path.empty(), Errc::parse, "one of --graph or --ansatz is required");
        const auto spec = ansatz_from_json(read_json_file(ansatz_path));
        RngStream  rng(glob.seed, stream_key({0}));
        return build_ansatz(spec, rng);
    }
    [[nodiscard]] json describe() const {
        return graph_path.empty() ? json{{"ansatz", ansatz_path}} : json{{"graph", graph_path}};
    }
};

[[noreturn]] void usage_error(const std::string &what) { throw CLI::ValidationError(what); }

json certificate_json(const std::optional<ChebyshevCertificate> &c) {
    if(!c) return nullptr;
    return {{"a", c->a},
            {"rho", c->rho},
            {"C", c->C},
            {"truncation_bound", c->truncation_bound},
            {"aliasing_bound", c->aliasing_bound},
            {"exact_polynomial", c->exact_polynomial},
            {"total", c->total()}};
}

json report_json(const BoundReport &r, LogBase base) {
    auto in = [&](double nats) { return nats_to(base, nats); };
    return {{"n", r.n},
            {"k", r.k},
            {"mu", r.mu},
            {"d", r.d},
            {"region_mask_hex", mask_to_hex(r.region_mask)},
            {"region_size", r.region_size},
            {"certified", r.certified},
            {"empirical_only", r.empirical_only},
            {"note", r.note},
            {"certificate", certificate_json(r.certificate)},
            {"degree_formula", r.degree_formula ? json(*r.degree_formula) : json(nullptr)},
            {"rank_bound", r.rank_bound},
            {"entropy_bound_aux", in(r.entropy_bound_aux)},
            {"eps_raw", r.eps_raw},
            {"eps_poly", r.eps_poly},
            {"eps_empirical", r.eps_empirical},
            {"norm_was", r.norm_was},
            {"delta_norm_bound", r.delta_norm_bound},
            {"trace_bound", r.trace_bound},
            {"fa_slack", in(r.fa_slack)},
            {"entropy_bound_final", in(r.entropy_bound_final)},
            {"measured_entropy", in(r.measured_entropy)},
            {"aux_entropy", in(r.aux_entropy)},
            {"aux_schmidt_rank", r.aux_schmidt_rank},
            {"measured_delta_norm", r.measured_delta_norm},
            {"measured_trace_distance", r.measured_trace_distance},
            {"trace_region_mask_hex", mask_to_hex(r.trace_region_mask)}};
}

std::string summary_path_for(const std::string &csv) {
    std::filesystem::path p(csv);
    p.replace_extension(".summary.json");
    return p.string();
}

int run(int argc, char **argv) {
    CLI::App app{"Exact entanglement analysis of feed-forward neural quantum states"};
    app.require_subcommand(1);
    app.allow_extras(false);
    Globals glob;
    app.add_option("--seed", glob.seed, "root random seed")->capture_default_str();
    app.add_option("--threads", glob.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber)->capture_default_str();
    app.add_option("--log-base", glob.log_base, "entropy units: e (nats) or 2 (bits)")->check(CLI::IsMember({"e", "2"}))->capture_default_str();
    app.add_option("--max-n", glob.max_n, "spin cap for dense routines")->check(CLI::Range(1, kHardMaxSpins));

    std::string out, region, degree = "auto", state_path, config_path, summary_path;
    int         dn = 0, dm = 0;
    std::size_t samples = 1 << 14;

    GraphSource reduce_src, sv_src, ent_src, bound_src, bench_src, validate_src;

    auto *reduce = app.add_subcommand("reduce", "feature-reduce a graph");
    reduce_src.add_to(reduce);
    reduce->add_option("--out", out, "output JSON (default stdout)");

    auto *statevector = app.add_subcommand("statevector", "materialize the normalized statevector");
    sv_src.add_to(statevector);
    statevector->add_option("--out", out, "binary state file")->required();

    auto *entropy = app.add_subcommand("entropy", "subregion von Neumann entropy");
    entropy->add_option("--state", state_path, "binary state file")->check(CLI::ExistingFile);
    ent_src.add_to(entropy);
    entropy->add_option("--region", region, "subregion bit mask in hex")->required();
    entropy->add_option("--out", out, "output JSON (default stdout)");

    auto *bound = app.add_subcommand("bound", "auxiliary-state entropy bound");
    bound_src.add_to(bound);
    bound->add_option("--region", region, "subregion bit mask in hex")->required();
    bound->add_option("--degree", degree, "Chebyshev degree or auto")->capture_default_str();
    bound->add_option("--out", out, "output JSON (default stdout)");

    auto *dicke = app.add_subcommand("dicke", "exact Dicke-state spectra");
    dicke->add_option("--n", dn, "even spin count")->required();
    dicke->add_option("--m", dm, "subsystem size (default: all)");
    dicke->add_option("--out", out, "output JSON (default stdout)");

    auto *page = app.add_subcommand("page", "Page curve");
    page->add_option("--n", dn, "spin count")->required();
    page->add_option("--out", out, "output CSV (default stdout)");

    auto *runc = app.add_subcommand("run", "run an experiment sweep");
    runc->add_option("--config", config_path, "experiment JSON")->required()->check(CLI::ExistingFile);
    runc->add_option("--out", out, "rows CSV")->required();
    runc->add_option("--summary", summary_path, "aggregate JSON (default: next to the CSV)");

    auto *bench = app.add_subcommand("bench", "time full vs reduced evaluation");
    bench_src.add_to(bench);
    bench->add_option("--samples", samples, "random configurations")->capture_default_str();
    bench->add_option("--out", out, "output JSON (default stdout)");

    auto *validate = app.add_subcommand("validate", "check a graph document or an experiment config");
    validate_src.add_to(validate);
    auto *validate_cfg = validate->add_option("--config", config_path, "experiment JSON")->check(CLI::ExistingFile);
    validate_cfg->excludes(validate->get_option("--graph"))->excludes(validate->get_option("--ansatz"));

    try {
        app.parse(argc, argv);
    } catch(const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch(const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch(const CLI::ParseError &e) {
        std::cerr << json{{"error", "usage"}, {"message", e.what()}, {"exit_code", kExitUsage}}.dump() << "\n";
        return kExitUsage;
    }

    try {
        if(glob.max_n > 0) set_spin_cap(glob.max_n);
        set_default_threads(glob.threads);
        const LogBase base = parse_log_base(glob.log_base);
        json          cfg  = globals_json(glob);

        if(*reduce) {
            if(!reduce_src.given()) usage_error("reduce needs --graph or --ansatz");
            cfg["command"] = "reduce";
            cfg.update(reduce_src.describe());
            auto doc      = reduced_to_json(feature_reduce(reduce_src.load(glob)));
            doc["config"] = cfg;
            emit(doc, out);
        } else if(*statevector) {
            if(!sv_src.given()) usage_error("statevector needs --graph or --ansatz");
            cfg["command"] = "statevector";
            cfg.update(sv_src.describe());
            const auto psi = materialize(sv_src.load(glob), glob.threads);
            write_statevector(psi, out);
            emit({{"schema_version", kSchemaVersion}, {"n", psi.n}, {"norm_was", psi.norm_was}, {"out", out}, {"config", cfg}}, "");
        } else if(*entropy) {
            if(state_path.empty() == !ent_src.given()) usage_error("entropy needs exactly one of --state, --graph, --ansatz");
            cfg["command"] = "entropy";
            cfg["region"]  = region;
            const auto psi = state_path.empty() ? materialize(ent_src.load(glob), glob.threads) : read_statevector(state_path);
            if(state_path.empty()) cfg.update(ent_src.describe());
            else cfg["state"] = state_path;
            const Subregion A(parse_mask_hex(region), psi.n);
            const auto      r = subregion_entropy(psi, A);
            emit({{"schema_version", kSchemaVersion},
                  {"n", psi.n},
                  {"region_mask_hex", mask_to_hex(A.mask)},
                  {"eigenvalues", r.eigenvalues},
                  {"entropy", r.entropy_in(base)},
                  {"schmidt_rank", r.schmidt_rank},
                  {"config", cfg}},
                 out);
        } else if(*bound) {
            if(!bound_src.given()) usage_error("bound needs --graph or --ansatz");
            std::optional<int> d;
            if(degree != "auto") {
                try {
                    std::size_t used = 0;
                    d                = std::stoi(degree, &used);
                    if(used != degree.size() || *d < 0) throw std::invalid_argument(degree);
                } catch(const std::logic_error &) { usage_error("--degree must be a non-negative integer or auto"); }
            }
            cfg["command"] = "bound";
            cfg["region"]  = region;
            cfg["degree"]  = degree;
            cfg.update(bound_src.describe());
            const auto g   = bound_src.load(glob);
            auto       doc = report_json(full_bound_report(g, Subregion(parse_mask_hex(region), g.n()), d, glob.threads), base);
            doc["schema_version"] = kSchemaVersion;
            doc["config"]         = cfg;
            emit(doc, out);
        } else if(*dicke) {
            cfg["command"] = "dicke";
            cfg["n"]       = dn;
            json spectra   = json::array();
            for(int m = dm > 0 ? dm : 1; m <= (dm > 0 ? dm : dn - 1); ++m) {
                const auto s = dicke_spectrum(dn, m);
                double     S = 0.0;
                for(double l : s.eigenvalues)
                    if(l > 0.0) S -= l * std::log(l);
                spectra.push_back({{"m", m}, {"i_min", s.i_min}, {"eigenvalues", s.eigenvalues}, {"entropy", nats_to(base, S)}, {"exact", s.exact}});
            }
            json doc{{"schema_version", kSchemaVersion}, {"n", dn}, {"spectra", spectra}, {"config", cfg}};
            if(dm > 0) {
                doc["m"]           = dm;
                doc["eigenvalues"] = spectra[0]["eigenvalues"];
                doc["entropy"]     = spectra[0]["entropy"];
            }
            emit(doc, out);
        } else if(*page) {
            std::string csv = "schema_version,n,subsystem_size,page_value\n";
            for(int m = 1; m < dn; ++m)
                csv += std::to_string(kSchemaVersion) + "," + std::to_string(dn) + "," + std::to_string(m) + "," + format_double(nats_to(base, page_value(m, dn))) +
                       "\n";
            if(out.empty() || out == "-") std::cout << csv;
            else write_text_file(out, csv);
        } else if(*runc) {
            auto ecfg    = experiment_from_json(read_json_file(config_path));
            ecfg.threads = glob.threads;
            if(app.count("--seed") > 0) ecfg.seed = glob.seed;
            const auto res = run_sweep(ecfg);
            write_text_file(out, sweep_csv(res));
            auto summary = sweep_summary_json(ecfg, res);
            const auto sp = summary_path.empty() ? summary_path_for(out) : summary_path;
            write_text_file(sp, summary.dump(2) + "\n");
            cfg["command"]    = "run";
            cfg["experiment"] = experiment_to_json(ecfg);
            emit({{"schema_version", kSchemaVersion}, {"rows", res.rows.size()}, {"out", out}, {"summary", sp}, {"config", cfg}}, "");
        } else if(*bench) {
            if(!bench_src.given()) usage_error("bench needs --graph or --ansatz");
            cfg["command"] = "bench";
            cfg["samples"] = samples;
            cfg.update(bench_src.describe());
            const auto rep = benchmark_reduction(bench_src.load(glob), samples, glob.seed);
            emit({{"schema_version", kSchemaVersion},
                  {"n", rep.n},
                  {"k", rep.k},
                  {"mu", rep.mu},
                  {"samples", rep.samples},
                  {"full_seconds", rep.full_seconds},
                  {"reduced_seconds", rep.reduced_seconds},
                  {"ratio", rep.ratio},
                  {"neighbor_full_seconds", rep.neighbor_full_seconds},
                  {"neighbor_reduced_seconds", rep.neighbor_reduced_seconds},
                  {"neighbor_ratio", rep.neighbor_ratio},
                  {"max_relative_deviation", rep.max_relative_deviation},
                  {"config", cfg}},
                 out);
        } else if(*validate) {
            cfg["command"] = "validate";
            if(!config_path.empty()) {
                const auto ecfg = experiment_from_json(read_json_file(config_path));
                for(const auto &sc : ecfg.series)
                    for(int n : ecfg.n_grid) {
                        check_spin_count(n);
                        AnsatzSpec spec = sc.ansatz;
                        set_spec_n(spec, n);
                        RngStream rng(glob.seed, stream_key({0}));
                        (void)build_ansatz(spec, rng);
                    }
                emit({{"schema_version", kSchemaVersion}, {"valid", true}, {"experiment", experiment_to_json(ecfg)}, {"config", cfg}}, "");
                return 0;
            }
            if(!validate_src.given()) usage_error("validate needs --graph, --ansatz or --config");
            cfg.update(validate_src.describe());
            const auto       g = validate_src.load(glob);
            std::vector<int> order;
            for(int p : g.order()) order.push_back(g.nodes()[static_cast<std::size_t>(p)].id);
            emit({{"schema_version", kSchemaVersion},
                  {"valid", true},
                  {"n", g.n()},
                  {"k", g.k()},
                  {"nodes", g.nodes().size()},
                  {"topological_order", order},
                  {"dead_nodes", g.dead_nodes()},
                  {"constant_nodes", g.constant_nodes()},
                  {"config", cfg}},
                 "");
        }
        return 0;
    } catch(const CLI::ValidationError &e) {
        std::cerr << json{{"error", "usage"}, {"message", e.what()}, {"exit_code", kExitUsage}}.dump() << "\n";
        return kExitUsage;
    } catch(const Error &e) {
        std::cerr << json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}, {"exit_code", kExitDomain}}.dump() << "\n";
        return kExitDomain;
    }
}

} // namespace

int main(int argc, char **argv) {
    try {
        return run(argc, argv);
    } catch(const std::exception &e) {
        std::cerr << nqs::json{{"error", "internal"}, {"message", e.what()}, {"exit_code", kExitDomain}}.dump() << "\n";
        return kExitDomain;
    }
}
