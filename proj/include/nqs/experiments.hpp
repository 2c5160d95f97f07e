// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nqs/analytic.hpp"
#include "nqs/ansatz.hpp"
#include "nqs/entanglement.hpp"
#include "nqs/graph.hpp"
#include "nqs/parallel.hpp"
#include "nqs/statevector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace nqs {

/// fixed_half: the first n/2 spins. sweep: the contiguous block starting at
/// spin 0 for each size. random_contiguous: windows with periodic wrap.
/// random_subset: uniform subsets of the given size.
enum class RegionMode { fixed_half, sweep, random_contiguous, random_subset };

[[nodiscard]] inline std::string to_string(RegionMode m) {
    switch(m) {
        case RegionMode::fixed_half: return "fixed_half";
        case RegionMode::sweep: return "sweep";
        case RegionMode::random_contiguous: return "random_contiguous";
        case RegionMode::random_subset: return "random_subset";
    }
    return "?";
}

[[nodiscard]] inline RegionMode region_mode_from_string(const std::string &s) {
    for(auto m : {RegionMode::fixed_half, RegionMode::sweep, RegionMode::random_contiguous, RegionMode::random_subset})
        if(to_string(m) == s) return m;
    fail(Errc::parse, "unknown region mode " + s);
}

struct SeriesConfig {
    std::string      name;
    AnsatzSpec       ansatz;
    std::vector<int> k_grid; // CosNet hidden counts; empty means the spec's own k
};

struct ExperimentConfig {
    std::string               name = "experiment";
    std::vector<SeriesConfig> series;
    std::vector<int>          n_grid{10};
    RegionMode                region_mode       = RegionMode::random_subset;
    std::vector<int>          sizes;             // empty: defaults per mode
    int                       trials            = 20;
    int                       regions_per_trial = 10;
    std::uint64_t             seed              = 1;
    bool                      attach_page       = false;
    int                       threads           = 0;
};

struct SweepRow {
    std::string   experiment;
    int           n = 0, subsystem_size = 0, k = 0, trial = 0, region_index = 0;
    std::uint64_t region_mask = 0;
    std::uint64_t seed        = 0;
    double        entropy     = 0.0;
};

struct DegenerateTrial {
    std::string experiment;
    int         n = 0, k = 0, trial = 0;
    std::string reason;
};

struct SweepPoint {
    std::string           experiment;
    int                   n = 0, k = 0, subsystem_size = 0;
    double                mean = 0.0, std_trials = 0.0, std_rows = 0.0;
    int                   trial_count = 0, row_count = 0;
    std::optional<double> page{};
};

struct SweepResult {
    std::vector<SweepRow>        rows;
    std::vector<SweepPoint>      points;
    std::vector<DegenerateTrial> degenerate;
};

[[nodiscard]] inline std::vector<int> resolved_sizes(const ExperimentConfig &cfg, int n) {
    std::vector<int> out;
    if(!cfg.sizes.empty()) {
        for(int s : cfg.sizes)
            if(s >= 1 && s <= n - 1) out.push_back(s);
        return out;
    }
    if(cfg.region_mode == RegionMode::fixed_half) return {n / 2};
    for(int s = 1; s <= n / 2; ++s) out.push_back(s);
    return out;
}

/// Uniform random subset of `size` spins (partial Fisher-Yates).
[[nodiscard]] inline Subregion random_subset(int n, int size, RngStream &rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for(int i = 0; i < size; ++i) {
        const auto j = i + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return Subregion::from_indices(std::span<const int>(idx.data(), static_cast<std::size_t>(size)), n);
}

[[nodiscard]] inline std::vector<Subregion> sample_regions(const ExperimentConfig &cfg, int n, int size, RngStream &rng) {
    switch(cfg.region_mode) {
        case RegionMode::fixed_half:
        case RegionMode::sweep: return {Subregion::contiguous(0, size, n)};
        case RegionMode::random_contiguous: {
            std::vector<Subregion> out;
            for(int r = 0; r < cfg.regions_per_trial; ++r)
                out.push_back(Subregion::contiguous(static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n))), size, n));
            return out;
        }
        case RegionMode::random_subset: {
            std::vector<Subregion> out;
            for(int r = 0; r < cfg.regions_per_trial; ++r) out.push_back(random_subset(n, size, rng));
            return out;
        }
    }
    return {};
}

namespace detail {

struct WorkItem {
    std::size_t series;
    int         n;
    int         k_value; // CosNet k or -1
    int         trial;
};

inline double mean_of(const std::vector<double> &v) {
    double s = 0.0;
    for(double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Population standard deviation (zero for a single sample).
inline double std_of(const std::vector<double> &v) {
    if(v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double       s = 0.0;
    for(double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace detail

inline constexpr double kMaxDegenerateFraction = 0.5;

/// Per (series, n, k, trial): build the ansatz from stream (seed, key), form
/// the statevector and evaluate entropies over sampled regions. Trials run in
/// parallel; rows are assembled in work-item order, so the output does not
/// depend on the worker count. Degenerate trials are recorded and skipped.
[[nodiscard]] inline SweepResult run_sweep(const ExperimentConfig &cfg) {
    require(cfg.trials >= 1, Errc::spec, "trials must be >= 1");
    require(cfg.regions_per_trial >= 1, Errc::spec, "regions_per_trial must be >= 1");
    require(!cfg.series.empty(), Errc::spec, "experiment has no series");
    std::vector<detail::WorkItem> items;
    for(std::size_t si = 0; si < cfg.series.size(); ++si) {
        const auto &s = cfg.series[si];
        require(s.k_grid.empty() || std::holds_alternative<CosnetSpec>(s.ansatz), Errc::spec, "k_grid is only supported for cosnet series");
        for(int n : cfg.n_grid) {
            check_spin_count(n);
            const std::vector<int> ks = s.k_grid.empty() ? std::vector<int>{-1} : s.k_grid;
            for(int k : ks)
                for(int t = 0; t < cfg.trials; ++t) items.push_back({si, n, k, t});
        }
    }
    struct Outcome {
        std::vector<SweepRow>          rows;
        std::optional<DegenerateTrial> degenerate;
    };
    std::vector<Outcome> outcomes(items.size());
    parallel_for(items.size(), cfg.threads, [&](std::size_t idx) {
        const auto &it     = items[idx];
        const auto &series = cfg.series[it.series];
        AnsatzSpec  spec   = series.ansatz;
        set_spec_n(spec, it.n);
        if(it.k_value >= 0) std::get<CosnetSpec>(spec).k = it.k_value;
        const std::string label = cfg.name + "/" + series.name;
        const auto        key   = stream_key({static_cast<std::uint64_t>(it.series), static_cast<std::uint64_t>(it.n),
                                              static_cast<std::uint64_t>(it.k_value + 1), static_cast<std::uint64_t>(it.trial)});
        RngStream         base(cfg.seed, key);
        RngStream         build_rng  = base.child(1);
        RngStream         region_rng = base.child(2);
        int               k_column   = it.k_value;
        try {
            const auto g = build_ansatz(spec, build_rng);
            if(k_column < 0) k_column = g.k();
            const auto psi = materialize(g, 1);
            for(int size : resolved_sizes(cfg, it.n)) {
                const auto regions = sample_regions(cfg, it.n, size, region_rng);
                for(std::size_t r = 0; r < regions.size(); ++r) {
                    const auto res = subregion_entropy(psi, regions[r]);
                    outcomes[idx].rows.push_back({label, it.n, size, k_column, it.trial, static_cast<int>(r), regions[r].mask, cfg.seed, res.entropy});
                }
            }
        } catch(const Error &e) {
            if(e.code() != Errc::degenerate_state && e.code() != Errc::amplitude_overflow) throw;
            outcomes[idx].rows.clear();
            outcomes[idx].degenerate = DegenerateTrial{label, it.n, k_column, it.trial, e.what()};
        }
    });

    SweepResult out;
    for(auto &o : outcomes) {
        out.rows.insert(out.rows.end(), o.rows.begin(), o.rows.end());
        if(o.degenerate) out.degenerate.push_back(*o.degenerate);
    }
    std::stable_sort(out.rows.begin(), out.rows.end(), [](const SweepRow &a, const SweepRow &b) {
        return std::tie(a.experiment, a.n, a.k, a.subsystem_size, a.trial, a.region_index) <
               std::tie(b.experiment, b.n, b.k, b.subsystem_size, b.trial, b.region_index);
    });

    // Degenerate fraction per (series, n, k).
    std::map<std::tuple<std::string, int, int>, std::pair<int, int>> tally; // (degenerate, total)
    for(std::size_t i = 0; i < items.size(); ++i) {
        const auto &it = items[i];
        const auto  label = cfg.name + "/" + cfg.series[it.series].name;
        auto       &t     = tally[{label, it.n, it.k_value}];
        ++t.second;
        if(outcomes[i].degenerate) ++t.first;
    }
    for(const auto &[key, t] : tally)
        require(t.first <= kMaxDegenerateFraction * t.second, Errc::degenerate_state,
                std::get<0>(key) + " at n=" + std::to_string(std::get<1>(key)) + ": " + std::to_string(t.first) + " of " +
                    std::to_string(t.second) + " trials degenerate");

    // Aggregates per (experiment, n, k, size).
    std::map<std::tuple<std::string, int, int, int>, std::map<int, std::vector<double>>> groups;
    for(const auto &r : out.rows) groups[{r.experiment, r.n, r.k, r.subsystem_size}][r.trial].push_back(r.entropy);
    for(const auto &[key, by_trial] : groups) {
        SweepPoint          p;
        std::tie(p.experiment, p.n, p.k, p.subsystem_size) = key;
        std::vector<double> all, trial_means;
        for(const auto &[trial, vals] : by_trial) {
            all.insert(all.end(), vals.begin(), vals.end());
            trial_means.push_back(detail::mean_of(vals));
        }
        p.mean        = detail::mean_of(all);
        p.std_rows    = detail::std_of(all);
        p.std_trials  = detail::std_of(trial_means);
        p.trial_count = static_cast<int>(trial_means.size());
        p.row_count   = static_cast<int>(all.size());
        if(cfg.attach_page) p.page = page_value(p.subsystem_size, p.n);
        out.points.push_back(p);
    }
    return out;
}

/// Fixed region size, sweep over CosNet hidden counts; aggregates carry the
/// Page value of the same bipartition.
[[nodiscard]] inline SweepResult run_cosnet_k_sweep(ExperimentConfig cfg) {
    for(const auto &s : cfg.series) {
        require(std::holds_alternative<CosnetSpec>(s.ansatz), Errc::spec, "k sweeps need cosnet series");
        require(!s.k_grid.empty(), Errc::spec, "k sweep needs a k_grid");
    }
    require(cfg.sizes.size() == 1, Errc::spec, "k sweep needs exactly one subsystem size");
    cfg.attach_page = true;
    return run_sweep(cfg);
}

// ---------------------------------------------------------------- I/O

inline constexpr const char *kCsvHeader = "experiment,n,subsystem_size,k,trial,region_mask_hex,seed,entropy_nats";

[[nodiscard]] inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[nodiscard]] inline std::string sweep_csv(const SweepResult &r) {
    std::string out = std::string(kCsvHeader) + "\n";
    for(const auto &row : r.rows) {
        out += row.experiment + "," + std::to_string(row.n) + "," + std::to_string(row.subsystem_size) + "," + std::to_string(row.k) + "," +
               std::to_string(row.trial) + "," + mask_to_hex(row.region_mask) + "," + std::to_string(row.seed) + "," + format_double(row.entropy) +
               "\n";
    }
    return out;
}

[[nodiscard]] inline json experiment_to_json(const ExperimentConfig &cfg) {
    json series = json::array();
    for(const auto &s : cfg.series) {
        json js{{"name", s.name}, {"ansatz", ansatz_to_json(s.ansatz)}};
        if(!s.k_grid.empty()) js["k_grid"] = s.k_grid;
        series.push_back(js);
    }
    return {{"name", cfg.name},
            {"n", cfg.n_grid},
            {"region_mode", to_string(cfg.region_mode)},
            {"sizes", cfg.sizes},
            {"trials", cfg.trials},
            {"regions_per_trial", cfg.regions_per_trial},
            {"seed", cfg.seed},
            {"attach_page", cfg.attach_page},
            {"series", series}};
}

[[nodiscard]] inline json sweep_summary_json(const ExperimentConfig &cfg, const SweepResult &r) {
    json points = json::array();
    for(const auto &p : r.points) {
        json jp{{"experiment", p.experiment}, {"n", p.n},           {"k", p.k},
                {"subsystem_size", p.subsystem_size}, {"mean", p.mean}, {"std", p.std_trials},
                {"std_trials", p.std_trials}, {"std_rows", p.std_rows}, {"trial_count", p.trial_count},
                {"row_count", p.row_count}};
        if(p.page) jp["page_value"] = *p.page;
        points.push_back(jp);
    }
    json degenerate = json::array();
    for(const auto &d : r.degenerate)
        degenerate.push_back({{"experiment", d.experiment}, {"n", d.n}, {"k", d.k}, {"trial", d.trial}, {"reason", d.reason}});
    return {{"schema_version", kSchemaVersion}, {"config", experiment_to_json(cfg)}, {"points", points}, {"degenerate_trials", degenerate}};
}

/// {"name", "n": int | [int], "region_mode", "sizes", "trials",
///  "regions_per_trial", "seed", "attach_page",
///  "series": [{"name", "ansatz": {...}, "k_grid": [...]}]}.
[[nodiscard]] inline ExperimentConfig experiment_from_json(const json &j) {
    try {
        static const std::set<std::string> allowed{"name", "n", "region_mode", "sizes", "trials", "regions_per_trial", "seed", "attach_page", "series",
                                                   "description"};
        for(const auto &[key, _] : j.items()) require(allowed.contains(key), Errc::parse, "unknown experiment field \"" + key + "\"");
        ExperimentConfig cfg;
        detail::read_opt(j, "name", cfg.name);
        if(j.contains("n")) cfg.n_grid = j.at("n").is_array() ? j.at("n").get<std::vector<int>>() : std::vector<int>{j.at("n").get<int>()};
        if(j.contains("region_mode")) cfg.region_mode = region_mode_from_string(j.at("region_mode").get<std::string>());
        detail::read_opt(j, "sizes", cfg.sizes);
        detail::read_opt(j, "trials", cfg.trials);
        detail::read_opt(j, "regions_per_trial", cfg.regions_per_trial);
        detail::read_opt(j, "seed", cfg.seed);
        detail::read_opt(j, "attach_page", cfg.attach_page);
        for(const auto &js : j.at("series")) {
            for(const auto &[key, _] : js.items())
                require(key == "name" || key == "ansatz" || key == "k_grid", Errc::parse, "unknown series field \"" + key + "\"");
            SeriesConfig s{js.at("name").get<std::string>(), ansatz_from_json(js.at("ansatz")), {}};
            detail::read_opt(js, "k_grid", s.k_grid);
            cfg.series.push_back(std::move(s));
        }
        require(cfg.trials >= 1 && cfg.regions_per_trial >= 1, Errc::spec, "trials and regions_per_trial must be >= 1");
        return cfg;
    } catch(const json::exception &e) { fail(Errc::parse, std::string("malformed experiment config: ") + e.what()); }
}

// ---------------------------------------------------------------- benchmark

struct BenchmarkReport {
    int         n = 0, k = 0, mu = 0;
    std::size_t samples          = 0;
    double      full_seconds     = 0.0;
    double      reduced_seconds  = 0.0;
    double      ratio            = 0.0; // full / reduced
    double      neighbor_full_seconds    = 0.0;
    double      neighbor_reduced_seconds = 0.0;
    double      neighbor_ratio           = 0.0;
    double      max_relative_deviation   = 0.0;
};

inline constexpr double kAgreementTol = 1e-12;

/// |a - b| relative to the larger magnitude.
[[nodiscard]] inline double relative_deviation(cplx a, cplx b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Times plain forward passes against reduced evaluation on random
/// configurations, and a single-flip neighbor sweep in which the reduced path
/// updates the feature values incrementally (O(mu) per flip).
[[nodiscard]] inline BenchmarkReport benchmark_reduction(const ComputationGraph &g, std::size_t samples, std::uint64_t seed) {
    using clock = std::chrono::steady_clock;
    const auto      r = feature_reduce(g);
    BenchmarkReport rep;
    rep.n       = g.n();
    rep.k       = g.k();
    rep.mu      = r.mu;
    rep.samples = samples;
    RngStream                  rng(seed, stream_key({0xbe4c}));
    std::vector<std::uint64_t> configs(samples);
    for(auto &c : configs) c = rng.next_u64() & low_mask(g.n());

    GraphEvaluator    full(g);
    ReducedEvaluator  reduced(r);
    std::vector<cplx> a(samples), b(samples);
    auto              t0 = clock::now();
    for(std::size_t i = 0; i < samples; ++i) a[i] = full(SpinConfig{configs[i], g.n()});
    auto t1 = clock::now();
    for(std::size_t i = 0; i < samples; ++i) b[i] = reduced(SpinConfig{configs[i], g.n()});
    auto t2 = clock::now();
    rep.full_seconds    = std::chrono::duration<double>(t1 - t0).count();
    rep.reduced_seconds = std::chrono::duration<double>(t2 - t1).count();
    rep.ratio           = rep.reduced_seconds > 0.0 ? rep.full_seconds / rep.reduced_seconds : 0.0;
    for(std::size_t i = 0; i < samples; ++i) rep.max_relative_deviation = std::max(rep.max_relative_deviation, relative_deviation(a[i], b[i]));

    // Neighbor sweep on a subset of samples.
    const std::size_t   sweeps = std::max<std::size_t>(1, samples / static_cast<std::size_t>(g.n()));
    double              sink_full = 0.0, sink_red = 0.0;
    std::vector<double> t(static_cast<std::size_t>(r.mu)), tn(static_cast<std::size_t>(r.mu));
    auto                t3 = clock::now();
    for(std::size_t i = 0; i < sweeps; ++i)
        for(int f = 0; f < g.n(); ++f) sink_full += std::abs(full(SpinConfig{configs[i] ^ (std::uint64_t{1} << f), g.n()}));
    auto t4 = clock::now();
    for(std::size_t i = 0; i < sweeps; ++i) {
        const SpinConfig s{configs[i], g.n()};
        for(int j = 0; j < r.mu; ++j) t[static_cast<std::size_t>(j)] = r.features[static_cast<std::size_t>(j)].evaluate(s);
        for(int f = 0; f < g.n(); ++f) {
            const double sf = s.value(f);
            for(int j = 0; j < r.mu; ++j)
                tn[static_cast<std::size_t>(j)] = t[static_cast<std::size_t>(j)] - 2.0 * r.features[static_cast<std::size_t>(j)].weights[static_cast<std::size_t>(f)] * sf;
            sink_red += std::abs(reduced.at_features(tn));
        }
    }
    auto t5 = clock::now();
    rep.neighbor_full_seconds    = std::chrono::duration<double>(t4 - t3).count();
    rep.neighbor_reduced_seconds = std::chrono::duration<double>(t5 - t4).count();
    rep.neighbor_ratio           = rep.neighbor_reduced_seconds > 0.0 ? rep.neighbor_full_seconds / rep.neighbor_reduced_seconds : 0.0;
    const double sink_dev        = std::abs(sink_full - sink_red) / std::max(1.0, std::abs(sink_full));
    require(rep.max_relative_deviation <= kAgreementTol && sink_dev <= 1e-9, Errc::consistency,
            "reduced evaluation disagrees with the full forward pass (max relative deviation " + format_double(rep.max_relative_deviation) + ")");
    return rep;
}

} // namespace nqs
