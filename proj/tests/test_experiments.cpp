// SPDX-License-Identifier: Apache-2.0

#include "nqs/experiments.hpp"

#include <gtest/gtest.h>

using namespace nqs;

namespace {

ExperimentConfig dicke_sweep(int n) {
    ExperimentConfig cfg;
    cfg.name        = "dicke";
    cfg.series      = {{"exact", DickeSpec{n}, {}}};
    cfg.n_grid      = {n};
    cfg.region_mode = RegionMode::random_subset;
    cfg.sizes.clear();
    for(int s = 1; s < n; ++s) cfg.sizes.push_back(s);
    cfg.trials            = 2;
    cfg.regions_per_trial = 3;
    return cfg;
}

} // namespace

TEST(Sweep, DickeMeansMatchAnalytic) {
    const auto res = run_sweep(dicke_sweep(12));
    ASSERT_EQ(res.points.size(), 11u);
    for(const auto &p : res.points) {
        EXPECT_NEAR(p.mean, dicke_entropy(12, p.subsystem_size), 1e-10);
        EXPECT_LT(p.std_rows, 1e-12);
        EXPECT_EQ(p.trial_count, 2);
        EXPECT_EQ(p.row_count, 6);
    }
}

TEST(Sweep, SingleTrialSingleRegionGivesOneRow) {
    ExperimentConfig cfg;
    cfg.series            = {{"sn", SnnqsSpec{}, {}}};
    cfg.n_grid            = {8};
    cfg.region_mode       = RegionMode::random_contiguous;
    cfg.sizes             = {3};
    cfg.trials            = 1;
    cfg.regions_per_trial = 1;
    const auto res        = run_sweep(cfg);
    ASSERT_EQ(res.rows.size(), 1u);
    const auto csv = sweep_csv(res);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Sweep, CsvIsIndependentOfThreadCount) {
    ExperimentConfig cfg;
    cfg.series            = {{"sn", SnnqsSpec{}, {}}, {"cos", CosnetSpec{}, {2, 6}}};
    cfg.n_grid            = {8, 10};
    cfg.trials            = 3;
    cfg.regions_per_trial = 2;
    cfg.seed              = 99;
    cfg.threads           = 1;
    const auto one        = sweep_csv(run_sweep(cfg));
    cfg.threads           = 4;
    EXPECT_EQ(one, sweep_csv(run_sweep(cfg)));
    cfg.seed = 100;
    EXPECT_NE(one, sweep_csv(run_sweep(cfg)));
}

TEST(Sweep, DegenerateMajorityIsAnError) {
    // A zero-weight output gives a vanishing state in every trial.
    ExperimentConfig cfg;
    MlpSpec          mlp;
    mlp.sigma_w = 0.0;
    mlp.sigma_b = 0.0;
    mlp.output  = OutputMode::amplitude;
    mlp.heads   = HeadInit::random;
    cfg.series  = {{"zero", mlp, {}}};
    cfg.n_grid  = {6};
    cfg.trials  = 2;
    try {
        (void)run_sweep(cfg);
        FAIL() << "degenerate sweep accepted";
    } catch(const Error &e) { EXPECT_EQ(e.code(), Errc::degenerate_state); }
}

TEST(Sweep, CosnetKSweepAttachesPage) {
    ExperimentConfig cfg;
    CosnetSpec       cs;
    cs.scale_weights_by_n = false;
    cfg.series            = {{"cos", cs, {1, 64}}};
    cfg.n_grid            = {8};
    cfg.sizes             = {3};
    cfg.trials            = 4;
    cfg.regions_per_trial = 2;
    const auto res        = run_cosnet_k_sweep(cfg);
    ASSERT_EQ(res.points.size(), 2u);
    for(const auto &p : res.points) {
        ASSERT_TRUE(p.page.has_value());
        EXPECT_NEAR(*p.page, page_value(3, 8), 1e-15);
    }
    EXPECT_LT(res.points[0].mean, res.points[1].mean);
    EXPECT_LT(res.points[0].mean, *res.points[0].page);
}

TEST(Config, ParsesAndRejectsUnknownFields) {
    const auto cfg = experiment_from_json(json::parse(R"({"name": "x", "n": [8, 10], "region_mode": "sweep", "trials": 2,
        "series": [{"name": "a", "ansatz": {"family": "snnqs", "activation": "tanh", "complex_mode": "imag_only"}}]})"));
    EXPECT_EQ(cfg.n_grid, (std::vector<int>{8, 10}));
    EXPECT_EQ(cfg.region_mode, RegionMode::sweep);
    EXPECT_EQ(resolved_sizes(cfg, 10), (std::vector<int>{1, 2, 3, 4, 5}));
    EXPECT_THROW((void)experiment_from_json(json::parse(R"({"series": [], "trails": 3})")), Error);
    const auto back = experiment_from_json(experiment_to_json(cfg));
    EXPECT_EQ(experiment_to_json(back), experiment_to_json(cfg));
}

TEST(Benchmark, ReducedEvaluationAgrees) {
    MlpSpec spec;
    spec.n         = 12;
    spec.width     = 5;
    spec.layernorm = false;
    RngStream  rng(1, 1);
    const auto rep = benchmark_reduction(build_mlp(spec, rng), 2000, 5);
    EXPECT_EQ(rep.mu, 5);
    EXPECT_LE(rep.max_relative_deviation, kAgreementTol);
    EXPECT_GT(rep.full_seconds, 0.0);
}
