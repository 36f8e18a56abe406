#include "hedgebench/baseline/black_scholes.hpp"
#include "hedgebench/errors.hpp"
#include "hedgebench/harness/experiment.hpp"
#include "hedgebench/harness/plot.hpp"
#include "hedgebench/harness/report.hpp"
#include "hedgebench/harness/worker_pool.hpp"
#include "hedgebench/market/io.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <limits>
#include <random>
#include <sstream>

using namespace hedgebench;
using namespace hedgebench::harness;
using agents::Algorithm;

namespace {

// Direct restatement of the two stopping conditions.
bool naive_stop(const std::vector<double>& log, double baseline) {
    const std::size_t n = log.size();
    if (n < 6) return false;
    const double sixth = log[n - 6];
    bool rising = true, below = true;
    for (std::size_t k = 1; k <= 5; ++k) rising = rising && log[n - k] > sixth;
    for (std::size_t k = 1; k <= 6; ++k) below = below && log[n - k] < baseline;
    return rising && below;
}

ExperimentSpec tiny_spec() {
    ExperimentSpec s = ExperimentSpec::desk();
    s.sizes = {64, 32, 3, 32};
    return s;
}

GridCell cell(double rsqp, double lr, int batch, int layers, int width) {
    GridCell c;
    c.config = agents::AgentConfig::tuned(Algorithm::Mcpg).with_grid(lr, batch, layers, width);
    c.validation_rsqp = rsqp;
    return c;
}

ComparisonRow row(std::string name, std::vector<double> per_set) {
    ComparisonRow r;
    r.algorithm = std::move(name);
    r.evaluation = summarize(std::move(per_set));
    return r;
}

}  // namespace

TEST(EarlyStop, Table) {
    EXPECT_TRUE(early_stop_check({0.85, 0.86, 0.87, 0.88, 0.89, 0.90}, 0.9038));
    EXPECT_FALSE(early_stop_check({0.85, 0.86, 0.87, 0.88, 0.89, 0.84}, 0.9038));
    EXPECT_FALSE(early_stop_check({0.95, 0.96, 0.97, 0.98, 0.99, 1.00}, 0.9038));
    EXPECT_FALSE(early_stop_check({}, 0.9038));
    EXPECT_FALSE(early_stop_check({0.86, 0.87, 0.88, 0.89, 0.90}, 0.9038));
    // Only the last six entries matter.
    EXPECT_TRUE(early_stop_check({2.0, 0.5, 0.85, 0.86, 0.87, 0.88, 0.89, 0.90}, 0.9038));
    // A tie with the anchor is not an increase.
    EXPECT_FALSE(early_stop_check({0.85, 0.85, 0.87, 0.88, 0.89, 0.90}, 0.9038));
    // Equal to the baseline is not below it.
    EXPECT_FALSE(early_stop_check({0.85, 0.86, 0.87, 0.88, 0.89, 0.9038}, 0.9038));
    // Non-monotone but all above the anchor still stops.
    EXPECT_TRUE(early_stop_check({0.80, 0.89, 0.82, 0.88, 0.81, 0.85}, 0.9038));
}

TEST(EarlyStop, MatchesRestatementOnRandomLogs) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.8, 1.0);
    std::uniform_int_distribution<int> len(0, 12);
    int stops = 0;
    for (int k = 0; k < 20000; ++k) {
        std::vector<double> log(static_cast<std::size_t>(len(gen)));
        for (auto& x : log) x = u(gen);
        const bool expected = naive_stop(log, 0.95);
        stops += expected;
        EXPECT_EQ(early_stop_check(log, 0.95), expected);
        EXPECT_EQ(early_stop_rule(0.95)(log), expected);
    }
    EXPECT_GT(stops, 0);
}

TEST(Summarize, SingleSetHasUndefinedStd) {
    const auto e = summarize({1.25});
    EXPECT_EQ(e.mean, 1.25);
    EXPECT_EQ(e.std, 0.0);
    EXPECT_FALSE(e.std_defined);
    EXPECT_THROW(summarize({}), ContractError);
}

TEST(Summarize, SampleStd) {
    const auto e = summarize({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(e.mean, 2.5);
    EXPECT_DOUBLE_EQ(e.std, std::sqrt(5.0 / 3.0));
    EXPECT_TRUE(e.std_defined);
}

TEST(Evaluate, DuplicatedSetsHaveZeroStd) {
    const auto spec = tiny_spec();
    const auto set = market::simulate_paths(spec.garch, 128, 12, 100.0, 4);
    const baseline::DeltaHedge dh(spec.env, market::annualized_volatility(spec.garch, spec.env.delta_t));
    const auto e = evaluate(dh, {set, set, set}, spec.env);
    EXPECT_EQ(e.std, 0.0);
    EXPECT_TRUE(e.std_defined);
    EXPECT_EQ(e.per_set.size(), 3u);
    EXPECT_DOUBLE_EQ(e.mean, env::rsqp(baseline::run_delta_hedge(set, spec.env)));
}

TEST(Datasets, SizesDeterminismAndDisjointStreams) {
    const auto spec = tiny_spec();
    const auto a = generate_datasets(spec);
    const auto b = generate_datasets(spec);
    ASSERT_EQ(a.tests.size(), 3u);
    EXPECT_EQ(a.train.size(), 64);
    EXPECT_EQ(a.validation.size(), 32);
    EXPECT_EQ(a.train.prices, b.train.prices);
    EXPECT_EQ(a.tests[2].prices, b.tests[2].prices);
    EXPECT_EQ(a.train.stream_offset, 0u);
    EXPECT_EQ(a.validation.stream_offset, 64u);
    EXPECT_EQ(a.tests[0].stream_offset, 96u);
    EXPECT_EQ(a.tests[1].stream_offset, 128u);
    EXPECT_EQ(a.tests[2].stream_offset, 160u);
    EXPECT_NE(a.train.prices.row(0), a.validation.prices.row(0));
    // Path i of a set equals a one-path simulation on its own stream.
    const auto lone = market::simulate_paths(spec.garch, 1, 12, 100.0, a.tests[1].seed, 1.0 / 12.0, 130);
    EXPECT_EQ(lone.prices.row(0), a.tests[1].prices.row(2));

    auto other = spec;
    other.seed += 1;
    EXPECT_NE(generate_datasets(other).train.prices, a.train.prices);
}

TEST(Datasets, SaveLoadRoundTrip) {
    const auto d = generate_datasets(tiny_spec());
    const auto dir = std::filesystem::temp_directory_path() / "hb_datasets";
    save_datasets(d, dir);
    const auto back = load_datasets(dir);
    std::filesystem::remove_all(dir);
    ASSERT_EQ(back.tests.size(), d.tests.size());
    EXPECT_EQ(back.train.prices, d.train.prices);
    EXPECT_EQ(back.validation.cond_variances, d.validation.cond_variances);
    EXPECT_EQ(back.tests[2].log_returns, d.tests[2].log_returns);
}

TEST(ExperimentSpec, PresetsAndJson) {
    const auto paper = ExperimentSpec::paper();
    EXPECT_EQ(paper.sizes.train, 1 << 19);
    EXPECT_EQ(paper.sizes.validation, 1 << 17);
    EXPECT_EQ(paper.sizes.n_test_sets, 10);
    const auto desk = ExperimentSpec::desk();
    EXPECT_EQ(desk.sizes.train, 1 << 15);
    EXPECT_EQ(desk.sizes.n_test_sets, 5);
    EXPECT_EQ(desk.grid.size(), 81u);
    EXPECT_EQ(desk.algorithms.size(), 8u);

    auto j = to_json(desk);
    const auto back = experiment_spec_from_json(j, ExperimentSpec::paper());
    EXPECT_EQ(to_json(back), j);

    nlohmann::ordered_json bad = {{"budgett", 5}};
    EXPECT_THROW(experiment_spec_from_json(bad, desk), ConfigError);
    bad = {{"sizes", {{"trian", 5}}}};
    EXPECT_THROW(experiment_spec_from_json(bad, desk), ConfigError);
    bad = {{"agent_configs", {{"mcpg", {{"learning_rat", 1e-3}}}}}};
    EXPECT_THROW(experiment_spec_from_json(bad, desk), ConfigError);
    bad = {{"algorithms", {"sac"}}};
    EXPECT_THROW(experiment_spec_from_json(bad, desk), ConfigError);
}

TEST(ExperimentSpec, AgentOverridesAndRepricing) {
    const auto desk = ExperimentSpec::desk();
    const auto s = experiment_spec_from_json({{"agent_configs", {{"mcpg", {{"learning_rate", 1e-3}}}}}}, desk);
    EXPECT_EQ(s.config_for(Algorithm::Mcpg).learning_rate, 1e-3);
    EXPECT_EQ(s.config_for(Algorithm::Mcpg).batch_size, 256);
    EXPECT_EQ(s.config_for(Algorithm::Ppo).learning_rate, 1e-5);

    auto g = to_json(desk.garch);
    g["nu0"] = 2.0 * desk.garch.nu0;
    const auto r = experiment_spec_from_json({{"garch", g}}, desk);
    EXPECT_GT(r.env.premium, desk.env.premium);
    const auto kept = experiment_spec_from_json({{"garch", g}, {"env", {{"premium", 4.0}}}}, desk);
    EXPECT_EQ(kept.env.premium, 4.0);
}

TEST(SelectBestCell, LowestScoreAndTieBreaks) {
    EXPECT_EQ(select_best_cell({cell(1.0, 1e-3, 64, 2, 64)}), 0u);
    EXPECT_EQ(select_best_cell({cell(1.0, 1e-3, 64, 2, 64), cell(0.9, 1e-3, 64, 2, 256)}), 1u);
    // Equal scores: smaller width first.
    EXPECT_EQ(select_best_cell({cell(0.9, 1e-3, 64, 2, 128), cell(0.9, 1e-3, 256, 4, 64)}), 1u);
    // Then fewer layers.
    EXPECT_EQ(select_best_cell({cell(0.9, 1e-3, 64, 3, 64), cell(0.9, 1e-3, 256, 2, 64)}), 1u);
    // Then smaller batch.
    EXPECT_EQ(select_best_cell({cell(0.9, 1e-5, 128, 2, 64), cell(0.9, 1e-5, 64, 2, 64)}), 1u);
    // Then larger learning rate.
    EXPECT_EQ(select_best_cell({cell(0.9, 1e-5, 64, 2, 64), cell(0.9, 1e-3, 64, 2, 64)}), 1u);
    EXPECT_THROW(select_best_cell({}), ContractError);
}

TEST(SelectBestCell, DivergedCellRanksLast) {
    const double inf = std::numeric_limits<double>::infinity();
    auto diverged = cell(inf, 1e-3, 64, 2, 64);
    diverged.diverged = true;
    auto nan = cell(std::numeric_limits<double>::quiet_NaN(), 1e-3, 64, 2, 64);
    EXPECT_EQ(select_best_cell({diverged, nan, cell(5.0, 1e-5, 256, 4, 256)}), 2u);
}

TEST(GridSearch, DivergingCellsNeverAbortTheSweep) {
    auto spec = tiny_spec();
    spec.grid = {{1e300, 1e-3}, {16}, {2}, {8}};
    spec.tuning_budget = 20;
    spec.validation_every = 5;
    const auto data = generate_datasets(spec);
    const auto r = grid_search(spec, Algorithm::Ddpg, data, 1);
    ASSERT_EQ(r.cells.size(), 2u);
    EXPECT_TRUE(r.cells[0].diverged);
    EXPECT_TRUE(std::isinf(r.cells[0].validation_rsqp));
    EXPECT_FALSE(r.cells[1].diverged);
    EXPECT_EQ(r.best_index, 1u);
    EXPECT_EQ(r.best().learning_rate, 1e-3);
}

TEST(GridSearch, ThreadCountDoesNotChangeScores) {
    auto spec = tiny_spec();
    spec.grid = {{1e-3, 1e-4}, {16}, {2}, {8, 16}};
    spec.tuning_budget = 10;
    spec.validation_every = 5;
    const auto data = generate_datasets(spec);
    const auto a = grid_search(spec, Algorithm::Mcpg, data, 1);
    const auto b = grid_search(spec, Algorithm::Mcpg, data, 3);
    ASSERT_EQ(a.cells.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(a.cells[i].validation_rsqp, b.cells[i].validation_rsqp);
    EXPECT_EQ(a.best_index, b.best_index);
}

TEST(Report, SortsByMeanWithStablePValues) {
    std::vector<ComparisonRow> rows{row("c", {1.2, 1.3, 1.25}), row("a", {0.8, 0.81, 0.82}),
                                    row("b", {0.9, 0.89, 0.91}), row("b2", {0.9, 0.89, 0.91})};
    ComparisonRow broken;
    broken.algorithm = "td3";
    broken.error = "missing checkpoint";
    rows.insert(rows.begin(), broken);
    const auto r = build_report(rows, 7);
    ASSERT_EQ(r.rows.size(), 5u);
    EXPECT_EQ(r.rows[0].algorithm, "a");
    EXPECT_EQ(r.rows[1].algorithm, "b");
    EXPECT_EQ(r.rows[2].algorithm, "b2");
    EXPECT_EQ(r.rows[3].algorithm, "c");
    EXPECT_EQ(r.rows[4].algorithm, "td3");
    EXPECT_LT(*r.rows[0].p_value_vs_next, 0.01);
    EXPECT_EQ(*r.rows[1].p_value_vs_next, 0.5);
    EXPECT_FALSE(r.rows[3].p_value_vs_next.has_value());
    EXPECT_FALSE(r.rows[4].p_value_vs_next.has_value());
}

TEST(Report, BaselineOnlyAndSingleSet) {
    auto spec = tiny_spec();
    spec.algorithms.clear();
    spec.sizes.n_test_sets = 1;
    const auto data = generate_datasets(spec);
    const auto r = compare(spec, data, {});
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].algorithm, kBaselineName);
    EXPECT_FALSE(r.rows[0].evaluation.std_defined);
    EXPECT_FALSE(r.rows[0].p_value_vs_next.has_value());
    std::ostringstream csv;
    write_comparison_csv(csv, r);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "algorithm,mean_rsqp,std_rsqp,p_value_vs_next,runtime_s");
    const auto j = to_json(r);
    EXPECT_EQ(j.dump().find("runtime"), std::string::npos);
}

TEST(Report, MissingCheckpointBecomesErrorRow) {
    auto spec = tiny_spec();
    spec.algorithms = {Algorithm::Mcpg};
    const auto data = generate_datasets(spec);
    CompareOptions o;
    o.checkpoint_dir = std::filesystem::temp_directory_path() / "hb_no_such_dir";
    const auto r = compare(spec, data, o);
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_EQ(r.rows[0].algorithm, kBaselineName);
    EXPECT_EQ(r.rows[1].algorithm, "mcpg");
    EXPECT_FALSE(r.rows[1].error.empty());
}

TEST(Plot, CsvLayout) {
    const auto spec = tiny_spec();
    const auto paths = market::simulate_paths(spec.garch, 1, 12, 100.0, 5);
    const baseline::DeltaHedge dh(spec.env, market::annualized_volatility(spec.garch, spec.env.delta_t));
    const auto trace = position_trace({&dh}, paths.path(0), spec.env);
    ASSERT_EQ(trace.positions.size(), 1u);
    EXPECT_EQ(trace.positions[0].size(), 12);
    std::ostringstream out;
    write_position_csv(out, trace);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,S_t,X^{bs_dh}_{t+1}");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        if (rows == 13) EXPECT_EQ(line.back(), ',');
    }
    EXPECT_EQ(rows, 13);
    std::ostringstream svg;
    write_position_svg(svg, trace);
    EXPECT_NE(svg.str().find("<svg"), std::string::npos);
}

TEST(WorkerPool, EnvironmentCapsWorkers) {
    ::setenv("HEDGEBENCH_THREADS", "2", 1);
    EXPECT_EQ(worker_count(8), 2u);
    EXPECT_EQ(worker_count(1), 1u);
    ::setenv("HEDGEBENCH_THREADS", "zero", 1);
    EXPECT_THROW(worker_count(4), ConfigError);
    ::unsetenv("HEDGEBENCH_THREADS");
    EXPECT_EQ(worker_count(3), 3u);
    EXPECT_GE(worker_count(0), 1u);
}

TEST(WorkerPool, EveryIndexOnceAndLowestErrorRethrown) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    try {
        parallel_for(50, 4, [](std::size_t i) {
            if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "7");
    }
}
