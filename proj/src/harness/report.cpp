#include "hedgebench/harness/report.hpp"

#include "hedgebench/agents/policy.hpp"
#include "hedgebench/baseline/black_scholes.hpp"
#include "hedgebench/errors.hpp"
#include "hedgebench/harness/stats.hpp"
#include "hedgebench/harness/worker_pool.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace hedgebench::harness {

ComparisonReport build_report(std::vector<ComparisonRow> rows, std::uint64_t seed) {
    std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
        const bool ea = !a.error.empty();
        const bool eb = !b.error.empty();
        if (ea || eb) return !ea && eb;
        return a.evaluation.mean < b.evaluation.mean;
    });
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].p_value_vs_next.reset();
        if (i + 1 >= rows.size() || !rows[i].error.empty() || !rows[i + 1].error.empty()) continue;
        const auto& a = rows[i].evaluation.per_set;
        const auto& b = rows[i + 1].evaluation.per_set;
        if (a.size() >= 2 && b.size() >= 2) {
            rows[i].p_value_vs_next = welch_t_test_one_sided(a, b);
        }
    }
    return {seed, std::move(rows)};
}

ComparisonRow baseline_row(const ExperimentSpec& spec, const Datasets& data) {
    const double sigma = market::annualized_volatility(spec.garch, spec.env.delta_t);
    const baseline::DeltaHedge dh(spec.env, sigma);
    ComparisonRow row;
    row.algorithm = kBaselineName;
    row.evaluation = evaluate(dh, data.tests, spec.env);
    return row;
}

ComparisonReport compare(const ExperimentSpec& spec, const Datasets& data, const CompareOptions& options) {
    spec.validate();
    ComparisonRow base = baseline_row(spec, data);
    const double baseline_validation = env::rsqp(baseline::run_delta_hedge(data.validation, spec.env));

    std::vector<ComparisonRow> rows(spec.algorithms.size());
    parallel_for(rows.size(), options.threads, [&](std::size_t i) {
        const agents::Algorithm a = spec.algorithms[i];
        ComparisonRow& row = rows[i];
        row.algorithm = agents::to_string(a);
        try {
            if (options.checkpoint_dir) {
                const auto path = *options.checkpoint_dir / (row.algorithm + ".json");
                if (!std::filesystem::exists(path)) {
                    row.error = "missing checkpoint " + path.string();
                    return;
                }
                const auto ckpt = agents::load_agent(path);
                row.evaluation = evaluate(ckpt.policy, data.tests, spec.env);
                row.updates = ckpt.update_count;
                return;
            }
            agents::Policy policy;
            const TrialResult trial = run_trial(spec, a, data, baseline_validation, &policy);
            row.evaluation = trial.evaluation;
            row.runtime_s = trial.runtime_s;
            row.updates = trial.trace.updates_done;
            row.early_stopped = trial.trace.early_stopped;
            if (options.save_dir) {
                std::filesystem::create_directories(*options.save_dir);
                agents::save_agent({policy, trial.config, spec.env, derive_seed(spec.seed, static_cast<std::uint64_t>(a) + 1),
                                    trial.trace.best_update},
                                   *options.save_dir / (row.algorithm + ".json"));
            }
        } catch (const agents::TrainingDivergedError& e) {
            row.error = e.what();
            row.updates = e.trace().updates_done;
        } catch (const IoError& e) {
            row.error = e.what();
        } catch (const ConfigError& e) {
            row.error = e.what();
        }
    });
    rows.push_back(std::move(base));
    return build_report(std::move(rows), spec.seed);
}

void write_comparison_csv(std::ostream& out, const ComparisonReport& r) {
    out << "algorithm,mean_rsqp,std_rsqp,p_value_vs_next,runtime_s\n";
    out << std::setprecision(10);
    for (const auto& row : r.rows) {
        out << row.algorithm << ',';
        if (row.error.empty()) {
            out << row.evaluation.mean << ',' << row.evaluation.std;
        } else {
            out << ',';
        }
        out << ',';
        if (row.p_value_vs_next) out << *row.p_value_vs_next;
        out << ',' << std::fixed << std::setprecision(3) << row.runtime_s << std::defaultfloat << std::setprecision(10)
            << '\n';
    }
}

nlohmann::ordered_json to_json(const ComparisonReport& r) {
    nlohmann::ordered_json j;
    j["seed"] = r.seed;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
        nlohmann::ordered_json e;
        e["algorithm"] = row.algorithm;
        if (row.error.empty()) {
            e["per_set_rsqp"] = row.evaluation.per_set;
            e["mean_rsqp"] = row.evaluation.mean;
            e["std_rsqp"] = row.evaluation.std;
            e["std_defined"] = row.evaluation.std_defined;
        } else {
            e["error"] = row.error;
        }
        e["p_value_vs_next"] = row.p_value_vs_next ? nlohmann::ordered_json(*row.p_value_vs_next)
                                                   : nlohmann::ordered_json(nullptr);
        e["updates"] = row.updates;
        e["early_stopped"] = row.early_stopped;
        rows.push_back(e);
    }
    j["rows"] = rows;
    return j;
}

void write_comparison(const ComparisonReport& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "comparison.csv");
    std::ofstream json(dir / "comparison.json");
    if (!csv || !json) {
        throw IoError("cannot write comparison files in " + dir.string());
    }
    write_comparison_csv(csv, r);
    json << to_json(r).dump(2) << '\n';
}

}  // namespace hedgebench::harness
