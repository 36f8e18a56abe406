#pragma once

#include "hedgebench/harness/experiment.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hedgebench::harness {

inline constexpr const char* kBaselineName = "bs_dh";

struct ComparisonRow {
    std::string algorithm;
    Evaluation evaluation;
    /// One-sided Welch p-value of this row's mean being lower than the next
    /// row's; absent on the last row, with a single test set, or on error rows.
    std::optional<double> p_value_vs_next;
    double runtime_s = 0.0;
    std::int64_t updates = 0;
    bool early_stopped = false;
    /// Set when the row could not be produced (e.g. missing checkpoint).
    std::string error;
};

struct ComparisonReport {
    std::uint64_t seed = 0;
    std::vector<ComparisonRow> rows;
};

/// Stable sort by mean RSQP (error rows last, in insertion order), then the
/// adjacent-row p-values.
ComparisonReport build_report(std::vector<ComparisonRow> rows, std::uint64_t seed = 0);

struct CompareOptions {
    std::size_t threads = 1;
    /// When set, policies are loaded from <dir>/<algorithm>.json instead of
    /// trained; a missing file becomes an error row.
    std::optional<std::filesystem::path> checkpoint_dir;
    /// When set, trained policies are saved there as <algorithm>.json.
    std::optional<std::filesystem::path> save_dir;
};

/// Trains (or loads) every algorithm in the spec, evaluates it on every test
/// set and adds the B-S DH baseline row.
ComparisonReport compare(const ExperimentSpec& spec, const Datasets& data, const CompareOptions& options);

/// Baseline row: B-S DH at the stationary volatility on every test set.
ComparisonRow baseline_row(const ExperimentSpec& spec, const Datasets& data);

/// algorithm,mean_rsqp,std_rsqp,p_value_vs_next,runtime_s
void write_comparison_csv(std::ostream& out, const ComparisonReport& r);
/// Full per-set vectors. Contains no wall-clock fields, so equal inputs give
/// byte-identical output.
nlohmann::ordered_json to_json(const ComparisonReport& r);
/// comparison.csv and comparison.json in `dir`.
void write_comparison(const ComparisonReport& r, const std::filesystem::path& dir);

}  // namespace hedgebench::harness
