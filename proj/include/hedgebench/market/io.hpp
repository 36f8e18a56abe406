#pragma once

#include "hedgebench/market/garch.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <istream>

namespace hedgebench::market {

/// Log-returns from a CSV with a header row. Recognized columns are `price`
/// (converted to log-returns) or `return` (taken as log-returns); a `date`
/// column is ignored.
Eigen::VectorXd read_return_series(std::istream& in);
Eigen::VectorXd read_return_series(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const GjrGarchParams& p);
GjrGarchParams params_from_json(const nlohmann::ordered_json& j);

/// Binary layout (little-endian):
///   "HBPS" | u8 version=1 | u64 n | u64 T | u64 seed | u64 stream_offset
///   | f64 s0 | f64 delta_t | per path: prices[T+1], log_returns[T], cond_variances[T]
/// A JSON sidecar `<path>.json` records the parameters and seed.
void write_pathset(const PathSet& set, const std::filesystem::path& path);
PathSet read_pathset(const std::filesystem::path& path);

}  // namespace hedgebench::market
