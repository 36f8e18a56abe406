#pragma once

#include "hedgebench/env/hedge_env.hpp"
#include "hedgebench/market/garch.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace hedgebench::harness {

struct PositionTrace {
    Eigen::VectorXd prices;                 // S_0..S_T
    std::vector<std::string> names;         // one per strategy
    std::vector<Eigen::VectorXd> positions; // X_1..X_T per strategy
};

PositionTrace position_trace(const std::vector<const env::Strategy*>& strategies, const market::PricePath& path,
                             const env::EnvConfig& config);

/// Columns t,S_t,X^{<name>}_{t+1}...; the row at t = T carries the price only.
void write_position_csv(std::ostream& out, const PositionTrace& trace);
/// Price on the left axis, positions in [0, 1] on the right axis.
void write_position_svg(std::ostream& out, const PositionTrace& trace);

/// Writes <stem>.svg and <stem>.csv.
void emit_position_plot(const std::vector<const env::Strategy*>& strategies, const market::PricePath& path,
                        const env::EnvConfig& config, const std::filesystem::path& stem);

}  // namespace hedgebench::harness
