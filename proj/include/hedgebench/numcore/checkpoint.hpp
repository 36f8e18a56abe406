#pragma once

#include "hedgebench/numcore/mlp.hpp"
#include "hedgebench/numcore/optimizer.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>

namespace hedgebench::numcore {

using Json = nlohmann::ordered_json;

/// Network weights plus the optimizer bookkeeping needed to resume.
struct Checkpoint {
    Mlp<double> net;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::int64_t step_count = 0;
};

/// Serializes as
///   {"layer_sizes", "activation", "output_head", "weights", "optimizer", "step_count"}
/// in that order. Doubles use the shortest decimal form that round-trips,
/// so save/load reproduces every weight bit for bit.
Json to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const Json& j);

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hedgebench::numcore
