#include "hedgebench/numcore/checkpoint.hpp"
#include "hedgebench/numcore/mlp.hpp"
#include "hedgebench/numcore/optimizer.hpp"

#include <fstream>
#include <sstream>

namespace hedgebench::numcore {

std::string to_string(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }

std::string to_string(OutputHead h) { return h == OutputHead::Identity ? "identity" : "logistic"; }

std::string to_string(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

Activation activation_from_string(std::string_view s) {
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    throw ConfigError("unknown activation '" + std::string(s) + "'");
}

OutputHead output_head_from_string(std::string_view s) {
    if (s == "identity") return OutputHead::Identity;
    if (s == "logistic") return OutputHead::Logistic;
    throw ConfigError("unknown output head '" + std::string(s) + "'");
}

OptimizerKind optimizer_kind_from_string(std::string_view s) {
    if (s == "sgd") return OptimizerKind::Sgd;
    if (s == "adam") return OptimizerKind::Adam;
    throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

Json to_json(const Checkpoint& c) {
    Json j;
    j["layer_sizes"] = c.net.layer_sizes();
    j["activation"] = to_string(c.net.hidden_activation());
    j["output_head"] = to_string(c.net.output_head());
    const auto& p = c.net.parameters();
    j["weights"] = std::vector<double>(p.data(), p.data() + p.size());
    j["optimizer"] = to_string(c.optimizer);
    j["step_count"] = c.step_count;
    return j;
}

Checkpoint checkpoint_from_json(const Json& j) {
    try {
        Checkpoint c;
        c.net = Mlp<double>(j.at("layer_sizes").get<std::vector<int>>(),
                            activation_from_string(j.at("activation").get<std::string>()),
                            output_head_from_string(j.at("output_head").get<std::string>()));
        const auto w = j.at("weights").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(w.size()) != c.net.parameter_count()) {
            throw ConfigError("checkpoint: weight count does not match layer_sizes");
        }
        c.net.set_parameters(Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
        c.optimizer = optimizer_kind_from_string(j.at("optimizer").get<std::string>());
        c.step_count = j.at("step_count").get<std::int64_t>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("checkpoint: malformed document: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write checkpoint " + path.string());
    }
    out << to_json(c).dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read checkpoint " + path.string());
    }
    return checkpoint_from_json(Json::parse(in));
}

}  // namespace hedgebench::numcore
