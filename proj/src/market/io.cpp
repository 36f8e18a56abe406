#include "hedgebench/market/io.hpp"

#include "hedgebench/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace hedgebench::market {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell.erase(std::remove_if(cell.begin(), cell.end(), [](unsigned char c) { return std::isspace(c); }),
                   cell.end());
        out.push_back(cell);
    }
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    std::array<char, sizeof(T)> bytes;
    if (!in.read(bytes.data(), sizeof(T))) {
        throw IoError("pathset: truncated file");
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

constexpr std::array<char, 4> kMagic = {'H', 'B', 'P', 'S'};
constexpr std::uint8_t kVersion = 1;

}  // namespace

Eigen::VectorXd read_return_series(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("return series: empty input");
    }
    const auto header = split_csv(line);
    int price_col = -1;
    int return_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto name = lower(header[i]);
        if (name == "price") price_col = static_cast<int>(i);
        if (name == "return") return_col = static_cast<int>(i);
    }
    if ((price_col < 0) == (return_col < 0)) {
        throw ConfigError("return series: header needs exactly one of 'price' or 'return'");
    }
    const int col = price_col >= 0 ? price_col : return_col;
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        if (static_cast<int>(cells.size()) <= col) {
            throw ConfigError("return series: line " + std::to_string(line_no) + " has too few columns");
        }
        try {
            std::size_t used = 0;
            values.push_back(std::stod(cells[static_cast<std::size_t>(col)], &used));
        } catch (const std::exception&) {
            throw ConfigError("return series: line " + std::to_string(line_no) + " is not numeric");
        }
    }
    if (price_col < 0) {
        return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    }
    if (values.size() < 2) {
        throw ConfigError("return series: need at least two prices");
    }
    Eigen::VectorXd r(static_cast<Eigen::Index>(values.size() - 1));
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (!(values[i] > 0.0) || !(values[i - 1] > 0.0)) {
            throw ConfigError("return series: prices must be positive");
        }
        r(static_cast<Eigen::Index>(i - 1)) = std::log(values[i] / values[i - 1]);
    }
    return r;
}

Eigen::VectorXd read_return_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return read_return_series(in);
}

nlohmann::ordered_json to_json(const GjrGarchParams& p) {
    nlohmann::ordered_json j;
    j["mu"] = p.mu;
    j["nu0"] = p.nu0;
    j["nu"] = p.nu;
    j["lambda"] = p.lambda;
    j["xi"] = p.xi;
    return j;
}

GjrGarchParams params_from_json(const nlohmann::ordered_json& j) {
    static const std::array<std::string, 5> kKeys = {"mu", "nu0", "nu", "lambda", "xi"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
            throw ConfigError("garch params: unknown key '" + key + "'");
        }
    }
    GjrGarchParams p;
    try {
        p.mu = j.at("mu").get<double>();
        p.nu0 = j.at("nu0").get<double>();
        p.nu = j.at("nu").get<double>();
        p.lambda = j.at("lambda").get<double>();
        p.xi = j.at("xi").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("garch params: ") + e.what());
    }
    return p;
}

void write_pathset(const PathSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(kMagic.data(), kMagic.size());
    put<std::uint8_t>(out, kVersion);
    const auto n = static_cast<std::uint64_t>(set.size());
    const auto horizon = static_cast<std::uint64_t>(set.horizon());
    put(out, n);
    put(out, horizon);
    put(out, set.seed);
    put(out, set.stream_offset);
    put(out, set.s0);
    put(out, set.delta_t);
    for (Eigen::Index i = 0; i < set.size(); ++i) {
        for (Eigen::Index t = 0; t <= set.horizon(); ++t) put(out, set.prices(i, t));
        for (Eigen::Index t = 0; t < set.horizon(); ++t) put(out, set.log_returns(i, t));
        for (Eigen::Index t = 0; t < set.horizon(); ++t) put(out, set.cond_variances(i, t));
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }

    nlohmann::ordered_json side;
    side["format"] = "HBPS";
    side["version"] = kVersion;
    side["params"] = to_json(set.params);
    side["seed"] = set.seed;
    side["stream_offset"] = set.stream_offset;
    side["paths"] = n;
    side["horizon"] = horizon;
    side["s0"] = set.s0;
    side["delta_t"] = set.delta_t;
    std::ofstream meta(path.string() + ".json");
    if (!meta) {
        throw IoError("cannot write sidecar for " + path.string());
    }
    meta << side.dump(2) << '\n';
}

PathSet read_pathset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw IoError(path.string() + " is not an HBPS path file");
    }
    if (get<std::uint8_t>(in) != kVersion) {
        throw IoError(path.string() + ": unsupported HBPS version");
    }
    PathSet set;
    const auto n = static_cast<Eigen::Index>(get<std::uint64_t>(in));
    const auto horizon = static_cast<Eigen::Index>(get<std::uint64_t>(in));
    set.seed = get<std::uint64_t>(in);
    set.stream_offset = get<std::uint64_t>(in);
    set.s0 = get<double>(in);
    set.delta_t = get<double>(in);
    set.prices.resize(n, horizon + 1);
    set.log_returns.resize(n, horizon);
    set.cond_variances.resize(n, horizon);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index t = 0; t <= horizon; ++t) set.prices(i, t) = get<double>(in);
        for (Eigen::Index t = 0; t < horizon; ++t) set.log_returns(i, t) = get<double>(in);
        for (Eigen::Index t = 0; t < horizon; ++t) set.cond_variances(i, t) = get<double>(in);
    }

    std::ifstream meta(path.string() + ".json");
    if (!meta) {
        throw IoError("missing sidecar " + path.string() + ".json");
    }
    const auto side = nlohmann::ordered_json::parse(meta);
    set.params = params_from_json(side.at("params"));
    if (side.at("seed").get<std::uint64_t>() != set.seed) {
        throw IoError(path.string() + ": sidecar seed disagrees with binary header");
    }
    return set;
}

}  // namespace hedgebench::market
