#include "hedgebench/harness/worker_pool.hpp"

#include "hedgebench/errors.hpp"

#include <cstdlib>
#include <string>

namespace hedgebench::harness {

std::size_t worker_count(std::size_t requested) {
    std::size_t n = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* cap = std::getenv("HEDGEBENCH_THREADS"); cap != nullptr && *cap != '\0') {
        char* end = nullptr;
        const long v = std::strtol(cap, &end, 10);
        if (*end != '\0' || v < 1) {
            throw ConfigError("HEDGEBENCH_THREADS must be a positive integer, got '" + std::string(cap) + "'");
        }
        n = std::min(n, static_cast<std::size_t>(v));
    }
    return std::max<std::size_t>(n, 1);
}

}  // namespace hedgebench::harness
