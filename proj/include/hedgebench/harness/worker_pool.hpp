#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace hedgebench::harness {

/// Worker count: `requested` (0 = hardware concurrency), capped by the
/// HEDGEBENCH_THREADS environment variable when set, never below 1.
std::size_t worker_count(std::size_t requested = 0);

/// Runs fn(i) for i in [0, n) on at most `workers` threads. Each index runs
/// exactly once; the first exception (lowest index) is rethrown after all
/// workers finish. workers <= 1 runs inline, in index order.
template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F&& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t count = workers < n ? workers : n;
    pool.reserve(count);
    for (std::size_t k = 0; k < count; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace hedgebench::harness
