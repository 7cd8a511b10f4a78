#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace athena {

/// Runs fn(0..task_count) on up to `jobs` threads. Tasks must be independent;
/// results should go into preallocated slots so the outcome is identical to
/// the sequential run.
inline void run_parallel(std::size_t task_count, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || task_count <= 1) {
        for (std::size_t i = 0; i < task_count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < task_count; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> threads;
    auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), task_count);
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
}

}  // namespace athena
