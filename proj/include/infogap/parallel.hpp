#pragma once
// Deterministic fan-out over independent cells. Workers pull indices from an
// atomic counter; results land in index order, so output content does not
// depend on the thread count or on scheduling.

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "infogap/error.hpp"

namespace infogap {

template <typename Result>
std::vector<Result> parallel_map(std::size_t n_cells, std::size_t threads,
                                 const std::function<Result(std::size_t)>& fn) {
    if (threads == 0) threads = 1;
    std::vector<Result> results(n_cells);
    if (n_cells == 0) return results;
    if (threads == 1) {
        for (std::size_t i = 0; i < n_cells; ++i) results[i] = fn(i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n_cells) return;
            try {
                results[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t spawn = std::min(threads, n_cells);
    pool.reserve(spawn);
    for (std::size_t t = 0; t < spawn; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

}  // namespace infogap
