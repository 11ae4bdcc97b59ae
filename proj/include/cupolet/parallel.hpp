#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cupolet {

/// Runs fn(0..n-1) across `workers` threads (0 = hardware concurrency).
/// Work items must only write to their own slots; the first exception thrown
/// by any item is rethrown on the calling thread after all workers join.
template <class Fn>
inline void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (workers <= 0) {
        unsigned hc = std::thread::hardware_concurrency();
        workers = hc == 0 ? 1 : static_cast<int>(hc);
    }
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    auto spawn = static_cast<std::size_t>(workers) < n ? static_cast<std::size_t>(workers) : n;
    pool.reserve(spawn);
    for (std::size_t w = 0; w < spawn; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace cupolet
