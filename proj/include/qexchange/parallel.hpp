// parallel.hpp: Minimal index-parallel loop over std::thread.
//
// Work is split into contiguous chunks; results must be written to
// per-index slots so the outcome does not depend on the thread count.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qex {

inline std::atomic<int>& default_thread_count() {
    static std::atomic<int> n{1};
    return n;
}

inline void set_default_threads(int n) { default_thread_count() = std::max(1, n); }

template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, int threads = 0) {
    if (threads <= 0) threads = default_thread_count();
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace qex
