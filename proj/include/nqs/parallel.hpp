// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nqs {

namespace detail {
inline std::atomic<int> &default_thread_slot() {
    static std::atomic<int> slot{0};
    return slot;
}
} // namespace detail

/// Worker count used when a caller passes threads <= 0. Zero means "all cores".
inline void set_default_threads(int threads) { detail::default_thread_slot().store(std::max(0, threads)); }

[[nodiscard]] inline int resolve_threads(int threads) {
    if(threads > 0) return threads;
    int configured = detail::default_thread_slot().load();
    if(configured > 0) return configured;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for every i in [0, count). Work items are handed out through an
/// atomic counter, so callers must write results into per-item slots; any
/// reduction over the slots happens afterwards in index order, which keeps the
/// result independent of the worker count.
template<class Body>
void parallel_for(std::size_t count, int threads, Body &&body) {
    const auto workers = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(resolve_threads(threads)), count));
    if(workers <= 1) {
        for(std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr       first_error;
    std::size_t              first_error_index = count;
    std::mutex               error_mutex;
    auto                     worker = [&] {
        for(;;) {
            const std::size_t i = next.fetch_add(1);
            if(i >= count) return;
            try {
                body(i);
            } catch(...) {
                // Items are claimed in increasing order, so every index below a
                // failing one has already been claimed and will finish.
                std::lock_guard lock(error_mutex);
                if(i < first_error_index) {
                    first_error       = std::current_exception();
                    first_error_index = i;
                }
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for(std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    pool.clear();
    if(first_error) std::rethrow_exception(first_error);
}

} // namespace nqs
