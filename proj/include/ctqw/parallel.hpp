#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace ctqw {

/// Worker count to use when the caller asks for "auto" (0).
inline std::size_t resolve_threads(std::size_t requested)
{
    if (requested > 0) return requested;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/**
 * Runs job(i) for i in [0, count) on up to `threads` workers and returns the
 * results in index order. Jobs must not share mutable state. If any job throws,
 * the exception of the lowest failing index is rethrown after all workers stop.
 */
template <class Result>
std::vector<Result> parallel_map(std::size_t count, std::size_t threads, const std::function<Result(std::size_t)>& job)
{
    std::vector<Result> results(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};

    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                results[i] = job(i);
            } catch (...) {
                errors[i] = std::current_exception();
                failed = true;
            }
        }
    };

    const std::size_t workers = std::min(resolve_threads(threads), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

} // namespace ctqw
