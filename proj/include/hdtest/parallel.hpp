#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hdtest {

/// Resolves a requested worker count; 0 means "use the hardware".
inline unsigned effective_threads(unsigned requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs run_chunk(c) for c in [0, chunk_count) on up to `threads` workers.
///
/// Chunk identity, not thread identity, must drive any randomness or output
/// slot inside run_chunk; results are then independent of the worker count.
/// The first exception thrown by a worker is rethrown on the caller.
inline void parallel_chunks(std::size_t chunk_count, unsigned threads,
                            const std::function<void(std::size_t)>& run_chunk) {
    threads = effective_threads(threads);
    if (chunk_count == 0) return;
    if (threads <= 1 || chunk_count == 1) {
        for (std::size_t c = 0; c < chunk_count; ++c) run_chunk(c);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= chunk_count) break;
            try {
                run_chunk(c);
            } catch (...) {
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
                failed.store(true, std::memory_order_relaxed);
                break;
            }
        }
    };

    const unsigned nworkers =
        static_cast<unsigned>(std::min<std::size_t>(threads, chunk_count));
    std::vector<std::thread> pool;
    pool.reserve(nworkers);
    for (unsigned t = 0; t < nworkers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace hdtest
