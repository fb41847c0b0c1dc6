#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace reachcert {

/// Process-wide worker count. 0 means "use hardware concurrency". The CLI
/// sets this from --workers; tests set it to probe determinism.
inline int& worker_count() {
    static int count = 0;
    return count;
}

inline int effective_workers() {
    int w = worker_count();
    if (w > 0) return w;
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Runs fn(i) for i in [0, n). Work items are claimed in chunks through an
/// atomic cursor, so scheduling varies between runs, but callers must write
/// results by index; reductions over index order then stay deterministic
/// for any worker count. The first exception thrown is rethrown here.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t grain = 1) {
    if (n == 0) return;
    int workers = effective_workers();
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (grain == 0) grain = 1;

    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto body = [&]() {
        for (;;) {
            std::size_t begin = cursor.fetch_add(grain);
            if (begin >= n || failed.load(std::memory_order_relaxed)) return;
            std::size_t end = std::min(begin + grain, n);
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    int spawn = std::min<std::size_t>(static_cast<std::size_t>(workers), n) - 1;
    pool.reserve(spawn);
    for (int t = 0; t < spawn; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (failed.load()) std::rethrow_exception(error);
}

}  // namespace reachcert
