#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace fracfga {

/// Worker count: FRACFGA_WORKERS env var if set, else hardware concurrency.
inline int default_workers() {
    if (const char* env = std::getenv("FRACFGA_WORKERS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Splits [0, n) into `workers` contiguous chunks and runs
/// fn(begin, end, worker_index) on each. Chunk boundaries depend only on
/// (n, workers), so any ordered merge of per-worker results is reproducible.
/// The first exception thrown by any worker is rethrown on the caller.
inline void parallel_chunks(std::size_t n, int workers,
                            const std::function<void(std::size_t, std::size_t, int)>& fn) {
    if (workers < 1) workers = 1;
    if (n == 0) return;
    if (workers == 1 || n < 2) {
        fn(0, n, 0);
        return;
    }
    const std::size_t nw = std::min<std::size_t>(workers, n);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nw);
    const std::size_t base = n / nw, rem = n % nw;
    std::size_t begin = 0;
    for (std::size_t w = 0; w < nw; ++w) {
        const std::size_t len = base + (w < rem ? 1 : 0);
        const std::size_t end = begin + len;
        pool.emplace_back([&, begin, end, w] {
            try {
                fn(begin, end, static_cast<int>(w));
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
        begin = end;
    }
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

} // namespace fracfga
