#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace rsmdp {

// Worker cap: RSMDP_THREADS when set (minimum 1), otherwise the hardware
// concurrency.
inline unsigned worker_limit() {
    if (const char* env = std::getenv("RSMDP_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
        return 1;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Splits [0, total) into contiguous chunks, one per worker, and runs
// fn(worker_index, begin, end) concurrently.  Small ranges run inline on a
// single chunk.  Callers own any reduction; determinism must come from the
// fixed chunk boundaries, never from completion order.
inline void parallel_chunks(std::uint64_t total,
                            const std::function<void(unsigned, std::uint64_t, std::uint64_t)>& fn) {
    if (total == 0) return;
    const std::uint64_t min_chunk = 1024;
    unsigned workers = static_cast<unsigned>(
        std::min<std::uint64_t>(worker_limit(), (total + min_chunk - 1) / min_chunk));
    if (workers <= 1) {
        fn(0, 0, total);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::uint64_t per = total / workers;
    const std::uint64_t extra = total % workers;
    std::uint64_t begin = 0;
    for (unsigned w = 0; w < workers; ++w) {
        const std::uint64_t end = begin + per + (w < extra ? 1 : 0);
        pool.emplace_back([&fn, w, begin, end] { fn(w, begin, end); });
        begin = end;
    }
    for (auto& t : pool) t.join();
}

} // namespace rsmdp
