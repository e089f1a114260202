#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace petersson {

// Worker count: PETERSSON_WORKERS if set, else the given default (>= 1).
inline int worker_count(int fallback = 1) {
    if (const char* env = std::getenv("PETERSSON_WORKERS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return std::max(1, fallback);
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. Jobs are taken in
// index order; callers store results by index so output order never depends
// on scheduling. The first exception is rethrown after all threads join.
inline void parallel_for(long n, int workers, const std::function<void(long)>& fn) {
    workers = static_cast<int>(std::max<long>(1, std::min<long>(workers, n)));
    if (workers == 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::mutex mu;
    long next = 0;
    std::exception_ptr err;
    auto body = [&] {
        for (;;) {
            long i;
            {
                std::lock_guard<std::mutex> lk(mu);
                if (next >= n || err) return;
                i = next++;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace petersson
