#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace darwinize {

// Worker count for `requested` (0 = hardware concurrency), never above n.
inline int worker_count(int requested, Eigen::Index n) {
    int w = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    w = std::max(w, 1);
    return static_cast<int>(std::min<Eigen::Index>(w, std::max<Eigen::Index>(n, 1)));
}

// Calls fn(i) for every i in [0, n). Tasks are handed out dynamically, so fn
// must write only to slots owned by i; the first exception is rethrown after
// all workers stop.
template <class F>
void parallel_for(Eigen::Index n, int threads, F&& fn) {
    const int workers = worker_count(threads, n);
    if (workers == 1) {
        for (Eigen::Index i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<Eigen::Index> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (Eigen::Index i; !failed.load() && (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace darwinize
