#include "pmt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pmt {

namespace {
std::atomic<int> g_cap{0};
}

void set_thread_cap(int n) { g_cap.store(n < 0 ? 0 : n); }

int thread_cap() {
    int n = g_cap.load();
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
    if (n <= 0) return;
    const int workers = static_cast<int>(std::min<std::int64_t>(thread_cap(), n));
    if (workers <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex err_mutex;

    auto body = [&] {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
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
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace pmt
