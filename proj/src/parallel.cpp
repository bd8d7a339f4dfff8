#include "fedsim/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace fedsim {

size_t worker_cap() {
    if (const char* env = std::getenv("FEDSIM_THREADS"); env != nullptr && *env != '\0') {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

void parallel_for(size_t n, size_t max_threads, const std::function<void(size_t)>& fn) {
    if (n == 0) return;
    size_t workers = max_threads == 0 ? worker_cap() : max_threads;
    if (workers > n) workers = n;

    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::vector<std::exception_ptr> errors(n);
    std::atomic<size_t> next{0};
    auto body = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace fedsim
