#include "p2lr/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace p2lr {
namespace {

std::atomic<std::size_t> g_override{0};

std::size_t env_workers() {
    static const std::size_t value = [] {
        if (const char* env = std::getenv("P2LR_THREADS")) {
            try {
                const long parsed = std::stol(env);
                if (parsed > 0) {
                    return static_cast<std::size_t>(parsed);
                }
            } catch (const std::exception&) {
            }
        }
        return std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }();
    return value;
}

// Below this many items the spawn cost dominates.
constexpr std::size_t kMinItemsPerWorker = 64;

} // namespace

std::size_t worker_count() {
    const std::size_t forced = g_override.load();
    return forced > 0 ? forced : env_workers();
}

void set_worker_count(std::size_t workers) {
    g_override.store(workers);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const std::size_t workers =
        std::min(worker_count(), std::max<std::size_t>(1, n / kMinItemsPerWorker));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }

    // One slot per worker; the lowest failing chunk wins so the reported
    // sample index does not depend on thread timing.
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) {
            break;
        }
        pool.emplace_back([&, w, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) {
                    body(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& error : errors) {
        if (error) {
            std::rethrow_exception(error);
        }
    }
}

} // namespace p2lr
