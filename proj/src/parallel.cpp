#include "surfmeas/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace surfmeas {

namespace {
std::atomic<unsigned> g_workers{1};
}

void set_worker_count(unsigned workers) { g_workers.store(std::max(1u, workers)); }

unsigned worker_count() { return g_workers.load(); }

void parallel_for_blocks(std::size_t blocks, const std::function<void(std::size_t)>& body) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), blocks));
    if (workers <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) body(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t b = next.fetch_add(1);
                if (b >= blocks) return;
                try {
                    body(b);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next.store(blocks);
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace surfmeas
