#include "hadamard/parallel.hpp"

#include "hadamard/error.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hadamard {

namespace {
std::atomic<int> g_threads{1};
}

int thread_count()
{
    return g_threads.load();
}

void set_thread_count(int n)
{
    if (n < 1) {
        throw InvalidInput("thread count must be at least 1");
    }
    g_threads.store(n);
}

void parallel_for(Index n, const std::function<void(Index)>& body)
{
    const Index workers = std::min<Index>(thread_count(), n);
    if (workers <= 1) {
        for (Index i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const Index chunk = (n + workers - 1) / workers;
    for (Index w = 0; w < workers; ++w) {
        const Index begin = w * chunk;
        const Index end = std::min(n, begin + chunk);
        pool.emplace_back([&, begin, end] {
            try {
                for (Index i = begin; i < end; ++i) {
                    body(i);
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

} // namespace hadamard
