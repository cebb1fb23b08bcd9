#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace modelmap {

// Static block partition of [begin, end). Each index is processed exactly
// once; callers are responsible for making per-index work independent, so
// the result cannot depend on the number of threads.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, int threads, Fn&& fn) {
    const std::size_t count = end > begin ? end - begin : 0;
    if (count == 0) return;
    std::size_t nthreads = threads > 0 ? static_cast<std::size_t>(threads)
                                       : std::thread::hardware_concurrency();
    if (nthreads == 0) nthreads = 1;
    if (nthreads > count) nthreads = count;

    if (nthreads == 1) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }

    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t chunk = (count + nthreads - 1) / nthreads;
    for (std::size_t t = 0; t < nthreads; ++t) {
        const std::size_t lo = begin + t * chunk;
        const std::size_t hi = lo + chunk < end ? lo + chunk : end;
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace modelmap
