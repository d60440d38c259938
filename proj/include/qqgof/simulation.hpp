#pragma once

// Block-parallel Monte Carlo driver. Replications are cut into fixed blocks
// of 4096; block b draws from its own stream seeded by derive_seed(seed, b),
// and results land at fixed indices. The output is therefore bit-identical
// for any number of worker threads.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "qqgof/distributions.hpp"
#include "qqgof/gof_statistics.hpp"
#include "qqgof/rng.hpp"

namespace qqgof {

inline constexpr std::size_t mc_block_size = 4096;

inline std::size_t default_thread_count() {
    const auto hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs `body(block_index, first, last, rng)` for every block of [0, reps).
template <class Body>
void for_each_block(std::size_t reps, std::uint64_t seed, std::size_t threads, Body&& body) {
    const std::size_t blocks = (reps + mc_block_size - 1) / mc_block_size;
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(blocks, 1));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t b = next++; b < blocks; b = next++) {
            try {
                SeededGenerator rng(derive_seed(seed, b));
                const std::size_t first = b * mc_block_size;
                body(b, first, std::min(reps, first + mc_block_size), rng);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = blocks;
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
}

/// Generates `reps` values of `per_rep(rng)`, index-ordered.
template <class PerRep>
std::vector<double> simulate(std::size_t reps, std::uint64_t seed, std::size_t threads,
                             PerRep&& per_rep) {
    std::vector<double> out(reps);
    for_each_block(reps, seed, threads,
                   [&](std::size_t, std::size_t first, std::size_t last, SeededGenerator& rng) {
                       for (std::size_t i = first; i < last; ++i) out[i] = per_rep(rng);
                   });
    return out;
}

struct SimulationOptions {
    std::size_t threads = default_thread_count();
};

/// Simulated values of a test statistic for samples of size n drawn from
/// the standard form of `family`.
inline std::vector<double> simulate_statistic(const StatisticEvaluator& stat, Family family,
                                              std::size_t reps, std::uint64_t seed,
                                              const SimulationOptions& opts = {}) {
    const std::size_t n = stat.n();
    std::vector<double> out(reps);
    for_each_block(reps, seed, opts.threads,
                   [&](std::size_t, std::size_t first, std::size_t last, SeededGenerator& rng) {
                       std::vector<double> buf(n);
                       for (std::size_t i = first; i < last; ++i) {
                           for (auto& v : buf) v = draw(family, rng);
                           std::sort(buf.begin(), buf.end());
                           out[i] = stat(buf);
                       }
                   });
    return out;
}

inline std::vector<double> simulate_statistic(TestKind test, Family family, std::size_t n,
                                              std::size_t reps, std::uint64_t seed,
                                              const SimulationOptions& opts = {}) {
    return simulate_statistic(StatisticEvaluator(test, n), family, reps, seed, opts);
}

}  // namespace qqgof
