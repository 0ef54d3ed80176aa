#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace boolperc {

// Deterministic replicate runner. Replicates are split into fixed-size
// blocks; workers pull block indices from an atomic counter, accumulate a
// per-block tally sequentially, and the block tallies are merged in block
// order afterwards. The result is therefore a pure function of
// (n_reps, work) no matter how many threads run it.

inline constexpr uint64_t kReplicateBlock = 1024;

template <typename Tally, typename Work>
Tally run_replicates(uint64_t n_reps, int threads, const Work& work) {
    const uint64_t n_blocks = (n_reps + kReplicateBlock - 1) / kReplicateBlock;
    std::vector<Tally> block_tallies(n_blocks);
    if (n_blocks == 0) return Tally{};

    std::atomic<uint64_t> next{0};
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};

    const auto run_blocks = [&]() {
        for (;;) {
            const uint64_t b = next.fetch_add(1);
            if (b >= n_blocks || failed.load()) break;
            const uint64_t lo = b * kReplicateBlock;
            const uint64_t hi = std::min(n_reps, lo + kReplicateBlock);
            try {
                Tally t{};
                for (uint64_t i = lo; i < hi; ++i) work(i, t);
                block_tallies[b] = std::move(t);
            } catch (...) {
                if (!failed.exchange(true)) first_error = std::current_exception();
                break;
            }
        }
    };

    if (threads <= 1 || n_blocks == 1) {
        run_blocks();
    } else {
        std::vector<std::thread> pool;
        const int n_workers = static_cast<int>(
            std::min<uint64_t>(static_cast<uint64_t>(threads), n_blocks));
        pool.reserve(static_cast<size_t>(n_workers));
        for (int t = 0; t < n_workers; ++t) pool.emplace_back(run_blocks);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) std::rethrow_exception(first_error);

    Tally total{};
    for (auto& t : block_tallies) total.merge(t);
    return total;
}

}  // namespace boolperc
