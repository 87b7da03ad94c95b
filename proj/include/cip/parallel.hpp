#pragma once

#include <cstdint>
#include <vector>

namespace cip {

// Deterministic parallel reduction: the index range is split into a fixed
// number of blocks independent of the thread count; each block is summed
// serially in index order and the partials are combined serially. The result
// is bit-identical for any OMP_NUM_THREADS.
template <class F>
double deterministic_sum(std::int64_t n, F&& term, bool parallel = true) {
    constexpr int kBlocks = 256;
    std::vector<double> partial(kBlocks, 0.0);
#pragma omp parallel for schedule(static) if (parallel)
    for (int b = 0; b < kBlocks; ++b) {
        const std::int64_t lo = n * b / kBlocks;
        const std::int64_t hi = n * (b + 1) / kBlocks;
        double acc = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) acc += term(i);
        partial[std::size_t(b)] = acc;
    }
    double total = 0.0;
    for (int b = 0; b < kBlocks; ++b) total += partial[std::size_t(b)];
    return total;
}

} // namespace cip
