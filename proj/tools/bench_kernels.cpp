// Benchmark of the functional/gradient kernels: serial reference vs
// OpenMP-parallel, with a bit-identity check between the two (the parallel
// reduction uses a fixed block tree, so results must match exactly).

#include <chrono>
#include <cstdio>
#include <random>

#include <omp.h>

#include "cip/carleman.hpp"
#include "cip/geometry.hpp"

using namespace cip;

namespace {

double wall(const std::function<void()>& fn, int reps) {
    auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

} // namespace

int main(int argc, char** argv) {
    int N = argc > 1 ? std::atoi(argv[1]) : 40;
    int k = argc > 2 ? std::atoi(argv[2]) : 20;
    int reps = argc > 3 ? std::atoi(argv[3]) : 5;

    Domain dom;
    SpatialGrid grid = build_grid(dom, {N, N, 1});
    TimeGrid tg = build_time_grid(0.01, 4.0, k);
    BackgroundTerms bg(grid, tg.epsilon);
    CarlemanParams prm;

    FieldStack V(grid, k + 1);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int i = 0; i <= k; ++i)
        for (std::int64_t p = 0; p < grid.num_nodes(); ++p) V[i][p] = uni(rng);

    std::printf("grid %dx%d, k=%d, threads=%d, reps=%d\n", N, N, k, omp_get_max_threads(),
                reps);

    double Js = 0, Jp = 0;
    double tJs = wall([&] { Js = functional(V, bg, tg, prm, /*parallel=*/false); }, reps);
    double tJp = wall([&] { Jp = functional(V, bg, tg, prm, /*parallel=*/true); }, reps);
    std::printf("functional  serial %8.2f ms   parallel %8.2f ms   speedup %5.2fx\n", tJs, tJp,
                tJs / tJp);
    if (Js != Jp) {
        std::printf("MISMATCH: serial %.17g vs parallel %.17g\n", Js, Jp);
        return 1;
    }

    FieldStack Gs, Gp;
    double tGs = wall([&] { Gs = gradient(V, bg, tg, prm, /*parallel=*/false); }, reps);
    double tGp = wall([&] { Gp = gradient(V, bg, tg, prm, /*parallel=*/true); }, reps);
    std::printf("gradient    serial %8.2f ms   parallel %8.2f ms   speedup %5.2fx\n", tGs, tGp,
                tGs / tGp);
    for (int i = 0; i <= k; ++i)
        for (std::int64_t p = 0; p < grid.num_nodes(); ++p)
            if (Gs[i][p] != Gp[i][p]) {
                std::printf("MISMATCH at layer %d node %lld\n", i, (long long)p);
                return 1;
            }
    std::printf("serial and parallel results are bit-identical\n");
    return 0;
}
