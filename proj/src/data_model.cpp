#include "cip/data_model.hpp"

#include <cmath>
#include <random>
#include <string>

namespace cip {

namespace {

// Deterministic uniform draw on [-1,1]: fixed bit-level mapping so results
// do not depend on the standard library's distribution implementation.
double uniform_pm1(std::mt19937_64& gen) {
    return 2.0 * (double(gen() >> 11) * 0x1.0p-53) - 1.0;
}

} // namespace

BoundaryDataset add_noise(const BoundaryDataset& data, double sigma, std::uint64_t seed,
                          bool exempt_anchor_layer) {
    if (sigma < 0.0 || sigma >= 1.0)
        throw ValidationError("noise level must satisfy 0 <= sigma < 1, got " +
                              std::to_string(sigma));
    BoundaryDataset out = data;
    out.sigma = sigma;
    out.seed = seed;
    if (sigma == 0.0) return out;
    std::mt19937_64 gen0(seed);
    std::mt19937_64 gen1(seed ^ 0x9e3779b97f4a7c15ULL);
    const std::size_t first = exempt_anchor_layer ? 1 : 0;
    for (std::size_t ti = first; ti < out.g0.size(); ++ti)
        for (double& v : out.g0[ti]) v *= 1.0 + sigma * uniform_pm1(gen0);
    for (std::size_t ti = first; ti < out.g1.size(); ++ti)
        for (double& v : out.g1[ti]) v *= 1.0 + sigma * uniform_pm1(gen1);
    for (std::size_t ti = 0; ti < out.g0.size(); ++ti)
        for (std::size_t j = 0; j < out.g0[ti].size(); ++j)
            if (data.g0[ti][j] > 0.0 && !(out.g0[ti][j] > 0.0))
                throw ValidationError("noise drove a g0 sample non-positive; the log "
                                      "transform requires g0 > 0 — use a smaller sigma");
    return out;
}

DiscreteBoundaryData discretize_boundary(const BoundaryDataset& data, const TimeGrid& tg) {
    if (int(data.times.size()) != tg.k + 1)
        throw ValidationError("dataset holds " + std::to_string(data.times.size()) +
                              " time layers; the time grid needs k+1 = " +
                              std::to_string(tg.k + 1));
    if (tg.k + 1 < 4)
        throw ValidationError("endpoint stencil needs at least 4 time layers");
    for (int i = 0; i <= tg.k; ++i)
        if (std::abs(data.times[std::size_t(i)] - tg.t(i)) > 1e-9 * tg.T)
            throw ValidationError("dataset time layer " + std::to_string(i) +
                                  " does not match the time grid");

    SpatialGrid grid = build_grid(data.domain, data.N);
    const std::size_t nn = std::size_t(grid.num_nodes());
    const int k = tg.k;
    const double h = tg.h;

    // s0 = ln g0 on boundary nodes, s1 = g1/g0 on Gamma0 nodes.
    std::vector<std::vector<double>> s0(std::size_t(k) + 1, std::vector<double>(nn, 0.0));
    std::vector<std::vector<double>> s1(std::size_t(k) + 1, std::vector<double>(nn, 0.0));
    for (int i = 0; i <= k; ++i)
        for (std::int64_t node = 0; node < grid.num_nodes(); ++node) {
            if (!grid.is_boundary(node)) continue;
            double g0v = data.g0[std::size_t(i)][std::size_t(node)];
            if (!(g0v > 0.0))
                throw ValidationError("g0 <= 0 at a boundary node; cannot take ln g0");
            s0[std::size_t(i)][std::size_t(node)] = std::log(g0v);
            if (grid.unflatten(node)[0] == grid.N[0] - 1)
                s1[std::size_t(i)][std::size_t(node)] =
                    data.g1[std::size_t(i)][std::size_t(node)] / g0v;
        }

    DiscreteBoundaryData dbd;
    dbd.domain = data.domain;
    dbd.N = data.N;
    dbd.tg = tg;
    dbd.dirichlet.assign(std::size_t(k) + 1, std::vector<double>(nn, 0.0));
    dbd.neumann.assign(std::size_t(k) + 1, std::vector<double>(nn, 0.0));
    for (std::size_t node = 0; node < nn; ++node) {
        for (int i = 0; i < k; ++i) {
            dbd.dirichlet[std::size_t(i)][node] =
                (s0[std::size_t(i) + 1][node] - s0[std::size_t(i)][node]) / h;
            dbd.neumann[std::size_t(i)][node] =
                (s1[std::size_t(i) + 1][node] - s1[std::size_t(i)][node]) / h;
        }
        dbd.dirichlet[std::size_t(k)][node] =
            (3.0 * s0[std::size_t(k)][node] - s0[std::size_t(k) - 1][node] -
             s0[std::size_t(k) - 2][node] - s0[std::size_t(k) - 3][node]) /
            (6.0 * h);
        dbd.neumann[std::size_t(k)][node] =
            (3.0 * s1[std::size_t(k)][node] - s1[std::size_t(k) - 1][node] -
             s1[std::size_t(k) - 2][node] - s1[std::size_t(k) - 3][node]) /
            (6.0 * h);
    }
    return dbd;
}

namespace {

// One 1-2-1 pass over a flattened db x dc array along the db axis (stride dc)
// and then, when dc > 1, along the dc axis (stride 1). Endpoints are left
// unchanged.
void smooth_face_array(std::vector<double>& f, int db, int dc) {
    std::vector<double> tmp(f.size());
    auto pass_axis = [&](int len, int other, std::int64_t stride, std::int64_t ostride) {
        for (int o = 0; o < other; ++o) {
            for (int i = 0; i < len; ++i) {
                const std::int64_t at = i * stride + o * ostride;
                // Endpoints (face edges/corners) are kept: changing them breaks
                // the corner consistency the transfinite lift relies on.
                if (i == 0 || i == len - 1)
                    tmp[std::size_t(at)] = f[std::size_t(at)];
                else
                    tmp[std::size_t(at)] = 0.25 * f[std::size_t(at - stride)] +
                                           0.5 * f[std::size_t(at)] +
                                           0.25 * f[std::size_t(at + stride)];
            }
        }
        f.swap(tmp);
    };
    if (db > 1) pass_axis(db, dc, dc, 1);
    if (dc > 1) pass_axis(dc, db, 1, dc);
}

} // namespace

DiscreteBoundaryData smooth_boundary_tangential(const DiscreteBoundaryData& dbd,
                                                const SpatialGrid& grid, int passes) {
    if (passes < 0) throw ValidationError("smooth_boundary_tangential: passes must be >= 0");
    DiscreteBoundaryData out = dbd;
    if (passes == 0) return out;
    const int n = grid.n();
    const std::size_t nn = std::size_t(grid.num_nodes());
    const int layers = int(dbd.dirichlet.size());

    // In-face axes for face normal `a`.
    auto face_axes = [&](int a) {
        std::array<int, 2> ax{-1, -1};
        int j = 0;
        for (int b = 0; b < n; ++b)
            if (b != a) ax[std::size_t(j++)] = b;
        return ax;
    };

    for (int layer = 0; layer < layers; ++layer) {
        std::vector<double> sum(nn, 0.0);
        std::vector<int> cnt(nn, 0);
        for (int a = 0; a < n; ++a)
            for (int side = 0; side < 2; ++side) {
                const int fixed = side ? grid.N[std::size_t(a)] - 1 : 0;
                auto ax = face_axes(a);
                const int db = grid.N[std::size_t(ax[0])];
                const int dc = (n == 3) ? grid.N[std::size_t(ax[1])] : 1;
                std::vector<double> f(std::size_t(db) * std::size_t(dc));
                std::array<int, 3> idx{0, 0, 0};
                idx[std::size_t(a)] = fixed;
                for (int ib = 0; ib < db; ++ib)
                    for (int ic = 0; ic < dc; ++ic) {
                        idx[std::size_t(ax[0])] = ib;
                        if (n == 3) idx[std::size_t(ax[1])] = ic;
                        f[std::size_t(ib) * dc + ic] =
                            dbd.dirichlet[std::size_t(layer)]
                                         [std::size_t(grid.flatten(idx))];
                    }
                for (int ps = 0; ps < passes; ++ps) smooth_face_array(f, db, dc);
                for (int ib = 0; ib < db; ++ib)
                    for (int ic = 0; ic < dc; ++ic) {
                        idx[std::size_t(ax[0])] = ib;
                        if (n == 3) idx[std::size_t(ax[1])] = ic;
                        const std::size_t node = std::size_t(grid.flatten(idx));
                        sum[node] += f[std::size_t(ib) * dc + ic];
                        cnt[node] += 1;
                    }
            }
        for (std::size_t node = 0; node < nn; ++node)
            if (cnt[node] > 0)
                out.dirichlet[std::size_t(layer)][node] = sum[node] / cnt[node];

        // Neumann data lives on the Gamma0 face only.
        {
            const int a = 0;
            const int fixed = grid.N[0] - 1;
            auto ax = face_axes(a);
            const int db = grid.N[std::size_t(ax[0])];
            const int dc = (n == 3) ? grid.N[std::size_t(ax[1])] : 1;
            std::vector<double> f(std::size_t(db) * std::size_t(dc));
            std::array<int, 3> idx{0, 0, 0};
            idx[0] = fixed;
            for (int ib = 0; ib < db; ++ib)
                for (int ic = 0; ic < dc; ++ic) {
                    idx[std::size_t(ax[0])] = ib;
                    if (n == 3) idx[std::size_t(ax[1])] = ic;
                    f[std::size_t(ib) * dc + ic] =
                        dbd.neumann[std::size_t(layer)][std::size_t(grid.flatten(idx))];
                }
            for (int ps = 0; ps < passes; ++ps) smooth_face_array(f, db, dc);
            for (int ib = 0; ib < db; ++ib)
                for (int ic = 0; ic < dc; ++ic) {
                    idx[std::size_t(ax[0])] = ib;
                    if (n == 3) idx[std::size_t(ax[1])] = ic;
                    out.neumann[std::size_t(layer)][std::size_t(grid.flatten(idx))] =
                        f[std::size_t(ib) * dc + ic];
                }
        }
    }
    return out;
}

} // namespace cip
