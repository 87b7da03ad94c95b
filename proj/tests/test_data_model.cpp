#include <doctest.h>

#include <cmath>

#include "cip/data_model.hpp"
#include "cip/errors.hpp"

using namespace cip;

namespace {

// Dataset with g0 = exp(c * t * q(x)) on the boundary and g1 = r(x) * g0 on
// Gamma0, so s0 = c t q and s1 = r are known exactly.
BoundaryDataset synthetic_dataset(const SpatialGrid& g, const TimeGrid& tg, double c) {
    BoundaryDataset d;
    d.domain = g.domain;
    d.N = g.N;
    const std::size_t nn = std::size_t(g.num_nodes());
    for (int i = 0; i <= tg.k; ++i) {
        d.times.push_back(tg.t(i));
        d.g0.push_back(std::vector<double>(nn, 1.0));
        d.g1.push_back(std::vector<double>(nn, 0.0));
        for (std::int64_t p = 0; p < g.num_nodes(); ++p) {
            if (!g.is_boundary(p)) continue;
            auto x = g.node_coords(p);
            double q = 1.0 + 0.25 * x[1];
            d.g0.back()[std::size_t(p)] = std::exp(c * tg.t(i) * q);
            if (g.unflatten(p)[0] == g.N[0] - 1)
                d.g1.back()[std::size_t(p)] = (0.5 + x[1]) * d.g0.back()[std::size_t(p)];
        }
    }
    return d;
}

} // namespace

TEST_CASE("discretize_boundary: stencils are exact for s0 linear in t") {
    Domain dom;
    SpatialGrid g = build_grid(dom, {6, 6, 1});
    TimeGrid tg = build_time_grid(0.5, 2.5, 5);
    const double c = 0.7;
    BoundaryDataset d = synthetic_dataset(g, tg, c);
    DiscreteBoundaryData dbd = discretize_boundary(d, tg);

    for (std::int64_t p = 0; p < g.num_nodes(); ++p) {
        if (!g.is_boundary(p)) continue;
        auto x = g.node_coords(p);
        double want = c * (1.0 + 0.25 * x[1]); // d/dt of s0 = c t q(x)
        // Forward differences of a linear function are exact, and so is the
        // endpoint stencil (3 s_k - s_{k-1} - s_{k-2} - s_{k-3})/(6h).
        for (int i = 0; i <= tg.k; ++i)
            CHECK(dbd.dirichlet[std::size_t(i)][std::size_t(p)] ==
                  doctest::Approx(want).epsilon(1e-10));
        if (g.unflatten(p)[0] == g.N[0] - 1) {
            // s1 = g1/g0 is constant in t, so every stencil returns ~0 and the
            // division by g0 is checked by construction.
            for (int i = 0; i <= tg.k; ++i)
                CHECK(dbd.neumann[std::size_t(i)][std::size_t(p)] ==
                      doctest::Approx(0.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("discretize_boundary rejects non-positive g0 and time mismatches") {
    Domain dom;
    SpatialGrid g = build_grid(dom, {5, 5, 1});
    TimeGrid tg = build_time_grid(0.5, 2.5, 5);
    BoundaryDataset d = synthetic_dataset(g, tg, 0.3);

    BoundaryDataset bad = d;
    bad.g0[2][0] = -1.0; // node 0 is a boundary corner
    CHECK_THROWS_AS(discretize_boundary(bad, tg), ValidationError);

    BoundaryDataset mism = d;
    mism.times[1] += 0.01;
    CHECK_THROWS_AS(discretize_boundary(mism, tg), ValidationError);

    TimeGrid other = build_time_grid(0.5, 2.5, 8);
    CHECK_THROWS_AS(discretize_boundary(d, other), ValidationError);
}

TEST_CASE("add_noise: deterministic, bounded, multiplicative") {
    Domain dom;
    SpatialGrid g = build_grid(dom, {5, 5, 1});
    TimeGrid tg = build_time_grid(0.5, 2.5, 5);
    BoundaryDataset d = synthetic_dataset(g, tg, 0.3);

    BoundaryDataset n1 = add_noise(d, 0.05, 99);
    BoundaryDataset n2 = add_noise(d, 0.05, 99);
    CHECK(n1.g0 == n2.g0);
    CHECK(n1.g1 == n2.g1);

    BoundaryDataset n3 = add_noise(d, 0.05, 100);
    CHECK(n1.g0 != n3.g0);

    bool any_changed = false;
    for (std::size_t i = 1; i < d.g0.size(); ++i)
        for (std::size_t p = 0; p < d.g0[i].size(); ++p) {
            double base = d.g0[i][p];
            double rel = std::abs(n1.g0[i][p] - base) / std::abs(base);
            CHECK(rel <= 0.05 + 1e-12);
            if (rel > 0) any_changed = true;
        }
    CHECK(any_changed);
}

TEST_CASE("add_noise anchor-layer exemption") {
    Domain dom;
    SpatialGrid g = build_grid(dom, {5, 5, 1});
    TimeGrid tg = build_time_grid(0.5, 2.5, 5);
    BoundaryDataset d = synthetic_dataset(g, tg, 0.3);

    BoundaryDataset ex = add_noise(d, 0.05, 7, /*exempt_anchor_layer=*/true);
    CHECK(ex.g0[0] == d.g0[0]);
    CHECK(ex.g1[0] == d.g1[0]);

    BoundaryDataset all = add_noise(d, 0.05, 7, /*exempt_anchor_layer=*/false);
    CHECK(all.g0[0] != d.g0[0]);
}

TEST_CASE("add_noise input validation") {
    Domain dom;
    SpatialGrid g = build_grid(dom, {5, 5, 1});
    TimeGrid tg = build_time_grid(0.5, 2.5, 5);
    BoundaryDataset d = synthetic_dataset(g, tg, 0.3);
    CHECK_THROWS_AS(add_noise(d, -0.1, 1), ValidationError);
    CHECK_THROWS_AS(add_noise(d, 1.0, 1), ValidationError);
    BoundaryDataset clean = add_noise(d, 0.0, 1);
    CHECK(clean.g0 == d.g0);
}
