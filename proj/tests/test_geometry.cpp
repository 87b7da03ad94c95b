#include <doctest.h>

#include <cmath>

#include "cip/errors.hpp"
#include "cip/geometry.hpp"

using namespace cip;

TEST_CASE("build_grid computes exact spacing") {
    Domain d;
    SpatialGrid g = build_grid(d, {20, 20, 1});
    CHECK(g.spacing[0] == doctest::Approx(1.0 / 19).epsilon(1e-15));
    CHECK(g.spacing[1] == doctest::Approx(1.0 / 19).epsilon(1e-15));
    CHECK(g.num_nodes() == 400);

    Domain unit;
    unit.lo = {0, 0, 0};
    unit.hi = {1, 1, 1};
    SpatialGrid g4 = build_grid(unit, {4, 4, 1});
    CHECK(g4.spacing[0] == doctest::Approx(1.0 / 3));
}

TEST_CASE("build_grid rejects N < 4") {
    Domain d;
    CHECK_THROWS_AS(build_grid(d, {3, 20, 1}), ValidationError);
}

TEST_CASE("node coordinates round-trip") {
    Domain d;
    d.n = 3;
    SpatialGrid g = build_grid(d, {5, 6, 7});
    for (std::int64_t p = 0; p < g.num_nodes(); ++p) {
        auto x = g.node_coords(p);
        std::array<int, 3> idx{};
        for (int a = 0; a < 3; ++a)
            idx[a] = int(std::lround((x[a] - d.lo[a]) / g.spacing[a]));
        CHECK(g.flatten(idx) == p);
    }
}

TEST_CASE("boundary classification") {
    Domain d;
    SpatialGrid g = build_grid(d, {20, 20, 1});

    // (2.0, 1.5): x1 on the measurement face.
    auto gamma0 = classify_boundary(g, g.flatten({19, 10, 0}));
    CHECK(gamma0.count(BoundaryFace::Gamma0) == 1);
    CHECK(gamma0.count(BoundaryFace::Gamma1) == 0);

    // (1.0, 1.5): the opposite face.
    auto gamma1 = classify_boundary(g, g.flatten({0, 10, 0}));
    CHECK(gamma1.count(BoundaryFace::Gamma0) == 0);
    CHECK(gamma1.count(BoundaryFace::Gamma1) == 1);

    // (2.0, 2.0): corner belongs to both.
    auto corner = classify_boundary(g, g.flatten({19, 19, 0}));
    CHECK(corner.count(BoundaryFace::Gamma0) == 1);
    CHECK(corner.count(BoundaryFace::Gamma1) == 1);

    CHECK_THROWS_AS(classify_boundary(g, g.flatten({10, 10, 0})), ValidationError);
}

TEST_CASE("boundary node counting") {
    for (int N = 4; N <= 8; ++N) {
        Domain d;
        SpatialGrid g = build_grid(d, {N, N, 1});
        int boundary = 0, gamma0 = 0;
        for (std::int64_t p = 0; p < g.num_nodes(); ++p) {
            if (!g.is_boundary(p)) continue;
            ++boundary;
            if (classify_boundary(g, p).count(BoundaryFace::Gamma0)) ++gamma0;
        }
        CHECK(boundary == N * N - (N - 2) * (N - 2));
        CHECK(gamma0 == N); // one full face
    }
}

TEST_CASE("time grid") {
    TimeGrid tg = build_time_grid(0.01, 4.0, 20);
    CHECK(tg.h == doctest::Approx(0.1995).epsilon(1e-12));
    CHECK(tg.t(0) == 0.01);
    CHECK(tg.t(20) == 4.0); // exact, not accumulated
    for (int i = 1; i <= 20; ++i)
        CHECK(tg.t(i) - tg.t(i - 1) == doctest::Approx(tg.h).epsilon(1e-12));

    TimeGrid tg2 = build_time_grid(1.0, 2.0, 4);
    CHECK(tg2.h == doctest::Approx(0.25));
    CHECK(tg2.t(2) == doctest::Approx(1.5));

    CHECK_THROWS_AS(build_time_grid(1.0, 2.0, 3), ValidationError);
    CHECK_THROWS_AS(build_time_grid(2.0, 1.0, 10), ValidationError);
}
