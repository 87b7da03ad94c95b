#include <doctest.h>

#include <cmath>
#include <vector>

#include "cip/data_model.hpp"
#include "cip/errors.hpp"
#include "cip/optimizer.hpp"

using namespace cip;

namespace {

// Boundary data where every dirichlet/neumann layer is filled from a given
// function of (layer, node coords).
DiscreteBoundaryData make_dbd(const SpatialGrid& g, const TimeGrid& tg,
                              double (*f)(int, const std::array<double, 3>&)) {
    DiscreteBoundaryData dbd;
    dbd.domain = g.domain;
    dbd.N = g.N;
    dbd.tg = tg;
    const std::size_t nn = std::size_t(g.num_nodes());
    dbd.dirichlet.assign(std::size_t(tg.k) + 1, std::vector<double>(nn, 0.0));
    dbd.neumann.assign(std::size_t(tg.k) + 1, std::vector<double>(nn, 0.0));
    for (int i = 0; i <= tg.k; ++i)
        for (std::int64_t p = 0; p < g.num_nodes(); ++p)
            if (g.is_boundary(p))
                dbd.dirichlet[std::size_t(i)][std::size_t(p)] = f(i, g.node_coords(p));
    return dbd;
}

double zero_fn(int, const std::array<double, 3>&) { return 0.0; }

} // namespace

TEST_CASE("enforce_neumann identities") {
    Domain dom;
    SpatialGrid g = build_grid(dom, {11, 11, 1}); // spacing 0.1
    TimeGrid tg = build_time_grid(0.5, 2.5, 5);
    DiscreteBoundaryData dbd = make_dbd(g, tg, zero_fn);

    SUBCASE("constant field with zero normal derivative is untouched") {
        for (auto& layer : dbd.dirichlet) layer.assign(layer.size(), 1.0);
        FieldStack V(g, tg.k + 1);
        for (int i = 0; i <= tg.k; ++i)
            for (std::int64_t p = 0; p < g.num_nodes(); ++p) V[i][p] = 1.0;
        enforce_neumann(V, dbd, g);
        for (std::int64_t p = 0; p < g.num_nodes(); ++p)
            CHECK(V[0][p] == doctest::Approx(1.0).epsilon(1e-14));
    }

    SUBCASE("zero data with unit neumann sets -spacing/2") {
        for (auto& layer : dbd.neumann) layer.assign(layer.size(), 1.0);
        FieldStack V(g, tg.k + 1); // all zero
        enforce_neumann(V, dbd, g);
        // First interior node along the measurement face normal: i1 = N0-2.
        CHECK(V[0][g.flatten({9, 5, 0})] == doctest::Approx(-0.05).epsilon(1e-14));
    }

    SUBCASE("idempotent") {
        for (auto& layer : dbd.neumann) layer.assign(layer.size(), 0.3);
        for (auto& layer : dbd.dirichlet) layer.assign(layer.size(), 0.7);
        FieldStack V(g, tg.k + 1);
        for (int i = 0; i <= tg.k; ++i)
            for (std::int64_t p = 0; p < g.num_nodes(); ++p)
                V[i][p] = double((p * 37 + i) % 11) / 11.0;
        enforce_neumann(V, dbd, g);
        FieldStack once = V;
        enforce_neumann(V, dbd, g);
        for (int i = 0; i <= tg.k; ++i)
            for (std::int64_t p = 0; p < g.num_nodes(); ++p) CHECK(V[i][p] == once[i][p]);
    }
}

TEST_CASE("initial guess reproduces boundary data and the background blend") {
    Domain dom;
    SpatialGrid g = build_grid(dom, {10, 10, 1});
    TimeGrid tg = build_time_grid(0.01, 4.0, 5);
    BackgroundTerms bg(g, tg.epsilon);

    // Boundary data equal to gamma_j * v_bg makes the lift vanish, so the
    // guess must be exactly gamma_j * v_bg; at x=(1,1), eps=0.01 the value
    // v_bg = |x|^2/(4 eps^2) - n/(2 eps) = 5000 - 100 = 4900.
    DiscreteBoundaryData dbd = make_dbd(g, tg, zero_fn);
    for (int j = 0; j <= tg.k; ++j) {
        double gam = (tg.T - tg.t(j)) / (tg.T - tg.epsilon);
        for (std::int64_t p = 0; p < g.num_nodes(); ++p) {
            if (!g.is_boundary(p)) continue;
            auto x = g.node_coords(p);
            double r2 = x[0] * x[0] + x[1] * x[1];
            dbd.dirichlet[std::size_t(j)][std::size_t(p)] =
                gam * (r2 / (4.0 * tg.epsilon * tg.epsilon) - 1.0 / tg.epsilon);
        }
    }
    FieldStack V0 = initial_guess(dbd, bg, tg, g);

    CHECK(V0[0][g.flatten({0, 0, 0})] == doctest::Approx(4900.0).epsilon(1e-9));
    // gamma_k = 0: layer k is the lift of its boundary data alone (here 0).
    for (std::int64_t p = 0; p < g.num_nodes(); ++p)
        CHECK(V0[tg.k][p] == doctest::Approx(0.0).scale(1e4));
    // Boundary restriction equals the dirichlet data on every layer.
    for (int j = 0; j <= tg.k; ++j)
        for (std::int64_t p = 0; p < g.num_nodes(); ++p)
            if (g.is_boundary(p))
                CHECK(V0[j][p] ==
                      doctest::Approx(dbd.dirichlet[std::size_t(j)][std::size_t(p)])
                          .epsilon(1e-9)
                          .scale(1e4));
}

TEST_CASE("initial guess lift is exact for separable quadratic data") {
    // v_bg is itself a separable quadratic, so when the boundary data is a
    // separable quadratic f, the blended lift must reproduce f at every node.
    Domain dom;
    SpatialGrid g = build_grid(dom, {9, 9, 1});
    TimeGrid tg = build_time_grid(0.5, 2.0, 4);
    BackgroundTerms bg(g, tg.epsilon);
    auto f = [](const std::array<double, 3>& x) {
        return 2.0 * x[0] * x[0] - 0.5 * x[1] * x[1] + 3.0 * x[0] - x[1] + 1.0;
    };
    DiscreteBoundaryData dbd = make_dbd(g, tg, zero_fn);
    for (int j = 0; j <= tg.k; ++j)
        for (std::int64_t p = 0; p < g.num_nodes(); ++p)
            if (g.is_boundary(p))
                dbd.dirichlet[std::size_t(j)][std::size_t(p)] = f(g.node_coords(p));
    FieldStack V0 = initial_guess(dbd, bg, tg, g);
    for (int j = 0; j <= tg.k; ++j)
        for (std::int64_t p = 0; p < g.num_nodes(); ++p)
            CHECK(V0[j][p] == doctest::Approx(f(g.node_coords(p))).epsilon(1e-10));
}

TEST_CASE("minimize: zero data converges immediately") {
    Domain dom;
    SpatialGrid g = build_grid(dom, {8, 8, 1});
    TimeGrid tg = build_time_grid(0.1, 2.0, 5);
    BackgroundTerms bg(g, tg.epsilon);
    DiscreteBoundaryData dbd = make_dbd(g, tg, zero_fn);
    FieldStack V0(g, tg.k + 1);
    CarlemanParams prm;
    MinimizeOptions opts;
    OptimState st = minimize(V0, dbd, bg, tg, prm, opts);
    CHECK(st.iterations == 0);
    CHECK(st.reached_tol);
    CHECK(st.final_J == 0.0);
}

TEST_CASE("minimize: pure quadratic instance reaches tolerance quickly") {
    Domain dom;
    SpatialGrid g = build_grid(dom, {10, 10, 1});
    TimeGrid tg = build_time_grid(0.1, 2.0, 5);
    BackgroundTerms bg(g, tg.epsilon);

    DiscreteBoundaryData dbd = make_dbd(g, tg, zero_fn);
    for (int i = 0; i <= tg.k; ++i)
        for (std::int64_t p = 0; p < g.num_nodes(); ++p)
            if (g.is_boundary(p)) {
                auto x = g.node_coords(p);
                dbd.dirichlet[std::size_t(i)][std::size_t(p)] = std::sin(3.0 * x[0]) + x[1];
            }

    // Only the penalty term: the residual sum is empty, leaving a strictly
    // convex quadratic whose minimum the L-BFGS must find fast.
    CarlemanParams prm;
    prm.first_residual = tg.k + 1;
    prm.alpha = 1e-2;

    BackgroundTerms bg2(g, tg.epsilon);
    FieldStack V0 = initial_guess(dbd, bg2, tg, g);
    MinimizeOptions opts;
    opts.grad_tol = 1e-6;
    opts.max_iters = 60;
    OptimState st = minimize(V0, dbd, bg, tg, prm, opts);
    CHECK(st.reached_tol);
    CHECK(st.iterations <= 30);

    // Monotone J along accepted steps.
    for (std::size_t i = 1; i < st.history.size(); ++i)
        CHECK(st.history[i].J <= st.history[i - 1].J + 1e-12);
}

TEST_CASE("minimize preserves both boundary constraints exactly") {
    Domain dom;
    SpatialGrid g = build_grid(dom, {8, 8, 1});
    TimeGrid tg = build_time_grid(0.1, 2.0, 5);
    BackgroundTerms bg(g, tg.epsilon);

    DiscreteBoundaryData dbd = make_dbd(g, tg, zero_fn);
    for (int i = 0; i <= tg.k; ++i)
        for (std::int64_t p = 0; p < g.num_nodes(); ++p)
            if (g.is_boundary(p)) {
                auto x = g.node_coords(p);
                dbd.dirichlet[std::size_t(i)][std::size_t(p)] = 0.1 * x[0] + 0.05 * i;
                dbd.neumann[std::size_t(i)][std::size_t(p)] = 0.1;
            }
    FieldStack V0 = initial_guess(dbd, bg, tg, g);
    MinimizeOptions opts;
    opts.max_iters = 15;
    opts.grad_tol = 1e-12;
    CarlemanParams prm;
    OptimState st = minimize(V0, dbd, bg, tg, prm, opts);

    const double sp = g.spacing[0];
    for (int i = 0; i <= tg.k; ++i)
        for (int i2 = 1; i2 < g.N[1] - 1; ++i2) {
            std::int64_t pI = g.flatten({g.N[0] - 1, i2, 0});
            std::int64_t p1 = g.flatten({g.N[0] - 2, i2, 0});
            std::int64_t p2 = g.flatten({g.N[0] - 3, i2, 0});
            double vI = st.V[i][pI];
            CHECK(vI == dbd.dirichlet[std::size_t(i)][std::size_t(pI)]);
            double stencil = (3.0 * vI - 4.0 * st.V[i][p1] + st.V[i][p2]) / (2.0 * sp);
            CHECK(stencil == doctest::Approx(dbd.neumann[std::size_t(i)][std::size_t(pI)])
                                 .epsilon(1e-11));
        }
}

TEST_CASE("gradient descent decreases J on a convex instance") {
    Domain dom;
    SpatialGrid g = build_grid(dom, {8, 8, 1});
    TimeGrid tg = build_time_grid(0.1, 2.0, 5);
    BackgroundTerms bg(g, tg.epsilon);
    DiscreteBoundaryData dbd = make_dbd(g, tg, zero_fn);
    for (int i = 0; i <= tg.k; ++i)
        for (std::int64_t p = 0; p < g.num_nodes(); ++p)
            if (g.is_boundary(p)) dbd.dirichlet[std::size_t(i)][std::size_t(p)] = 0.2;

    CarlemanParams prm;
    prm.first_residual = tg.k + 1;
    prm.alpha = 1e-2;
    FieldStack V0 = initial_guess(dbd, bg, tg, g);
    MinimizeOptions opts;
    opts.method = Method::GradientDescent;
    opts.max_iters = 50;
    opts.grad_tol = 1e-10;
    OptimState st = minimize(V0, dbd, bg, tg, prm, opts);
    for (std::size_t i = 1; i < st.history.size(); ++i)
        CHECK(st.history[i].J <= st.history[i - 1].J + 1e-14);
}

TEST_CASE("stack_disc_norm uses cell volume") {
    Domain dom;
    SpatialGrid g = build_grid(dom, {5, 5, 1}); // spacing 0.25, cellvol 1/16
    FieldStack G(g, 2);
    for (int i = 0; i < 2; ++i)
        for (std::int64_t p = 0; p < g.num_nodes(); ++p) G[i][p] = 2.0;
    // sum g^2 = 4 * 50 = 200; * cellvol = 12.5
    CHECK(stack_disc_norm(G) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-14));
}
