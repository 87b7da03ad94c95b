#include <doctest.h>

#include <cmath>
#include <random>

#include "cip/carleman.hpp"
#include "cip/errors.hpp"

using namespace cip;

namespace {

SpatialGrid small_grid(int N = 8) {
    Domain d;
    return build_grid(d, {N, N, 1});
}

// The closed-form stack for a zero potential: v(x,t) = |x|^2/(4t^2) - n/(2t).
FieldStack analytic_stack(const SpatialGrid& g, const TimeGrid& tg) {
    FieldStack V(g, tg.k + 1);
    for (int i = 0; i <= tg.k; ++i) {
        double t = tg.t(i);
        for (std::int64_t p = 0; p < g.num_nodes(); ++p) {
            auto x = g.node_coords(p);
            double r2 = 0.0;
            for (int a = 0; a < g.n(); ++a) r2 += x[a] * x[a];
            V[i][p] = r2 / (4.0 * t * t) - g.n() / (2.0 * t);
        }
    }
    return V;
}

FieldStack random_stack(const SpatialGrid& g, int k, std::uint64_t seed, double scale = 1.0,
                        bool zero_boundary = false) {
    FieldStack V(g, k + 1);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-scale, scale);
    for (int i = 0; i <= k; ++i)
        for (std::int64_t p = 0; p < g.num_nodes(); ++p)
            V[i][p] = (zero_boundary && g.is_boundary(p)) ? 0.0 : uni(rng);
    return V;
}

double max_abs(const FieldStack& R) {
    double m = 0.0;
    for (int i = 0; i < R.num_layers(); ++i)
        for (double v : R[i].values) m = std::max(m, std::abs(v));
    return m;
}

} // namespace

TEST_CASE("carleman weight values") {
    CHECK(carleman_weight(1.0, 3.0) == doctest::Approx(std::exp(6.0)).epsilon(1e-12));
    CHECK(carleman_weight(0.0, 3.0) == 1.0);
    CHECK(carleman_weight(0.0, 17.0) == 1.0);
    CHECK(carleman_weight(2.0, 3.0) / carleman_weight(1.0, 3.0) ==
          doctest::Approx(std::exp(18.0)).epsilon(1e-9));
    // Monotone in x1 >= 0 and positive.
    double prev = 0.0;
    for (double x1 = 0.0; x1 <= 2.0; x1 += 0.1) {
        double w = carleman_weight(x1, 2.0);
        CHECK(w > 0.0);
        CHECK(w >= prev);
        prev = w;
    }
}

TEST_CASE("background terms match analytic derivative") {
    SpatialGrid g = small_grid(10);
    BackgroundTerms bg(g, 0.05);
    // grad_w matches central differences of w_eps on interior nodes.
    for (std::int64_t p = 0; p < g.num_nodes(); ++p) {
        if (g.is_boundary(p)) continue;
        auto idx = g.unflatten(p);
        for (int a = 0; a < 2; ++a) {
            auto up = idx, dn = idx;
            ++up[std::size_t(a)];
            --dn[std::size_t(a)];
            double fd = (bg.w_eps[g.flatten(up)] - bg.w_eps[g.flatten(dn)]) /
                        (2.0 * g.spacing[std::size_t(a)]);
            // w_eps is quadratic, so central differences are exact.
            CHECK(bg.grad_w_eps[std::size_t(a)][p] == doctest::Approx(fd).epsilon(1e-10));
        }
    }
}

TEST_CASE("residuals: zero stack gives zero residuals") {
    SpatialGrid g = small_grid();
    TimeGrid tg = build_time_grid(0.1, 2.0, 5);
    BackgroundTerms bg(g, tg.epsilon);
    FieldStack V(g, tg.k + 1);
    FieldStack R = residuals(V, bg, tg);
    CHECK(max_abs(R) == 0.0);
}

TEST_CASE("residuals: analytic stack error decreases first order in h") {
    Domain d;
    SpatialGrid g = build_grid(d, {20, 20, 1});
    // A mild epsilon keeps the continuum time-derivative scale bounded so the
    // O(h) constant is visible across the k sweep.
    std::vector<double> errs;
    for (int k : {10, 20, 40}) {
        TimeGrid tg = build_time_grid(0.5, 4.0, k);
        BackgroundTerms bg(g, tg.epsilon);
        FieldStack V = analytic_stack(g, tg);
        errs.push_back(max_abs(residuals(V, bg, tg)));
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
    CHECK(errs[2] < 0.6 * errs[0]); // ~first order across a 4x refinement
}

TEST_CASE("residual locality: a bump in layer 3 never touches L_0, L_1") {
    SpatialGrid g = small_grid();
    TimeGrid tg = build_time_grid(0.1, 2.0, 6);
    BackgroundTerms bg(g, tg.epsilon);
    FieldStack V = random_stack(g, tg.k, 11);
    FieldStack R1 = residuals(V, bg, tg);
    V[3][g.flatten({4, 4, 0})] += 0.5;
    FieldStack R2 = residuals(V, bg, tg);
    for (int i : {0, 1})
        for (std::int64_t p = 0; p < g.num_nodes(); ++p) CHECK(R1[i][p] == R2[i][p]);
    bool changed = false;
    for (int i = 2; i <= tg.k; ++i)
        for (std::int64_t p = 0; p < g.num_nodes(); ++p)
            if (R1[i][p] != R2[i][p]) changed = true;
    CHECK(changed);
}

TEST_CASE("functional: zero stack, alpha linearity, overflow guard") {
    SpatialGrid g = small_grid();
    TimeGrid tg = build_time_grid(0.1, 2.0, 5);
    BackgroundTerms bg(g, tg.epsilon);
    CarlemanParams prm;

    FieldStack zero(g, tg.k + 1);
    CHECK(functional(zero, bg, tg, prm) == 0.0);

    FieldStack V = random_stack(g, tg.k, 3);
    CarlemanParams prm2 = prm;
    prm2.alpha = 2.0e-4;
    double norm = sobolev_norm_sq(V, prm.reg_order, prm.divided_penalty);
    CHECK(functional(V, bg, tg, prm2) - functional(V, bg, tg, prm) ==
          doctest::Approx((prm2.alpha - prm.alpha) * norm).epsilon(1e-10));

    CarlemanParams hot = prm;
    hot.lambda = 100.0; // lambda * hi^2 = 400 > 300
    CHECK_THROWS_AS(functional(V, bg, tg, hot), ValidationError);
}

TEST_CASE("functional quadratic homogeneity in the linear regime") {
    SpatialGrid g = small_grid();
    TimeGrid tg = build_time_grid(0.1, 2.0, 5);
    BackgroundTerms bg(g, tg.epsilon);
    CarlemanParams prm;
    prm.alpha = 1e-12; // isolate the residual term
    FieldStack V = random_stack(g, tg.k, 5, 1.0, /*zero_boundary=*/true);
    // The residual is linear in V up to the Volterra coupling, so at small t
    // J(tV) ~ t^2 J-quadratic.
    double j1 = functional(V, bg, tg, prm);
    (void)j1;
    double t = 1e-4;
    FieldStack Vt(g, tg.k + 1);
    for (int i = 0; i <= tg.k; ++i)
        for (std::int64_t p = 0; p < g.num_nodes(); ++p) Vt[i][p] = t * V[i][p];
    double jt = functional(Vt, bg, tg, prm);
    double jt2 = functional([&] {
        FieldStack W(g, tg.k + 1);
        for (int i = 0; i <= tg.k; ++i)
            for (std::int64_t p = 0; p < g.num_nodes(); ++p) W[i][p] = 2.0 * t * V[i][p];
        return W;
    }(), bg, tg, prm);
    CHECK(jt2 / jt == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("gradient matches central finite differences") {
    SpatialGrid g = small_grid(8);
    TimeGrid tg = build_time_grid(0.1, 2.0, 5);
    BackgroundTerms bg(g, tg.epsilon);
    CarlemanParams prm; // lambda=3, alpha=3e-5

    std::mt19937_64 rng(2024);
    for (int inst = 0; inst < 5; ++inst) {
        FieldStack V = random_stack(g, tg.k, 100 + std::uint64_t(inst));
        FieldStack G = gradient(V, bg, tg, prm);
        std::uniform_int_distribution<int> li(0, tg.k);
        std::uniform_int_distribution<std::int64_t> ni(0, g.num_nodes() - 1);
        int checked = 0;
        double worst = 0.0;
        while (checked < 50) {
            int i = li(rng);
            std::int64_t p = ni(rng);
            if (g.is_boundary(p)) continue; // gradient is zero there by contract
            ++checked;
            const double tau = 1e-5;
            double keep = V[i][p];
            V[i][p] = keep + tau;
            double jp = functional(V, bg, tg, prm);
            V[i][p] = keep - tau;
            double jm = functional(V, bg, tg, prm);
            V[i][p] = keep;
            double fd = (jp - jm) / (2.0 * tau);
            double scale = std::max({std::abs(fd), std::abs(G[i][p]), 1e-8});
            worst = std::max(worst, std::abs(G[i][p] - fd) / scale);
        }
        CHECK(worst <= 1e-5);
    }
}

TEST_CASE("gradient zero at the global minimum") {
    SpatialGrid g = small_grid();
    TimeGrid tg = build_time_grid(0.1, 2.0, 5);
    BackgroundTerms bg(g, tg.epsilon);
    CarlemanParams prm;
    FieldStack zero(g, tg.k + 1);
    FieldStack G = gradient(zero, bg, tg, prm);
    CHECK(max_abs(G) == 0.0);
}

TEST_CASE("convexity probe basics") {
    SpatialGrid g = small_grid();
    TimeGrid tg = build_time_grid(0.1, 2.0, 5);
    BackgroundTerms bg(g, tg.epsilon);
    CarlemanParams prm;

    FieldStack V1 = random_stack(g, tg.k, 21, 1.0, /*zero_boundary=*/true);
    CHECK(convexity_probe(V1, V1, bg, tg, prm) == doctest::Approx(0.0));

    FieldStack V2 = random_stack(g, tg.k, 22, 1.0, /*zero_boundary=*/true);
    // Identity: gap(V1,V2) + gap(V2,V1) = <J'(V2)-J'(V1), V2-V1>.
    double sym = convexity_probe(V1, V2, bg, tg, prm) + convexity_probe(V2, V1, bg, tg, prm);
    FieldStack G1 = gradient(V1, bg, tg, prm);
    FieldStack G2 = gradient(V2, bg, tg, prm);
    double inner = 0.0;
    for (int i = 0; i <= tg.k; ++i)
        for (std::int64_t p = 0; p < g.num_nodes(); ++p)
            inner += (G2[i][p] - G1[i][p]) * (V2[i][p] - V1[i][p]);
    CHECK(sym == doctest::Approx(inner).epsilon(1e-9));

    FieldStack V3 = random_stack(g, tg.k, 23); // random boundary values
    CHECK_THROWS_AS(convexity_probe(V1, V3, bg, tg, prm), ValidationError);
}

TEST_CASE("first_residual excludes leading layers from J") {
    SpatialGrid g = small_grid();
    TimeGrid tg = build_time_grid(0.1, 2.0, 5);
    BackgroundTerms bg(g, tg.epsilon);
    FieldStack V = random_stack(g, tg.k, 31);

    CarlemanParams all;
    all.first_residual = 0;
    CarlemanParams skip;
    skip.first_residual = 1;
    double j_all = functional(V, bg, tg, all);
    double j_skip = functional(V, bg, tg, skip);
    CHECK(j_all > j_skip); // the L_0 contribution is nonnegative and generically > 0

    // With first_residual = k+1 only the penalty remains.
    CarlemanParams none;
    none.first_residual = tg.k + 1;
    CHECK(functional(V, bg, tg, none) ==
          doctest::Approx(none.alpha * sobolev_norm_sq(V, none.reg_order,
                                                       none.divided_penalty))
              .epsilon(1e-12));
}

TEST_CASE("sobolev penalty: divided vs plain differences") {
    SpatialGrid g = small_grid();
    FieldStack V = random_stack(g, 4, 41);
    double plain = sobolev_norm_sq(V, 3, /*divided=*/false);
    double divided = sobolev_norm_sq(V, 3, /*divided=*/true);
    CHECK(divided > plain); // spacing < 1 amplifies divided differences
    // Constant stacks have no difference contribution at all.
    FieldStack C(g, 5);
    for (int i = 0; i < 5; ++i)
        for (std::int64_t p = 0; p < g.num_nodes(); ++p) C[i][p] = 2.5;
    double vol = g.spacing[0] * g.spacing[1];
    CHECK(sobolev_norm_sq(C, 3, true) ==
          doctest::Approx(5.0 * 2.5 * 2.5 * double(g.num_nodes()) * vol).epsilon(1e-12));
}
