#include "cip/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <string>

#include "cip/parallel.hpp"

namespace cip {

namespace {

// Transfinite (Coons / Boolean-sum) interpolation of boundary values: the
// per-axis linear blends of opposite faces, minus the pairwise edge blends,
// plus (in 3-D) the corner blend. Exact on its boundary data.
void transfinite_lift(const SpatialGrid& g, std::vector<double>& f) {
    const int n = g.n();
    const std::array<int, 3> N = g.N;
    auto F = [&](int i1, int i2, int i3) -> double {
        return f[std::size_t(g.flatten({i1, i2, i3}))];
    };
    std::vector<double> out(f);
    for (std::int64_t p = 0; p < g.num_nodes(); ++p) {
        if (g.is_boundary(p)) continue;
        auto ix = g.unflatten(p);
        const int i1 = ix[0], i2 = ix[1], i3 = ix[2];
        const double u = double(i1) / (N[0] - 1);
        const double v = double(i2) / (N[1] - 1);
        if (n == 2) {
            double P1 = (1 - u) * F(0, i2, 0) + u * F(N[0] - 1, i2, 0);
            double P2 = (1 - v) * F(i1, 0, 0) + v * F(i1, N[1] - 1, 0);
            double P12 = (1 - u) * (1 - v) * F(0, 0, 0) + u * (1 - v) * F(N[0] - 1, 0, 0) +
                         (1 - u) * v * F(0, N[1] - 1, 0) + u * v * F(N[0] - 1, N[1] - 1, 0);
            out[std::size_t(p)] = P1 + P2 - P12;
        } else {
            const double w = double(i3) / (N[2] - 1);
            const int I = N[0] - 1, J = N[1] - 1, K = N[2] - 1;
            double P1 = (1 - u) * F(0, i2, i3) + u * F(I, i2, i3);
            double P2 = (1 - v) * F(i1, 0, i3) + v * F(i1, J, i3);
            double P3 = (1 - w) * F(i1, i2, 0) + w * F(i1, i2, K);
            double P12 = (1 - u) * (1 - v) * F(0, 0, i3) + u * (1 - v) * F(I, 0, i3) +
                         (1 - u) * v * F(0, J, i3) + u * v * F(I, J, i3);
            double P13 = (1 - u) * (1 - w) * F(0, i2, 0) + u * (1 - w) * F(I, i2, 0) +
                         (1 - u) * w * F(0, i2, K) + u * w * F(I, i2, K);
            double P23 = (1 - v) * (1 - w) * F(i1, 0, 0) + v * (1 - w) * F(i1, J, 0) +
                         (1 - v) * w * F(i1, 0, K) + v * w * F(i1, J, K);
            double P123 = 0.0;
            for (int b = 0; b < 8; ++b) {
                int c1 = (b & 1) ? I : 0, c2 = (b & 2) ? J : 0, c3 = (b & 4) ? K : 0;
                double wt = ((b & 1) ? u : 1 - u) * ((b & 2) ? v : 1 - v) *
                            ((b & 4) ? w : 1 - w);
                P123 += wt * F(c1, c2, c3);
            }
            out[std::size_t(p)] = P1 + P2 + P3 - P12 - P13 - P23 + P123;
        }
    }
    f.swap(out);
}

// Free nodes: interior, excluding the Neumann-derived line i1 = N0-2.
bool is_free_node(const SpatialGrid& g, std::int64_t p) {
    if (g.is_boundary(p)) return false;
    return g.unflatten(p)[0] != g.N[0] - 2;
}

bool is_derived_node(const SpatialGrid& g, std::int64_t p) {
    return !g.is_boundary(p) && g.unflatten(p)[0] == g.N[0] - 2;
}

struct FreeMap {
    std::vector<std::int64_t> nodes; // flat node indices of free nodes
    int layers = 0;

    std::size_t dim() const { return nodes.size() * std::size_t(layers); }
};

FreeMap make_free_map(const SpatialGrid& g, int layers) {
    FreeMap m;
    m.layers = layers;
    for (std::int64_t p = 0; p < g.num_nodes(); ++p)
        if (is_free_node(g, p)) m.nodes.push_back(p);
    return m;
}

void scatter(const FreeMap& m, const std::vector<double>& x, FieldStack& V) {
    std::size_t idx = 0;
    for (int i = 0; i < m.layers; ++i)
        for (std::int64_t p : m.nodes) V[i][p] = x[idx++];
}

void gather(const FreeMap& m, const FieldStack& V, std::vector<double>& x) {
    x.resize(m.dim());
    std::size_t idx = 0;
    for (int i = 0; i < m.layers; ++i)
        for (std::int64_t p : m.nodes) x[idx++] = V[i][p];
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return deterministic_sum(std::int64_t(a.size()),
                             [&](std::int64_t i) { return a[std::size_t(i)] * b[std::size_t(i)]; });
}

} // namespace

FieldStack initial_guess(const DiscreteBoundaryData& dbd, const BackgroundTerms& /*bg*/,
                         const TimeGrid& tg, const SpatialGrid& grid) {
    const int k = tg.k;
    const int n = grid.n();
    const double eps = tg.epsilon;
    // v_bg = d/dt ln u0 at t = eps.
    ScalarField vbg(grid);
    for (std::int64_t p = 0; p < grid.num_nodes(); ++p) {
        auto x = grid.node_coords(p);
        double r2 = 0.0;
        for (int a = 0; a < n; ++a) r2 += x[std::size_t(a)] * x[std::size_t(a)];
        vbg[p] = r2 / (4.0 * eps * eps) - n / (2.0 * eps);
    }
    FieldStack V(grid, k + 1);
    std::vector<double> buf(std::size_t(grid.num_nodes()));
    for (int j = 0; j <= k; ++j) {
        const double gamma = (tg.T - tg.t(j)) / (tg.T - eps);
        for (std::int64_t p = 0; p < grid.num_nodes(); ++p)
            buf[std::size_t(p)] = grid.is_boundary(p)
                                      ? dbd.dirichlet[std::size_t(j)][std::size_t(p)] -
                                            gamma * vbg[p]
                                      : 0.0;
        transfinite_lift(grid, buf);
        for (std::int64_t p = 0; p < grid.num_nodes(); ++p)
            V[j][p] = gamma * vbg[p] + buf[std::size_t(p)];
    }
    return V;
}

void enforce_neumann(FieldStack& V, const DiscreteBoundaryData& dbd, const SpatialGrid& grid) {
    if (grid.N[0] < 4) throw ValidationError("Neumann enforcement needs N[0] >= 4");
    const int I = grid.N[0] - 1;
    const double sp = grid.spacing[0];
    for (int i = 0; i < V.num_layers(); ++i)
        for (std::int64_t p = 0; p < grid.num_nodes(); ++p) {
            if (!is_derived_node(grid, p)) continue;
            auto ix = grid.unflatten(p);
            auto bx = ix, mx = ix;
            bx[0] = I;
            mx[0] = I - 2;
            const std::int64_t b = grid.flatten(bx);
            V[i][p] = 0.75 * dbd.dirichlet[std::size_t(i)][std::size_t(b)] +
                      0.25 * V[i][grid.flatten(mx)] -
                      0.5 * sp * dbd.neumann[std::size_t(i)][std::size_t(b)];
        }
}

double stack_disc_norm(const FieldStack& G) {
    const SpatialGrid& g = *G.grid;
    double vol = 1.0;
    for (int a = 0; a < g.n(); ++a) vol *= g.spacing[std::size_t(a)];
    double s = 0.0;
    for (int i = 0; i < G.num_layers(); ++i)
        s += deterministic_sum(g.num_nodes(),
                               [&](std::int64_t p) { return G[i][p] * G[i][p]; });
    return std::sqrt(vol * s);
}

OptimState minimize(const FieldStack& V0, const DiscreteBoundaryData& dbd,
                    const BackgroundTerms& bg, const TimeGrid& tg,
                    const CarlemanParams& params, const MinimizeOptions& opts,
                    const FieldStack* penalty_ref) {
    const SpatialGrid& grid = *V0.grid;
    const int k = tg.k;
    FreeMap fm = make_free_map(grid, k + 1);

    FieldStack V = V0;
    // Impose both constraints on the starting point.
    for (int i = 0; i <= k; ++i)
        for (std::int64_t p = 0; p < grid.num_nodes(); ++p)
            if (grid.is_boundary(p))
                V[i][p] = dbd.dirichlet[std::size_t(i)][std::size_t(p)];
    enforce_neumann(V, dbd, grid);

    const auto t_start = std::chrono::steady_clock::now();
    auto wall_ms = [&]() {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         t_start)
            .count();
    };

    // J and free-space gradient at the current stack; the derived layer's
    // chain-rule contribution (coefficient 1/4 onto v_{I-2}) is folded in.
    auto eval = [&](const std::vector<double>& x, std::vector<double>* gout) {
        scatter(fm, x, V);
        enforce_neumann(V, dbd, grid);
        double J = functional(V, bg, tg, params, opts.parallel, penalty_ref);
        if (!std::isfinite(J)) throw SolverError("non-finite functional value");
        if (gout) {
            FieldStack G = gradient(V, bg, tg, params, opts.parallel, penalty_ref);
            for (int i = 0; i <= k; ++i)
                for (std::int64_t p = 0; p < grid.num_nodes(); ++p) {
                    if (!is_derived_node(grid, p)) continue;
                    auto ix = grid.unflatten(p);
                    ix[0] -= 1;
                    G[i][grid.flatten(ix)] += 0.25 * G[i][p];
                    G[i][p] = 0.0;
                }
            gather(fm, G, *gout);
        }
        return J;
    };

    const double volsqrt = [&] {
        double vol = 1.0;
        for (int a = 0; a < grid.n(); ++a) vol *= grid.spacing[std::size_t(a)];
        return std::sqrt(vol);
    }();
    auto disc_norm = [&](const std::vector<double>& gvec) {
        return volsqrt * std::sqrt(dot(gvec, gvec));
    };

    OptimState st;
    std::vector<double> x;
    gather(fm, V, x);
    std::vector<double> gvec;
    double J = eval(x, &gvec);
    double gn = disc_norm(gvec);
    st.history.push_back({0, J, gn, 0.0, wall_ms()});

    std::deque<std::pair<std::vector<double>, std::vector<double>>> mem; // (s, y)
    double gd_gamma = opts.gd_gamma;

    int iter = 0;
    while (gn > opts.grad_tol && iter < opts.max_iters) {
        ++iter;
        std::vector<double> p(x.size());
        double step = 1.0;
        if (opts.method == Method::LBFGS) {
            // Two-loop recursion.
            std::vector<double> q = gvec;
            std::vector<double> alpha_i(mem.size());
            for (int i = int(mem.size()) - 1; i >= 0; --i) {
                const auto& [si, yi] = mem[std::size_t(i)];
                double rho = 1.0 / dot(yi, si);
                double a = rho * dot(si, q);
                alpha_i[std::size_t(i)] = a;
                for (std::size_t j = 0; j < q.size(); ++j) q[j] -= a * yi[j];
            }
            double h0 = 1.0;
            if (!mem.empty()) {
                const auto& [sl, yl] = mem.back();
                h0 = dot(sl, yl) / dot(yl, yl);
            } else {
                // First step: scale so the move is a modest fraction of the
                // gradient size.
                double g2 = dot(q, q);
                h0 = (g2 > 0.0) ? 1.0 / std::sqrt(g2) : 1.0;
            }
            for (std::size_t j = 0; j < q.size(); ++j) q[j] *= h0;
            for (int i = 0; i < int(mem.size()); ++i) {
                const auto& [si, yi] = mem[std::size_t(i)];
                double rho = 1.0 / dot(yi, si);
                double b = rho * dot(yi, q);
                for (std::size_t j = 0; j < q.size(); ++j)
                    q[j] += (alpha_i[std::size_t(i)] - b) * si[j];
            }
            for (std::size_t j = 0; j < p.size(); ++j) p[j] = -q[j];
        } else {
            for (std::size_t j = 0; j < p.size(); ++j) p[j] = -gvec[j];
            step = gd_gamma;
        }

        double gTp = dot(gvec, p);
        if (gTp >= 0.0) {
            // Bad curvature information; fall back to steepest descent.
            for (std::size_t j = 0; j < p.size(); ++j) p[j] = -gvec[j];
            gTp = -dot(gvec, gvec);
            mem.clear();
        }

        std::vector<double> xn(x.size());
        double Jn = 0.0;
        if (opts.method == Method::LBFGS) {
            bool ok = false;
            for (int ls = 0; ls < 60; ++ls) {
                for (std::size_t j = 0; j < x.size(); ++j) xn[j] = x[j] + step * p[j];
                Jn = eval(xn, nullptr);
                if (Jn <= J + opts.armijo_c * step * gTp) {
                    ok = true;
                    break;
                }
                step *= 0.5;
            }
            if (!ok) {
                st.V = V;
                st.iterations = iter;
                st.final_J = J;
                st.final_grad_norm = gn;
                throw SolverError("line search failed at iteration " + std::to_string(iter) +
                                  " (J = " + std::to_string(J) + ", |g| = " +
                                  std::to_string(gn) + ")");
            }
        } else {
            for (std::size_t j = 0; j < x.size(); ++j) xn[j] = x[j] + step * p[j];
            Jn = eval(xn, nullptr);
            if (opts.gd_halving && Jn > J) {
                gd_gamma *= 0.5;
                st.history.push_back({iter, J, gn, 0.0, wall_ms()});
                continue;
            }
        }

        std::vector<double> gn_vec;
        Jn = eval(xn, &gn_vec);
        if (opts.method == Method::LBFGS) {
            std::vector<double> svec(x.size()), yvec(x.size());
            for (std::size_t j = 0; j < x.size(); ++j) {
                svec[j] = xn[j] - x[j];
                yvec[j] = gn_vec[j] - gvec[j];
            }
            if (dot(svec, yvec) > 0.0) {
                mem.emplace_back(std::move(svec), std::move(yvec));
                if (int(mem.size()) > opts.lbfgs_memory) mem.pop_front();
            }
        }
        x.swap(xn);
        gvec.swap(gn_vec);
        J = Jn;
        gn = disc_norm(gvec);
        st.history.push_back({iter, J, gn, step, wall_ms()});
    }

    scatter(fm, x, V);
    enforce_neumann(V, dbd, grid);
    st.V = V;
    st.iterations = iter;
    st.final_J = J;
    st.final_grad_norm = gn;
    st.reached_tol = gn <= opts.grad_tol;
    return st;
}

} // namespace cip
