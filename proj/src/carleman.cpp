#include "cip/carleman.hpp"

#include <cmath>
#include <string>

#include "cip/parallel.hpp"

namespace cip {

BackgroundTerms::BackgroundTerms(const SpatialGrid& g, double eps) : grid(&g), epsilon(eps) {
    if (!(eps > 0.0))
        throw ValidationError("background terms require epsilon > 0");
    w_eps = ScalarField(g);
    for (int a = 0; a < g.n(); ++a) grad_w_eps[std::size_t(a)] = ScalarField(g);
    const int n = g.n();
    const double logc = n * std::log(2.0 * std::sqrt(M_PI * eps));
    for (std::int64_t node = 0; node < g.num_nodes(); ++node) {
        auto x = g.node_coords(node);
        double r2 = 0.0;
        for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
        w_eps[node] = -r2 / (4.0 * eps) - logc;
        for (int a = 0; a < n; ++a)
            grad_w_eps[std::size_t(a)][node] = -x[std::size_t(a)] / (2.0 * eps);
    }
}

void CarlemanParams::validate() const {
    if (!(lambda >= 1.0))
        throw ValidationError("lambda must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("alpha must lie in (0,1)");
    if (reg_order != 2 && reg_order != 3)
        throw ValidationError("reg_order must be 2 or 3");
    if (first_residual < 0)
        throw ValidationError("first_residual must be >= 0");
}

double carleman_weight(double x1, double lambda) {
    return std::exp(2.0 * lambda * x1 * x1);
}

namespace {

struct Strides {
    std::array<std::int64_t, 3> st{};
    std::array<double, 3> sp{};
    int n;
    std::int64_t total;

    explicit Strides(const SpatialGrid& g) : n(g.n()), total(g.num_nodes()) {
        st[0] = std::int64_t(g.N[1]) * (n == 3 ? g.N[2] : 1);
        st[1] = (n == 3 ? g.N[2] : 1);
        st[2] = 1;
        sp = g.spacing;
    }
};

// One flat buffer holding k+1 layers of n gradient components.
struct VecStack {
    std::vector<double> data;
    std::int64_t nn;
    int n;
    VecStack(int layers, int n_, std::int64_t nn_) : nn(nn_), n(n_) {
        data.assign(std::size_t(layers) * n_ * nn_, 0.0);
    }
    double* at(int layer, int axis) {
        return data.data() + (std::size_t(layer) * n + axis) * std::size_t(nn);
    }
    const double* at(int layer, int axis) const {
        return data.data() + (std::size_t(layer) * n + axis) * std::size_t(nn);
    }
};

bool interior(const SpatialGrid& g, std::int64_t node) { return !g.is_boundary(node); }

// Central gradients of every layer on interior nodes.
void compute_gradients(const FieldStack& V, const Strides& s, const SpatialGrid& g,
                       VecStack& grad, bool par) {
    const int k1 = V.num_layers();
#pragma omp parallel for schedule(static) collapse(2) if (par)
    for (int i = 0; i < k1; ++i)
        for (std::int64_t p = 0; p < s.total; ++p) {
            if (!interior(g, p)) continue;
            const double* v = V[i].values.data();
            for (int a = 0; a < s.n; ++a)
                grad.at(i, a)[p] =
                    (v[p + s.st[std::size_t(a)]] - v[p - s.st[std::size_t(a)]]) /
                    (2.0 * s.sp[std::size_t(a)]);
        }
}

double laplacian_at(const double* v, const Strides& s, std::int64_t p) {
    double lap = 0.0;
    for (int a = 0; a < s.n; ++a)
        lap += (v[p + s.st[std::size_t(a)]] - 2.0 * v[p] + v[p - s.st[std::size_t(a)]]) /
               (s.sp[std::size_t(a)] * s.sp[std::size_t(a)]);
    return lap;
}

// Residual of layer i at interior node p, given gradient prefix sums P
// (P[i] = sum_{j=0..i} grad v_j).
double residual_at(const FieldStack& V, const BackgroundTerms& bg, const TimeGrid& tg,
                   const Strides& s, const VecStack& grad, const VecStack& prefix, int i,
                   std::int64_t p) {
    const int k = V.num_layers() - 1;
    double L = laplacian_at(V[i].values.data(), s, p);
    for (int a = 0; a < s.n; ++a) {
        double gi = grad.at(i, a)[p];
        L += 2.0 * gi * bg.grad_w_eps[std::size_t(a)][p];
        if (i >= 1) L += 2.0 * tg.h * gi * prefix.at(i, a)[p];
    }
    if (i < k)
        L += (V[i][p] - V[i + 1][p]) / tg.h;
    else
        L += (V[k - 1][p] + V[k - 2][p] + V[k - 3][p] - 3.0 * V[k][p]) / (6.0 * tg.h);
    return L;
}

void check_weight_range(const SpatialGrid& g, double lambda) {
    for (int sgn : {0, 1}) {
        double x1 = sgn ? g.domain.hi[0] : g.domain.lo[0];
        if (lambda * x1 * x1 > 300.0)
            throw ValidationError(
                "carleman weight exponent lambda*x1^2 = " + std::to_string(lambda * x1 * x1) +
                " > 300 would overflow; rescale the domain or reduce lambda");
    }
}

double cell_volume(const SpatialGrid& g) {
    double v = 1.0;
    for (int a = 0; a < g.n(); ++a) v *= g.spacing[std::size_t(a)];
    return v;
}

// Effective weight exp(2 lambda (x1^2 - c)) — combined in log space.
double effective_weight(const SpatialGrid& g, std::int64_t p, const CarlemanParams& prm) {
    double x1 = g.domain.lo[0] + g.unflatten(p)[0] * g.spacing[0];
    return std::exp(2.0 * prm.lambda * (x1 * x1 - prm.c));
}

int binom(int n, int r) {
    int v = 1;
    for (int i = 1; i <= r; ++i) v = v * (n - i + 1) / i;
    return v;
}

} // namespace

FieldStack residuals(const FieldStack& V, const BackgroundTerms& bg, const TimeGrid& tg) {
    const SpatialGrid& g = *V.grid;
    const int k = V.num_layers() - 1;
    if (k < 4) throw ValidationError("residuals need k >= 4 (endpoint stencil)");
    Strides s(g);
    VecStack grad(k + 1, s.n, s.total), prefix(k + 1, s.n, s.total);
    compute_gradients(V, s, g, grad, true);
    for (int i = 0; i <= k; ++i)
        for (int a = 0; a < s.n; ++a) {
            double* P = prefix.at(i, a);
            const double* gi = grad.at(i, a);
            const double* Pm = i ? prefix.at(i - 1, a) : nullptr;
            for (std::int64_t p = 0; p < s.total; ++p) P[p] = (i ? Pm[p] : 0.0) + gi[p];
        }
    FieldStack R(g, k + 1);
#pragma omp parallel for schedule(static) collapse(2)
    for (int i = 0; i <= k; ++i)
        for (std::int64_t p = 0; p < s.total; ++p)
            if (interior(g, p)) R[i][p] = residual_at(V, bg, tg, s, grad, prefix, i, p);
    return R;
}

double sobolev_norm_sq(const FieldStack& V, int reg_order, bool divided, bool par) {
    const SpatialGrid& g = *V.grid;
    Strides s(g);
    const double vol = cell_volume(g);
    double total = 0.0;
    for (int i = 0; i < V.num_layers(); ++i) {
        const double* v = V[i].values.data();
        total += deterministic_sum(
            s.total, [&](std::int64_t p) { return v[p] * v[p]; }, par);
        for (int a = 0; a < s.n; ++a) {
            const std::int64_t st = s.st[std::size_t(a)];
            const int Na = g.N[std::size_t(a)];
            for (int o = 1; o <= reg_order; ++o) {
                const double inv = divided ? std::pow(s.sp[std::size_t(a)], -o) : 1.0;
                total += deterministic_sum(
                    s.total,
                    [&, st, Na, o, inv](std::int64_t p) {
                        if (g.unflatten(p)[std::size_t(a)] > Na - 1 - o) return 0.0;
                        double d = 0.0;
                        for (int r = 0; r <= o; ++r) {
                            double c = binom(o, r) * ((o - r) % 2 ? -1.0 : 1.0);
                            d += c * v[p + r * st];
                        }
                        d *= inv;
                        return d * d;
                    },
                    par);
            }
        }
    }
    return total * vol;
}

namespace {

FieldStack stack_minus(const FieldStack& V, const FieldStack& ref) {
    if (ref.num_layers() != V.num_layers() || ref.grid != V.grid)
        throw ValidationError("penalty reference stack does not match V");
    FieldStack D(*V.grid, V.num_layers());
    for (int i = 0; i < V.num_layers(); ++i)
        for (std::int64_t p = 0; p < V.grid->num_nodes(); ++p)
            D[i][p] = V[i][p] - ref[i][p];
    return D;
}

} // namespace

double functional(const FieldStack& V, const BackgroundTerms& bg, const TimeGrid& tg,
                  const CarlemanParams& prm, bool par, const FieldStack* penalty_ref) {
    prm.validate();
    const SpatialGrid& g = *V.grid;
    check_weight_range(g, prm.lambda);
    const int k = V.num_layers() - 1;
    if (k < 4) throw ValidationError("functional needs k >= 4");
    Strides s(g);
    const double vol = cell_volume(g);

    VecStack grad(k + 1, s.n, s.total), prefix(k + 1, s.n, s.total);
    compute_gradients(V, s, g, grad, par);
    for (int i = 0; i <= k; ++i)
        for (int a = 0; a < s.n; ++a) {
            double* P = prefix.at(i, a);
            const double* gi = grad.at(i, a);
            const double* Pm = i ? prefix.at(i - 1, a) : nullptr;
            for (std::int64_t p = 0; p < s.total; ++p) P[p] = (i ? Pm[p] : 0.0) + gi[p];
        }

    double res = 0.0;
    for (int i = std::min(prm.first_residual, k); i <= k; ++i)
        res += deterministic_sum(
            s.total,
            [&](std::int64_t p) {
                if (!interior(g, p)) return 0.0;
                double L = residual_at(V, bg, tg, s, grad, prefix, i, p);
                return L * L * effective_weight(g, p, prm) * vol;
            },
            par);

    double J = res + prm.alpha * sobolev_norm_sq(penalty_ref ? stack_minus(V, *penalty_ref) : V,
                                                 prm.reg_order, prm.divided_penalty, par);
    if (!std::isfinite(J)) throw SolverError("functional evaluated to a non-finite value");
    return J;
}

FieldStack gradient(const FieldStack& V, const BackgroundTerms& bg, const TimeGrid& tg,
                    const CarlemanParams& prm, bool par, const FieldStack* penalty_ref) {
    prm.validate();
    const SpatialGrid& g = *V.grid;
    check_weight_range(g, prm.lambda);
    const int k = V.num_layers() - 1;
    if (k < 4) throw ValidationError("gradient needs k >= 4");
    Strides s(g);
    const double vol = cell_volume(g);
    const double h = tg.h;

    VecStack grad(k + 1, s.n, s.total), prefix(k + 1, s.n, s.total);
    compute_gradients(V, s, g, grad, par);
    for (int i = 0; i <= k; ++i)
        for (int a = 0; a < s.n; ++a) {
            double* P = prefix.at(i, a);
            const double* gi = grad.at(i, a);
            const double* Pm = i ? prefix.at(i - 1, a) : nullptr;
            for (std::int64_t p = 0; p < s.total; ++p) P[p] = (i ? Pm[p] : 0.0) + gi[p];
        }

    // R_i = dJ/dL_i = 2 w(p) vol L_i on interior nodes, zero for excluded layers.
    FieldStack R(g, k + 1);
    const int i_lo = std::min(prm.first_residual, k);
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t p = 0; p < s.total; ++p) {
        if (!interior(g, p)) continue;
        const double w = 2.0 * effective_weight(g, p, prm) * vol;
        for (int i = i_lo; i <= k; ++i)
            R[i][p] = w * residual_at(V, bg, tg, s, grad, prefix, i, p);
    }

    // Vector adjoints T_i = dJ/d(grad v_i):
    //   T_i = R_i (2 grad_w_eps + 2h (P_i + g_i) [i>=1]) + 2h sum_{m>i} R_m g_m.
    VecStack T(k + 1, s.n, s.total);
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t p = 0; p < s.total; ++p) {
        if (!interior(g, p)) continue;
        for (int a = 0; a < s.n; ++a) {
            double suffix = 0.0;
            for (int i = k; i >= 0; --i) {
                double t = R[i][p] * 2.0 * bg.grad_w_eps[std::size_t(a)][p] + 2.0 * h * suffix;
                if (i >= 1)
                    t += R[i][p] * 2.0 * h * (prefix.at(i, a)[p] + grad.at(i, a)[p]);
                T.at(i, a)[p] = t;
                suffix += R[i][p] * grad.at(i, a)[p];
            }
        }
    }

    const FieldStack Dref = penalty_ref ? stack_minus(V, *penalty_ref) : FieldStack();
    const FieldStack& Vp = penalty_ref ? Dref : V;

    FieldStack G(g, k + 1);
#pragma omp parallel for schedule(static) collapse(2) if (par)
    for (int j = 0; j <= k; ++j)
        for (std::int64_t q = 0; q < s.total; ++q) {
            if (!interior(g, q)) continue; // gradient zero on Dirichlet nodes
            auto idx = g.unflatten(q);
            double acc = 0.0;
            // Laplacian and gradient stencil transposes (gather form; R and T
            // are zero at non-interior evaluation points).
            for (int a = 0; a < s.n; ++a) {
                const std::int64_t st = s.st[std::size_t(a)];
                const double sp = s.sp[std::size_t(a)];
                const double lm = (idx[std::size_t(a)] > 0) ? R[j][q - st] : 0.0;
                const double lp = (idx[std::size_t(a)] < g.N[std::size_t(a)] - 1)
                                      ? R[j][q + st]
                                      : 0.0;
                acc += (lm + lp - 2.0 * R[j][q]) / (sp * sp);
                const double tm =
                    (idx[std::size_t(a)] > 0) ? T.at(j, a)[q - st] : 0.0;
                const double tp = (idx[std::size_t(a)] < g.N[std::size_t(a)] - 1)
                                      ? T.at(j, a)[q + st]
                                      : 0.0;
                acc += (tm - tp) / (2.0 * sp);
            }
            // Time-stencil transposes.
            if (j < k) acc += R[j][q] / h;
            if (j >= 1 && j - 1 < k) acc -= R[j - 1][q] / h;
            if (j >= k - 3 && j <= k - 1) acc += R[k][q] / (6.0 * h);
            if (j == k) acc -= 3.0 * R[k][q] / (6.0 * h);
            // Sobolev penalty: value term plus per-axis forward differences.
            double pen = 2.0 * Vp[j][q];
            for (int a = 0; a < s.n; ++a) {
                const std::int64_t st = s.st[std::size_t(a)];
                const int Na = g.N[std::size_t(a)];
                const int ia = idx[std::size_t(a)];
                const double* v = Vp[j].values.data();
                for (int o = 1; o <= prm.reg_order; ++o) {
                    const double inv =
                        prm.divided_penalty ? std::pow(s.sp[std::size_t(a)], -o) : 1.0;
                    for (int r = 0; r <= o; ++r) {
                        const int base = ia - r;
                        if (base < 0 || base > Na - 1 - o) continue;
                        double d = 0.0;
                        for (int rr = 0; rr <= o; ++rr) {
                            double cc = binom(o, rr) * ((o - rr) % 2 ? -1.0 : 1.0);
                            d += cc * v[q + (rr - r) * st];
                        }
                        const double cr = binom(o, r) * ((o - r) % 2 ? -1.0 : 1.0);
                        pen += 2.0 * d * inv * inv * cr;
                    }
                }
            }
            G[j][q] = acc + prm.alpha * pen * vol;
        }
    return G;
}

double convexity_probe(const FieldStack& V1, const FieldStack& V2, const BackgroundTerms& bg,
                       const TimeGrid& tg, const CarlemanParams& prm) {
    const SpatialGrid& g = *V1.grid;
    if (V1.num_layers() != V2.num_layers())
        throw ValidationError("convexity probe: stacks differ in layer count");
    for (int i = 0; i < V1.num_layers(); ++i)
        for (std::int64_t p = 0; p < g.num_nodes(); ++p)
            if (g.is_boundary(p) && V1[i][p] != V2[i][p])
                throw ValidationError("convexity probe: stacks differ on boundary nodes");
    const double J1 = functional(V1, bg, tg, prm);
    const double J2 = functional(V2, bg, tg, prm);
    FieldStack G1 = gradient(V1, bg, tg, prm);
    double inner = 0.0;
    for (int i = 0; i < V1.num_layers(); ++i)
        inner += deterministic_sum(g.num_nodes(), [&](std::int64_t p) {
            return G1[i][p] * (V2[i][p] - V1[i][p]);
        });
    return J2 - J1 - inner;
}

} // namespace cip
