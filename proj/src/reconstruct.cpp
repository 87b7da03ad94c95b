#include "cip/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cip {

FieldStack accumulate_w(const FieldStack& V, const BackgroundTerms& bg, const TimeGrid& tg) {
    const SpatialGrid& g = *V.grid;
    const int k1 = V.num_layers();
    FieldStack W(g, k1);
    for (std::int64_t p = 0; p < g.num_nodes(); ++p) {
        double acc = bg.w_eps[p];
        for (int i = 0; i < k1; ++i) {
            acc += tg.h * V[i][p];
            W[i][p] = acc;
        }
    }
    return W;
}

namespace {

// f_i = lap w_i + |grad w_i|^2 at an interior node (central differences).
double f_at(const FieldStack& W, const SpatialGrid& g, int i, std::int64_t p) {
    const int n = g.n();
    std::int64_t st[3] = {std::int64_t(g.N[1]) * (n == 3 ? g.N[2] : 1),
                          (n == 3 ? g.N[2] : 1), 1};
    double val = 0.0;
    const double* w = W[i].values.data();
    for (int a = 0; a < n; ++a) {
        const double sp = g.spacing[std::size_t(a)];
        val += (w[p + st[a]] - 2.0 * w[p] + w[p - st[a]]) / (sp * sp);
        const double gr = (w[p + st[a]] - w[p - st[a]]) / (2.0 * sp);
        val += gr * gr;
    }
    return val;
}

} // namespace

ScalarField recover_coefficient(const FieldStack& w_layers, const BackgroundTerms& bg,
                                const TimeGrid& tg, const SpatialGrid& grid,
                                RecoverForm form) {
    const int k = w_layers.num_layers() - 1;
    if (k < 4) throw ValidationError("recover_coefficient needs k >= 4");
    ScalarField a(grid);
    const double h = tg.h;
    if (form == RecoverForm::FullWindow) {
        const double span = tg.T - tg.epsilon;
        for (std::int64_t p = 0; p < grid.num_nodes(); ++p) {
            if (grid.is_boundary(p)) continue;
            double acc = (w_layers[k][p] - bg.w_eps[p]) / span;
            for (int i = 0; i <= k; ++i) acc -= h / span * f_at(w_layers, grid, i, p);
            a[p] = acc;
        }
        return a;
    }
    // InnerWindow: w_i corresponds to time t_{i+1} (the accumulated sum of
    // interval-mean time derivatives), so average over [t_1, t_k] using
    // f-samples at both cell ends. The per-cell interpolant A + B/t^2 is
    // integrated exactly: f = w_t behaves like 1/t^2 near the source.
    const double t1 = tg.t(1);
    const double span = tg.t(k) - t1;
    for (std::int64_t p = 0; p < grid.num_nodes(); ++p) {
        if (grid.is_boundary(p)) continue;
        double acc = (w_layers[k - 1][p] - w_layers[0][p]) / span;
        for (int i = 0; i + 1 <= k - 1; ++i) {
            const double ta = tg.t(i + 1), tb = tg.t(i + 2);
            const double fa = f_at(w_layers, grid, i, p);
            const double fb = f_at(w_layers, grid, i + 1, p);
            const double ia2 = 1.0 / (ta * ta), ib2 = 1.0 / (tb * tb);
            const double B = (fa - fb) / (ia2 - ib2);
            const double A = fa - B * ia2;
            const double cell = A * (tb - ta) + B * (1.0 / ta - 1.0 / tb);
            acc -= cell / span;
        }
        a[p] = acc;
    }
    return a;
}

MetricRecord metrics(const ScalarField& a_comp, const Phantom& phantom) {
    const SpatialGrid& g = *a_comp.grid;
    if (phantom.grid != a_comp.grid &&
        (phantom.grid->N != g.N || phantom.grid->domain.n != g.domain.n))
        throw ValidationError("metrics: phantom and field live on different grids");

    MetricRecord m;
    double num = 0.0, den = 0.0;
    for (std::int64_t p = 0; p < g.num_nodes(); ++p) {
        const double d = a_comp[p] - phantom.values[p];
        num += d * d;
        den += phantom.values[p] * phantom.values[p];
    }
    m.rel_L2_err = std::sqrt(num) / std::max(std::sqrt(den), 1e-300);

    for (std::int64_t p = 0; p < g.num_nodes(); ++p)
        if (!g.is_boundary(p)) m.max_value = std::max(m.max_value, a_comp[p]);
    const double true_max = *std::max_element(phantom.values.values.begin(),
                                               phantom.values.values.end());
    m.max_value_rel_err =
        true_max > 0.0 ? std::abs(m.max_value - true_max) / true_max : m.max_value;

    // IoU of {a_comp >= max/2} vs the phantom mask, and mask centroids.
    const double thr = m.max_value / 2.0;
    std::int64_t inter = 0, uni = 0;
    std::array<double, 3> c_rec{0, 0, 0}, c_true{0, 0, 0};
    std::int64_t n_rec = 0, n_true = 0;
    for (std::int64_t p = 0; p < g.num_nodes(); ++p) {
        const bool rec = m.max_value > 0.0 && !g.is_boundary(p) && a_comp[p] >= thr;
        const bool tru = phantom.mask[std::size_t(p)];
        if (rec && tru) ++inter;
        if (rec || tru) ++uni;
        auto x = g.node_coords(p);
        if (rec) {
            ++n_rec;
            for (int a = 0; a < g.n(); ++a) c_rec[std::size_t(a)] += x[std::size_t(a)];
        }
        if (tru) {
            ++n_true;
            for (int a = 0; a < g.n(); ++a) c_true[std::size_t(a)] += x[std::size_t(a)];
        }
    }
    m.iou_at_half_max = uni > 0 ? double(inter) / double(uni) : 1.0;
    if (n_rec > 0 && n_true > 0) {
        double d2 = 0.0;
        for (int a = 0; a < g.n(); ++a) {
            const double d = c_rec[std::size_t(a)] / n_rec - c_true[std::size_t(a)] / n_true;
            d2 += d * d;
        }
        m.centroid_offset = std::sqrt(d2);
    } else {
        m.centroid_offset = std::numeric_limits<double>::infinity();
    }
    return m;
}

} // namespace cip
