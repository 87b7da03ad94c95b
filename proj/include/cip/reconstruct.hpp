#pragma once

#include "cip/carleman.hpp"
#include "cip/field.hpp"
#include "cip/phantom.hpp"

namespace cip {

// Quadrature form of the time average in the coefficient formula.
//   FullWindow: (w_k - w_eps)/(T - eps) - (h/(T-eps)) sum_{i=0..k} f_i
//     — the literal Riemann form; its first time cell [eps, t_1] is
//     represented by a single sample of f ~ 1/t^2, which leaves an O(h/eps)
//     residue at eps << h (kept for the refinement oracle and comparison).
//   InnerWindow: averages over [t_1, T] where every cell has f samples at
//     both ends; per-cell quadrature integrates the local model A + B/t^2
//     exactly, which matches the 1/t^2 short-time behavior of f = w_t.
enum class RecoverForm { InnerWindow, FullWindow };

// w_i = w_eps + h * sum_{j=0..i} v_j, per node.
FieldStack accumulate_w(const FieldStack& V, const BackgroundTerms& bg, const TimeGrid& tg);

// Recovered coefficient from the accumulated log-solution stack; central
// differences on interior nodes, zero on boundary nodes.
ScalarField recover_coefficient(const FieldStack& w_layers, const BackgroundTerms& bg,
                                const TimeGrid& tg, const SpatialGrid& grid,
                                RecoverForm form = RecoverForm::InnerWindow);

struct MetricRecord {
    double rel_L2_err = 0.0;
    double max_value = 0.0;
    double max_value_rel_err = 0.0;
    double iou_at_half_max = 0.0;
    double centroid_offset = 0.0; // distance between centroids, space units
};

MetricRecord metrics(const ScalarField& a_comp, const Phantom& phantom);

} // namespace cip
