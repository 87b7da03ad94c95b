#pragma once

#include <array>
#include <vector>

#include "cip/data_model.hpp"
#include "cip/field.hpp"
#include "cip/geometry.hpp"

namespace cip {

// Analytic background at t = epsilon: w_eps = -|x|^2/(4 eps) - n ln(2 sqrt(pi eps)),
// grad_w_eps = -x/(2 eps).
struct BackgroundTerms {
    const SpatialGrid* grid = nullptr;
    double epsilon = 0.0;
    ScalarField w_eps;
    std::array<ScalarField, 3> grad_w_eps;

    BackgroundTerms() = default;
    BackgroundTerms(const SpatialGrid& g, double eps);
};

struct CarlemanParams {
    double lambda = 3.0; // weight exponent scale
    double alpha = 3e-5; // regularization weight
    double c = 5.0;      // exponent shift: effective weight exp(2 lambda (x1^2 - c))
    int reg_order = 3;   // Sobolev order of the penalty, in {2, 3}
    // Residual sum starts at this layer index. The i = 0 elliptic equation has
    // an empty coupling sum and carries an O(1/eps) transport term no discrete
    // layer can balance at eps << h; excluding it (default) keeps the
    // functional consistent. Set to 0 for the literal full sum.
    int first_residual = 1;
    // Penalty differences divided by spacing^order (a consistent Sobolev
    // seminorm, the default) or taken plain. The plain form leaves grid-scale
    // modes essentially unpenalized (each order-o difference carries a factor
    // spacing^o relative to the derivative it represents); without the divided
    // form the interior, where the exponential weight has decayed, is
    // unconditioned and the minimizer drifts along rough modes.
    bool divided_penalty = true;

    void validate() const;
};

double carleman_weight(double x1, double lambda);

// Discrete elliptic residuals L_0..L_k on interior nodes (zero elsewhere):
//   L_i = lap v_i + 2 grad v_i . grad w_eps
//         + 2h grad v_i . sum_{j=0..i} grad v_j   (empty sum for i = 0)
//         + (v_i - v_{i+1})/h                      for i < k
//   L_k uses (v_{k-1} + v_{k-2} + v_{k-3} - 3 v_k)/(6h).
FieldStack residuals(const FieldStack& V, const BackgroundTerms& bg, const TimeGrid& tg);

// J = e^{-2 lambda c} sum_i sum_{interior} L_i^2 e^{2 lambda x1^2} cellvol
//     + alpha * ||V - ref||^2 (discrete Sobolev, order reg_order).
// penalty_ref == nullptr measures the penalty about zero. Weights are handled
// in log space; lambda*x1^2 > 300 is an error.
double functional(const FieldStack& V, const BackgroundTerms& bg, const TimeGrid& tg,
                  const CarlemanParams& params, bool parallel = true,
                  const FieldStack* penalty_ref = nullptr);

// Exact gradient of the discrete J; zero on boundary (Dirichlet) nodes.
FieldStack gradient(const FieldStack& V, const BackgroundTerms& bg, const TimeGrid& tg,
                    const CarlemanParams& params, bool parallel = true,
                    const FieldStack* penalty_ref = nullptr);

// Bregman gap J(V2) - J(V1) - <J'(V1), V2 - V1>. V1, V2 must agree on
// boundary nodes.
double convexity_probe(const FieldStack& V1, const FieldStack& V2,
                       const BackgroundTerms& bg, const TimeGrid& tg,
                       const CarlemanParams& params);

// Discrete Sobolev penalty ||V||^2: squared values plus squared per-axis
// forward differences of orders 1..reg_order (divided by spacing^order when
// `divided` is set), times cell volume.
double sobolev_norm_sq(const FieldStack& V, int reg_order, bool divided = false,
                       bool parallel = true);

} // namespace cip
