#pragma once

#include <vector>

#include "cip/carleman.hpp"
#include "cip/data_model.hpp"
#include "cip/field.hpp"

namespace cip {

enum class Method { LBFGS, GradientDescent };

struct MinimizeOptions {
    Method method = Method::LBFGS;
    double grad_tol = 0.01;  // on the discrete L2 norm of the gradient field
    int max_iters = 5000;
    int lbfgs_memory = 10;
    double armijo_c = 1e-4;
    double gd_gamma = 1e-3;  // fixed step for gradient descent
    bool gd_halving = true;  // halve gamma when J increases
    bool parallel = true;
};

struct IterRecord {
    int iter;
    double J;
    double grad_norm;  // discrete L2 norm
    double step;
    double wall_ms;
};

struct OptimState {
    FieldStack V;
    int iterations = 0;
    std::vector<IterRecord> history;
    double final_J = 0.0;
    double final_grad_norm = 0.0;
    bool reached_tol = false;
};

// The paper-style first guess: layer j = gamma_j * v_bg + transfinite lift of
// (dirichlet[j] - gamma_j * v_bg) restricted to the boundary, where
// gamma_j = (T - t_j)/(T - eps) and v_bg = |x|^2/(4 eps^2) - n/(2 eps).
// The lift reproduces its boundary data exactly.
FieldStack initial_guess(const DiscreteBoundaryData& dbd, const BackgroundTerms& bg,
                         const TimeGrid& tg, const SpatialGrid& grid);

// Sets the first interior node on every Gamma0-normal line so the one-sided
// stencil matches the Neumann data:
//   v_{I-1} = 3/4 dirichlet + 1/4 v_{I-2} - (spacing/2) neumann.
// These nodes are derived variables, excluded from the optimizer's free set.
void enforce_neumann(FieldStack& V, const DiscreteBoundaryData& dbd, const SpatialGrid& grid);

// Discrete L2 norm of a stack: sqrt(cellvol * sum of squared values).
double stack_disc_norm(const FieldStack& G);

// Minimizes J over the free nodes (interior minus the Neumann-derived layer);
// boundary and derived values are re-imposed after every update. Terminates
// when the discrete L2 gradient norm falls to grad_tol or at max_iters.
// penalty_ref, when given, is the stack the Sobolev penalty is measured
// about (see functional).
OptimState minimize(const FieldStack& V0, const DiscreteBoundaryData& dbd,
                    const BackgroundTerms& bg, const TimeGrid& tg,
                    const CarlemanParams& params, const MinimizeOptions& opts,
                    const FieldStack* penalty_ref = nullptr);

} // namespace cip
