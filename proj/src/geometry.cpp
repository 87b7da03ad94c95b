#include "cip/geometry.hpp"

#include <cmath>
#include <string>

namespace cip {

void Domain::validate() const {
    if (n != 2 && n != 3)
        throw ValidationError("domain dimension must be 2 or 3, got " + std::to_string(n));
    for (int a = 0; a < n; ++a)
        if (!(lo[a] < hi[a]))
            throw ValidationError("domain axis " + std::to_string(a) +
                                  " requires lo < hi, got [" + std::to_string(lo[a]) +
                                  ", " + std::to_string(hi[a]) + "]");
}

SpatialGrid build_grid(const Domain& domain, const std::array<int, 3>& N) {
    domain.validate();
    SpatialGrid g;
    g.domain = domain;
    g.N = N;
    if (domain.n == 2) g.N[2] = 1;
    for (int a = 0; a < domain.n; ++a) {
        if (g.N[a] < 4)
            throw ValidationError(
                "grid needs >= 4 nodes per axis (one-sided Neumann and "
                "third-difference stencils span 4 nodes), got " +
                std::to_string(g.N[a]) + " on axis " + std::to_string(a));
        g.spacing[a] = (domain.hi[a] - domain.lo[a]) / (g.N[a] - 1);
    }
    return g;
}

std::set<BoundaryFace> classify_boundary(const SpatialGrid& grid, std::int64_t node) {
    if (!grid.is_boundary(node))
        throw ValidationError("classify_boundary called on interior node " +
                              std::to_string(node));
    std::set<BoundaryFace> faces;
    auto idx = grid.unflatten(node);
    if (idx[0] == grid.N[0] - 1) faces.insert(BoundaryFace::Gamma0);
    for (int a = 0; a < grid.n(); ++a) {
        if (idx[a] == 0 || (a > 0 && idx[a] == grid.N[a] - 1)) {
            faces.insert(BoundaryFace::Gamma1);
            break;
        }
    }
    return faces;
}

TimeGrid build_time_grid(double epsilon, double T, int k) {
    if (!(epsilon > 0.0) || !(epsilon < T))
        throw ValidationError("time grid requires 0 < epsilon < T, got epsilon=" +
                              std::to_string(epsilon) + ", T=" + std::to_string(T));
    if (k < 4)
        throw ValidationError("time grid needs k >= 4 subintervals (the endpoint "
                              "stencil reaches back to t_{k-3}), got k=" +
                              std::to_string(k));
    TimeGrid tg;
    tg.epsilon = epsilon;
    tg.T = T;
    tg.k = k;
    tg.h = (T - epsilon) / k;
    return tg;
}

} // namespace cip
