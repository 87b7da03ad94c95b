#pragma once

#include <cstdint>
#include <vector>

#include "cip/forward.hpp"
#include "cip/geometry.hpp"

namespace cip {

// Discrete boundary conditions for the elliptic layer system: time-stencil
// derivatives of the log-transformed measurements.
//   dirichlet[i][node] — value of v(., t_i) on every boundary node
//   neumann[i][node]   — value of d(v)/dx1 on Gamma0 nodes (x1 = hi)
struct DiscreteBoundaryData {
    Domain domain;
    std::array<int, 3> N{};
    TimeGrid tg;
    std::vector<std::vector<double>> dirichlet;
    std::vector<std::vector<double>> neumann;
};

// Multiplies every sample by (1 + sigma*zeta), zeta i.i.d. uniform on [-1,1],
// independent streams for g0 and g1. When exempt_anchor_layer is set, the
// t = epsilon layer is left untouched: that layer holds the short-time
// asymptotic model values, not a measurement.
BoundaryDataset add_noise(const BoundaryDataset& data, double sigma, std::uint64_t seed,
                          bool exempt_anchor_layer = true);

// Maps measurements to log-derivative data (s0 = ln g0, s1 = g1/g0) and
// applies the time stencils:
//   dirichlet[i] = (s0(t_{i+1}) - s0(t_i))/h                    for i < k
//   dirichlet[k] = (3 s0(t_k) - s0(t_{k-1}) - s0(t_{k-2}) - s0(t_{k-3}))/(6h)
// and the same stencils for neumann from s1.
DiscreteBoundaryData discretize_boundary(const BoundaryDataset& data, const TimeGrid& tg);

// Smooths the Dirichlet layers along each boundary face (1-2-1 kernel per
// in-face axis, `passes` times, face edge/corner values kept unchanged);
// nodes shared by several faces get the average of the per-face results.
// Used to build the optimizer's reference/starting stack without anchoring
// measurement noise into the interior; the constraints themselves keep the
// raw data. Neumann layers are smoothed the same way along Gamma0.
DiscreteBoundaryData smooth_boundary_tangential(const DiscreteBoundaryData& dbd,
                                                const SpatialGrid& grid, int passes);

} // namespace cip
