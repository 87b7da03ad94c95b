#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <vector>

#include "cip/errors.hpp"

namespace cip {

// Axis-aligned rectangular domain in 2 or 3 dimensions.
struct Domain {
    int n = 2;                              // spatial dimension, 2 or 3
    std::array<double, 3> lo{1.0, 1.0, 1.0};
    std::array<double, 3> hi{2.0, 2.0, 2.0};

    void validate() const;
};

enum class BoundaryFace { Gamma0, Gamma1 };

// Uniform tensor-product grid over a Domain.
//
// Node ordering is row-major with the x1 index slowest: for n=2 the flat
// index of (i1, i2) is i1*N[1] + i2; for n=3 it is (i1*N[1] + i2)*N[2] + i3.
// Gamma0 is the face x1 = hi[0]; every other boundary node is Gamma1.
struct SpatialGrid {
    Domain domain;
    std::array<int, 3> N{20, 20, 1};        // nodes per axis; N[2]=1 when n=2
    std::array<double, 3> spacing{0, 0, 0}; // (hi-lo)/(N-1) per axis

    int n() const { return domain.n; }
    std::int64_t num_nodes() const {
        return std::int64_t(N[0]) * N[1] * (domain.n == 3 ? N[2] : 1);
    }

    std::array<int, 3> unflatten(std::int64_t node) const {
        std::array<int, 3> idx{0, 0, 0};
        if (domain.n == 3) {
            idx[2] = int(node % N[2]);
            node /= N[2];
        }
        idx[1] = int(node % N[1]);
        idx[0] = int(node / N[1]);
        return idx;
    }
    std::int64_t flatten(const std::array<int, 3>& idx) const {
        std::int64_t f = std::int64_t(idx[0]) * N[1] + idx[1];
        if (domain.n == 3) f = f * N[2] + idx[2];
        return f;
    }

    // Coordinates are computed from the integer index, never accumulated,
    // so they are bit-reproducible.
    std::array<double, 3> node_coords(std::int64_t node) const {
        auto idx = unflatten(node);
        std::array<double, 3> x{0, 0, 0};
        for (int a = 0; a < domain.n; ++a)
            x[a] = domain.lo[a] + idx[a] * spacing[a];
        return x;
    }

    bool is_boundary(std::int64_t node) const {
        auto idx = unflatten(node);
        for (int a = 0; a < domain.n; ++a)
            if (idx[a] == 0 || idx[a] == N[a] - 1) return true;
        return false;
    }
};

// Uniform partition of [epsilon, T] into k subintervals, t_i = epsilon + i*h.
struct TimeGrid {
    double epsilon = 0.01;
    double T = 4.0;
    int k = 20;
    double h = 0.0;

    double t(int i) const { return epsilon + i * ((T - epsilon) / k); }
};

SpatialGrid build_grid(const Domain& domain, const std::array<int, 3>& N);
std::set<BoundaryFace> classify_boundary(const SpatialGrid& grid, std::int64_t node);
TimeGrid build_time_grid(double epsilon, double T, int k);

} // namespace cip
