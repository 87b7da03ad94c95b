#pragma once

#include <cstdint>
#include <vector>

#include "cip/geometry.hpp"

namespace cip {

// Nodal values of one scalar function on a SpatialGrid, stored in the grid's
// flat node order.
struct ScalarField {
    const SpatialGrid* grid = nullptr;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const SpatialGrid& g, double fill = 0.0)
        : grid(&g), values(std::size_t(g.num_nodes()), fill) {}

    double& operator[](std::int64_t node) { return values[std::size_t(node)]; }
    double operator[](std::int64_t node) const { return values[std::size_t(node)]; }
    std::int64_t size() const { return std::int64_t(values.size()); }
};

// The semi-discrete unknown V: k+1 scalar fields, one per time node.
struct FieldStack {
    const SpatialGrid* grid = nullptr;
    std::vector<ScalarField> layers;

    FieldStack() = default;
    FieldStack(const SpatialGrid& g, int k_plus_1)
        : grid(&g), layers(std::size_t(k_plus_1), ScalarField(g)) {}

    int num_layers() const { return int(layers.size()); }
    ScalarField& operator[](int i) { return layers[std::size_t(i)]; }
    const ScalarField& operator[](int i) const { return layers[std::size_t(i)]; }
};

} // namespace cip
