#pragma once

#include <string>
#include <vector>

#include "cip/field.hpp"
#include "cip/geometry.hpp"
#include "cip/pgm.hpp"

namespace cip {

enum class Letter { A, B, OmegaGlyph, SZ, L, K };

Letter parse_letter(const std::string& name);
std::string letter_name(Letter letter);

// Ground-truth coefficient: a_inside on the mask, 0 elsewhere. The mask never
// touches the boundary ring (one interior node of margin is kept clear as
// well, so the coefficient vanishes in a neighborhood of the boundary).
struct Phantom {
    const SpatialGrid* grid = nullptr;
    double a_inside = 0.0;
    std::vector<bool> mask;   // per node
    ScalarField values;       // a_inside on mask, 0 elsewhere
};

// Rasterizes a built-in blocky glyph. The glyph bounding box is centered in
// the domain and covers half of each axis extent; strokes are about 0.08
// domain units wide. 3-D grids extrude the 2-D glyph over the central third
// of the x3 axis.
Phantom letter_phantom(const SpatialGrid& grid, Letter letter, double a_inside);

// Thresholds a grayscale image at 50% (dark pixels become inclusion),
// resamples nearest-neighbor onto the grid. Image rows map to decreasing x2;
// columns to increasing x1. 2-D grids only.
Phantom mask_from_image(const SpatialGrid& grid, const GrayImage& image, double a_inside);

} // namespace cip
