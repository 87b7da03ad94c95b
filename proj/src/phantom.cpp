#include "cip/phantom.hpp"

#include <algorithm>
#include <cmath>

namespace cip {
namespace {

// Axis-aligned rectangle in glyph coordinates (u horizontal, v vertical,
// both in [0,1]). Half-open so adjacent rectangles tile without overlap.
struct Rect {
    double u0, u1, v0, v1;
    bool contains(double u, double v) const {
        return u >= u0 && u < u1 && v >= v0 && v < v1;
    }
};

// Stroke width: 0.08 domain units = 0.16 of the glyph box (the box spans
// half the domain extent).
constexpr double W = 0.16;

std::vector<Rect> glyph_rects(Letter letter) {
    switch (letter) {
    case Letter::A:
        return {{0.0, W, 0.0, 0.92},        // left leg
                {1.0 - W, 1.0, 0.0, 0.92},  // right leg
                {0.0, 1.0, 0.92 - W, 0.92}, // shoulder joining the legs... kept below top
                {W, 1.0 - W, 0.42, 0.58},   // crossbar
                {0.0, 1.0, 0.84, 1.0}};     // top bar
    case Letter::B:
        return {{0.0, W, 0.0, 1.0},           // spine
                {0.0, 0.78, 0.84, 1.0},       // top bar
                {0.0, 0.78, 0.42, 0.58},      // middle bar
                {0.0, 0.78, 0.0, W},          // bottom bar
                {0.78 - W, 0.78, 0.0, 1.0}};  // right side
    case Letter::OmegaGlyph:
        return {{0.0, 1.0, 1.0 - W, 1.0},   // top arc (blocky)
                {0.0, W, 0.22, 1.0},        // left side
                {1.0 - W, 1.0, 0.22, 1.0},  // right side
                {0.0, 0.34, 0.0, W},        // left foot
                {0.66, 1.0, 0.0, W}};       // right foot
    case Letter::SZ: {
        // 'S' in the left half, 'Z' in the right half of the glyph box.
        const double sw = 0.42; // sub-glyph width
        std::vector<Rect> r = {
            {0.0, sw, 1.0 - W, 1.0},      // S top
            {0.0, W, 0.5, 1.0},           // S upper-left
            {0.0, sw, 0.5, 0.5 + W},      // S middle
            {sw - W, sw, W, 0.5 + W},     // S lower-right
            {0.0, sw, 0.0, W},            // S bottom
        };
        const double z0 = 0.58;
        r.push_back({z0, 1.0, 1.0 - W, 1.0});               // Z top
        r.push_back({z0, 1.0, 0.0, W});                     // Z bottom
        // Z diagonal as a three-step staircase.
        r.push_back({1.0 - W - 0.0, 1.0 - 0.0, 0.66, 1.0 - W});
        r.push_back({z0 + (1.0 - z0 - W) / 2, 1.0 - (1.0 - z0 - W) / 2, 0.36, 0.66});
        r.push_back({z0, z0 + W, W, 0.36});
        return r;
    }
    case Letter::L:
        return {{0.0, W, 0.0, 1.0},       // spine
                {0.0, 0.78, 0.0, W}};     // foot
    case Letter::K: {
        std::vector<Rect> r = {{0.0, W, 0.0, 1.0}}; // spine
        // Arms as three-step staircases toward the upper/lower right corners.
        for (int s = 0; s < 3; ++s) {
            double u0 = W + s * (0.78 - W) / 3;
            double u1 = W + (s + 1) * (0.78 - W) / 3;
            double vmid = 0.5;
            double up0 = vmid + s * (1.0 - vmid - W) / 3;
            double dn0 = vmid - W - s * (vmid - W) / 3;
            r.push_back({u0, u1, up0, up0 + W});
            r.push_back({u0, u1, dn0 - (s ? 0.0 : 0.0), dn0 + W});
        }
        return r;
    }
    }
    throw ValidationError("unknown letter glyph");
}

Phantom finalize(const SpatialGrid& grid, double a_inside, std::vector<bool> mask) {
    // One-node interior margin plus the boundary ring itself are kept clear.
    const auto total = grid.num_nodes();
    for (std::int64_t node = 0; node < total; ++node) {
        if (!mask[std::size_t(node)]) continue;
        auto idx = grid.unflatten(node);
        for (int a = 0; a < grid.n(); ++a)
            if (idx[a] <= 1 || idx[a] >= grid.N[a] - 2) {
                mask[std::size_t(node)] = false;
                break;
            }
    }
    Phantom p;
    p.grid = &grid;
    p.a_inside = a_inside;
    p.mask = std::move(mask);
    p.values = ScalarField(grid, 0.0);
    for (std::int64_t node = 0; node < total; ++node)
        if (p.mask[std::size_t(node)]) p.values[node] = a_inside;
    return p;
}

} // namespace

Letter parse_letter(const std::string& name) {
    if (name == "A") return Letter::A;
    if (name == "B") return Letter::B;
    if (name == "Omega" || name == "OmegaGlyph") return Letter::OmegaGlyph;
    if (name == "SZ") return Letter::SZ;
    if (name == "L") return Letter::L;
    if (name == "K") return Letter::K;
    throw ValidationError("unknown glyph name '" + name +
                          "' (expected A, B, Omega, SZ, L, or K)");
}

std::string letter_name(Letter letter) {
    switch (letter) {
    case Letter::A: return "A";
    case Letter::B: return "B";
    case Letter::OmegaGlyph: return "Omega";
    case Letter::SZ: return "SZ";
    case Letter::L: return "L";
    case Letter::K: return "K";
    }
    return "?";
}

Phantom letter_phantom(const SpatialGrid& grid, Letter letter, double a_inside) {
    if (a_inside < 0.0)
        throw ValidationError("phantom amplitude must be >= 0, got " +
                              std::to_string(a_inside));
    const auto rects = glyph_rects(letter);
    const auto& d = grid.domain;
    // Glyph box: centered, covering half of each axis extent (axes 1 and 2).
    const double gx0 = d.lo[0] + 0.25 * (d.hi[0] - d.lo[0]);
    const double gy0 = d.lo[1] + 0.25 * (d.hi[1] - d.lo[1]);
    const double gxw = 0.5 * (d.hi[0] - d.lo[0]);
    const double gyw = 0.5 * (d.hi[1] - d.lo[1]);

    std::vector<bool> mask(std::size_t(grid.num_nodes()), false);
    for (std::int64_t node = 0; node < grid.num_nodes(); ++node) {
        auto x = grid.node_coords(node);
        if (grid.n() == 3) {
            // Extrude over the central third of the x3 axis.
            double c = (x[2] - d.lo[2]) / (d.hi[2] - d.lo[2]);
            if (c < 1.0 / 3.0 || c >= 2.0 / 3.0) continue;
        }
        double u = (x[0] - gx0) / gxw;
        double v = (x[1] - gy0) / gyw;
        for (const auto& r : rects)
            if (r.contains(u, v)) {
                mask[std::size_t(node)] = true;
                break;
            }
    }
    return finalize(grid, a_inside, std::move(mask));
}

Phantom mask_from_image(const SpatialGrid& grid, const GrayImage& image, double a_inside) {
    if (grid.n() != 2)
        throw ValidationError("mask_from_image supports 2-D grids only");
    if (a_inside < 0.0)
        throw ValidationError("phantom amplitude must be >= 0");
    std::vector<bool> mask(std::size_t(grid.num_nodes()), false);
    for (std::int64_t node = 0; node < grid.num_nodes(); ++node) {
        auto idx = grid.unflatten(node);
        // Image columns follow x1; rows run top-to-bottom = decreasing x2.
        double fu = (idx[0] + 0.5) / grid.N[0];
        double fv = 1.0 - (idx[1] + 0.5) / grid.N[1];
        int col = std::min(image.width - 1, int(fu * image.width));
        int row = std::min(image.height - 1, int(fv * image.height));
        mask[std::size_t(node)] = image.at(row, col) < 128;
    }
    return finalize(grid, a_inside, std::move(mask));
}

} // namespace cip
