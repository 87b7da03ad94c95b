#include <doctest.h>

#include "cip/errors.hpp"
#include "cip/phantom.hpp"

using namespace cip;

namespace {
SpatialGrid default_grid(int N = 20) {
    Domain d;
    return build_grid(d, {N, N, 1});
}
} // namespace

TEST_CASE("letter phantom structure") {
    SpatialGrid g = default_grid();
    Phantom ph = letter_phantom(g, Letter::B, 2.0);
    CHECK(ph.a_inside == 2.0);

    int inside = 0;
    for (std::int64_t p = 0; p < g.num_nodes(); ++p) {
        if (ph.mask[std::size_t(p)]) {
            ++inside;
            CHECK(ph.values[p] == 2.0);
            CHECK(!g.is_boundary(p));
        } else {
            CHECK(ph.values[p] == 0.0);
        }
    }
    CHECK(inside > 0);
}

TEST_CASE("phantom keeps a clear margin near the boundary") {
    SpatialGrid g = default_grid();
    Phantom ph = letter_phantom(g, Letter::B, 2.0);
    for (std::int64_t p = 0; p < g.num_nodes(); ++p) {
        auto idx = g.unflatten(p);
        bool near = false;
        for (int a = 0; a < 2; ++a)
            if (idx[a] <= 1 || idx[a] >= g.N[a] - 2) near = true;
        if (near) CHECK(ph.values[p] == 0.0);
    }
}

TEST_CASE("phantom is deterministic and letters differ") {
    SpatialGrid g = default_grid();
    Phantom b1 = letter_phantom(g, Letter::B, 2.0);
    Phantom b2 = letter_phantom(g, Letter::B, 2.0);
    CHECK(b1.mask == b2.mask);
    Phantom l = letter_phantom(g, Letter::L, 2.0);
    CHECK(b1.mask != l.mask);
}

TEST_CASE("letter names round-trip") {
    for (Letter l : {Letter::A, Letter::B, Letter::OmegaGlyph, Letter::SZ, Letter::L, Letter::K})
        CHECK(parse_letter(letter_name(l)) == l);
    CHECK_THROWS_AS(parse_letter("not-a-letter"), ValidationError);
}

TEST_CASE("3-D phantom extrudes over the central third") {
    Domain d;
    d.n = 3;
    SpatialGrid g = build_grid(d, {12, 12, 12});
    Phantom ph = letter_phantom(g, Letter::L, 2.0);
    int inside = 0;
    for (std::int64_t p = 0; p < g.num_nodes(); ++p) {
        if (!ph.mask[std::size_t(p)]) continue;
        ++inside;
        auto x = g.node_coords(p);
        CHECK(x[2] > 1.25);
        CHECK(x[2] < 1.75);
    }
    CHECK(inside > 0);
}

TEST_CASE("mask from image thresholds at 50% and flips rows") {
    SpatialGrid g = default_grid(8);
    GrayImage img;
    img.width = 8;
    img.height = 8;
    img.pixels.assign(64, 255); // light = background
    // One dark pixel at image row 3, col 3: rows run from high x2 down, so
    // this is node (i1=3, i2=4).
    img.pixels[3 * 8 + 3] = 0;
    Phantom ph = mask_from_image(g, img, 3.0);
    CHECK(ph.mask[std::size_t(g.flatten({3, 4, 0}))]);
    int count = 0;
    for (bool m : ph.mask) count += m ? 1 : 0;
    CHECK(count == 1);
    CHECK(ph.values[g.flatten({3, 4, 0})] == 3.0);
}
