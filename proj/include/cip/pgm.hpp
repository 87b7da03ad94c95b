#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cip {

// 8-bit grayscale image, row 0 at the top.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // row-major, width*height

    std::uint8_t at(int row, int col) const {
        return pixels[std::size_t(row) * width + col];
    }
};

// Binary (P5) PGM with maxval 255. read_pgm reports parse failures with the
// byte offset of the offending data.
GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& img);

} // namespace cip
