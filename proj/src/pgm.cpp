#include "cip/pgm.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "cip/errors.hpp"

namespace cip {
namespace {

[[noreturn]] void fail(const std::string& path, std::streampos where, const std::string& msg) {
    std::ostringstream os;
    os << path << ": PGM parse error at byte " << where << ": " << msg;
    throw ValidationError(os.str());
}

// Skips whitespace and '#' comments, then reads one unsigned decimal token.
int read_header_int(std::istream& in, const std::string& path, const char* what) {
    int c = in.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#')
            while (c != EOF && c != '\n') c = in.get();
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c))
        fail(path, in.tellg(), std::string("expected ") + what);
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > 1 << 30) fail(path, in.tellg(), std::string(what) + " out of range");
        c = in.get();
    }
    if (c != EOF) in.unget();
    return int(v);
}

} // namespace

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(path + ": cannot open for reading");
    char m0 = char(in.get()), m1 = char(in.get());
    if (m0 != 'P' || m1 != '5')
        fail(path, 0, "magic is not 'P5'");
    GrayImage img;
    img.width = read_header_int(in, path, "width");
    img.height = read_header_int(in, path, "height");
    int maxval = read_header_int(in, path, "maxval");
    if (img.width <= 0 || img.height <= 0)
        fail(path, in.tellg(), "non-positive dimensions");
    if (maxval != 255)
        fail(path, in.tellg(), "only maxval 255 is supported, got " + std::to_string(maxval));
    int c = in.get(); // single whitespace byte separates header from raster
    if (c == EOF || !std::isspace(c))
        fail(path, in.tellg(), "missing whitespace before raster");
    img.pixels.resize(std::size_t(img.width) * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
    if (std::size_t(in.gcount()) != img.pixels.size())
        fail(path, in.tellg(), "raster truncated: expected " +
                                   std::to_string(img.pixels.size()) + " bytes, got " +
                                   std::to_string(in.gcount()));
    return img;
}

void write_pgm(const std::string& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError(path + ": cannot open for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              std::streamsize(img.pixels.size()));
    if (!out) throw SolverError(path + ": write failed");
}

} // namespace cip
