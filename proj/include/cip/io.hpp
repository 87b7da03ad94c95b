#pragma once

#include <map>
#include <string>
#include <vector>

#include "cip/field.hpp"
#include "cip/forward.hpp"
#include "cip/geometry.hpp"
#include "cip/optimizer.hpp"
#include "cip/pgm.hpp"

namespace cip {

// ---------------------------------------------------------------------------
// CSV containers. Every file starts with a magic line `cip-<kind>,<version>`
// followed by metadata rows and payload rows. Doubles are written with 17
// significant digits so a write/read round trip is bit-exact. Parse failures
// throw ValidationError naming the file and the 1-based line number.
// ---------------------------------------------------------------------------

void write_dataset(const std::string& path, const BoundaryDataset& data);
BoundaryDataset read_dataset(const std::string& path);

// A field read back from disk; carries its own geometry so it does not
// dangle on a caller-owned grid.
struct FieldFile {
    Domain domain;
    std::array<int, 3> N{20, 20, 1};
    std::vector<double> values; // flat node order of SpatialGrid

    SpatialGrid make_grid() const { return build_grid(domain, N); }
};

void write_field(const std::string& path, const ScalarField& field);
FieldFile read_field(const std::string& path);

// Iteration log: CSV with header `iter,J,grad_norm,step_size,wall_ms`.
void write_iteration_log(const std::string& path, const std::vector<IterRecord>& history);

// ---------------------------------------------------------------------------
// Rendering. Linear map [min,max] -> [0,255]; a degenerate range renders as
// uniform gray 128. Image rows run in decreasing x2 (image up = +x2),
// columns in increasing x1. For 3-D fields pass the x3 slice index.
// ---------------------------------------------------------------------------
GrayImage render_slice(const std::vector<double>& values, const std::array<int, 3>& N,
                       int n, int i3 = 0);
GrayImage render_field(const ScalarField& field, int i3 = 0);

// ---------------------------------------------------------------------------
// Flat key = value configuration with [section] headers; keys are stored as
// "section.key" ("" section for keys before any header). `#` and `;` start
// comments. Environment variables override file values: the key
// "optimizer.grad_tol" is overridden by CIP_OPTIMIZER_GRAD_TOL.
// ---------------------------------------------------------------------------
struct ConfigMap {
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const;
    // Lookup order: environment override, file value, fallback.
    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    // Whitespace- or comma-separated list of doubles.
    std::vector<double> get_list(const std::string& key) const;

    void set(const std::string& key, const std::string& value) { kv[key] = value; }
};

// Environment-variable name for a config key: CIP_ + uppercased key with
// '.' and '-' mapped to '_'.
std::string config_env_name(const std::string& key);

ConfigMap parse_config_text(const std::string& text, const std::string& origin = "<string>");
ConfigMap read_config(const std::string& path);
void write_config(const std::string& path, const ConfigMap& cfg);

} // namespace cip
