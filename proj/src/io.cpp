#include "cip/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cip/errors.hpp"

namespace cip {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

[[noreturn]] void parse_fail(const std::string& path, int line_no, const std::string& what) {
    throw ValidationError(path + ":" + std::to_string(line_no) + ": " + what);
}

double to_double(const std::string& s, const std::string& path, int line_no) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        parse_fail(path, line_no, "expected a number, got '" + s + "'");
    }
}

long long to_ll(const std::string& s, const std::string& path, int line_no) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        parse_fail(path, line_no, "expected an integer, got '" + s + "'");
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "' for reading");
    return in;
}

void write_geometry_rows(std::ofstream& out, const Domain& d, const std::array<int, 3>& N) {
    out << "n," << d.n << "\n";
    out << "lo";
    for (int a = 0; a < d.n; ++a) out << ',' << fmt_double(d.lo[a]);
    out << "\nhi";
    for (int a = 0; a < d.n; ++a) out << ',' << fmt_double(d.hi[a]);
    out << "\nN";
    for (int a = 0; a < d.n; ++a) out << ',' << N[a];
    out << "\n";
}

struct Reader {
    std::string path;
    std::ifstream in;
    int line_no = 0;

    explicit Reader(const std::string& p) : path(p), in(open_in(p)) {}

    bool next(std::vector<std::string>& cells) {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line[0] == '#') continue;
            cells = split_csv(line);
            return true;
        }
        return false;
    }
    std::vector<std::string> expect(const std::string& tag, int min_cells) {
        std::vector<std::string> cells;
        if (!next(cells)) parse_fail(path, line_no + 1, "unexpected end of file, wanted '" + tag + "'");
        if (cells[0] != tag)
            parse_fail(path, line_no, "expected row '" + tag + "', got '" + cells[0] + "'");
        if (int(cells.size()) < min_cells)
            parse_fail(path, line_no, "row '" + tag + "' needs at least " +
                                          std::to_string(min_cells) + " cells");
        return cells;
    }
};

void read_geometry_rows(Reader& r, Domain& d, std::array<int, 3>& N) {
    auto cells = r.expect("n", 2);
    d.n = int(to_ll(cells[1], r.path, r.line_no));
    if (d.n != 2 && d.n != 3) parse_fail(r.path, r.line_no, "n must be 2 or 3");
    cells = r.expect("lo", 1 + d.n);
    for (int a = 0; a < d.n; ++a) d.lo[a] = to_double(cells[1 + a], r.path, r.line_no);
    cells = r.expect("hi", 1 + d.n);
    for (int a = 0; a < d.n; ++a) d.hi[a] = to_double(cells[1 + a], r.path, r.line_no);
    cells = r.expect("N", 1 + d.n);
    N = {1, 1, 1};
    for (int a = 0; a < d.n; ++a) N[a] = int(to_ll(cells[1 + a], r.path, r.line_no));
    d.validate();
}

} // namespace

void write_dataset(const std::string& path, const BoundaryDataset& data) {
    auto out = open_out(path);
    out << "cip-dataset,1\n";
    write_geometry_rows(out, data.domain, data.N);
    out << "sigma," << fmt_double(data.sigma) << "\n";
    out << "seed," << data.seed << "\n";
    out << "times";
    for (double t : data.times) out << ',' << fmt_double(t);
    out << "\n";
    for (std::size_t i = 0; i < data.g0.size(); ++i) {
        out << "g0," << i;
        for (double v : data.g0[i]) out << ',' << fmt_double(v);
        out << "\n";
    }
    for (std::size_t i = 0; i < data.g1.size(); ++i) {
        out << "g1," << i;
        for (double v : data.g1[i]) out << ',' << fmt_double(v);
        out << "\n";
    }
    if (!out) throw ValidationError("write failed for '" + path + "'");
}

BoundaryDataset read_dataset(const std::string& path) {
    Reader r(path);
    auto magic = r.expect("cip-dataset", 2);
    if (magic[1] != "1") parse_fail(path, r.line_no, "unsupported schema version " + magic[1]);

    BoundaryDataset data;
    read_geometry_rows(r, data.domain, data.N);
    auto cells = r.expect("sigma", 2);
    data.sigma = to_double(cells[1], path, r.line_no);
    cells = r.expect("seed", 2);
    data.seed = std::uint64_t(to_ll(cells[1], path, r.line_no));
    cells = r.expect("times", 2);
    for (std::size_t i = 1; i < cells.size(); ++i)
        data.times.push_back(to_double(cells[i], path, r.line_no));

    const std::size_t nt = data.times.size();
    std::int64_t nodes = 1;
    for (int a = 0; a < data.domain.n; ++a) nodes *= data.N[a];
    data.g0.assign(nt, {});
    data.g1.assign(nt, {});
    std::vector<std::string> row;
    while (r.next(row)) {
        if (row[0] != "g0" && row[0] != "g1")
            parse_fail(path, r.line_no, "unknown row tag '" + row[0] + "'");
        if (row.size() < 2) parse_fail(path, r.line_no, "data row needs a time index");
        long long ti = to_ll(row[1], path, r.line_no);
        if (ti < 0 || std::size_t(ti) >= nt)
            parse_fail(path, r.line_no, "time index " + std::to_string(ti) + " out of range");
        if (std::int64_t(row.size()) - 2 != nodes)
            parse_fail(path, r.line_no,
                       "expected " + std::to_string(nodes) + " values, got " +
                           std::to_string(row.size() - 2));
        auto& dst = (row[0] == "g0" ? data.g0 : data.g1)[std::size_t(ti)];
        dst.resize(std::size_t(nodes));
        for (std::int64_t j = 0; j < nodes; ++j)
            dst[std::size_t(j)] = to_double(row[std::size_t(j) + 2], path, r.line_no);
    }
    for (std::size_t i = 0; i < nt; ++i)
        if (data.g0[i].empty() || data.g1[i].empty())
            parse_fail(path, r.line_no, "missing g0/g1 row for time index " + std::to_string(i));
    return data;
}

void write_field(const std::string& path, const ScalarField& field) {
    if (!field.grid) throw ValidationError("field has no grid");
    const SpatialGrid& g = *field.grid;
    auto out = open_out(path);
    out << "cip-field,1\n";
    write_geometry_rows(out, g.domain, g.N);
    const std::int64_t slab = g.num_nodes() / g.N[0];
    for (int i1 = 0; i1 < g.N[0]; ++i1) {
        out << "values," << i1;
        for (std::int64_t j = 0; j < slab; ++j) out << ',' << fmt_double(field[i1 * slab + j]);
        out << "\n";
    }
    if (!out) throw ValidationError("write failed for '" + path + "'");
}

FieldFile read_field(const std::string& path) {
    Reader r(path);
    auto magic = r.expect("cip-field", 2);
    if (magic[1] != "1") parse_fail(path, r.line_no, "unsupported schema version " + magic[1]);
    FieldFile f;
    read_geometry_rows(r, f.domain, f.N);
    std::int64_t slab = 1;
    for (int a = 1; a < f.domain.n; ++a) slab *= f.N[a];
    f.values.assign(std::size_t(slab) * f.N[0], 0.0);
    std::vector<std::string> row;
    int rows_seen = 0;
    while (r.next(row)) {
        if (row[0] != "values") parse_fail(path, r.line_no, "unknown row tag '" + row[0] + "'");
        if (row.size() < 2) parse_fail(path, r.line_no, "values row needs a slab index");
        long long i1 = to_ll(row[1], path, r.line_no);
        if (i1 < 0 || i1 >= f.N[0]) parse_fail(path, r.line_no, "slab index out of range");
        if (std::int64_t(row.size()) - 2 != slab)
            parse_fail(path, r.line_no, "expected " + std::to_string(slab) + " values");
        for (std::int64_t j = 0; j < slab; ++j)
            f.values[std::size_t(i1 * slab + j)] = to_double(row[std::size_t(j) + 2], path, r.line_no);
        ++rows_seen;
    }
    if (rows_seen != f.N[0])
        parse_fail(path, r.line_no, "expected " + std::to_string(f.N[0]) + " values rows, got " +
                                        std::to_string(rows_seen));
    return f;
}

void write_iteration_log(const std::string& path, const std::vector<IterRecord>& history) {
    auto out = open_out(path);
    out << "iter,J,grad_norm,step_size,wall_ms\n";
    for (const auto& rec : history)
        out << rec.iter << ',' << fmt_double(rec.J) << ',' << fmt_double(rec.grad_norm) << ','
            << fmt_double(rec.step) << ',' << fmt_double(rec.wall_ms) << "\n";
    if (!out) throw ValidationError("write failed for '" + path + "'");
}

GrayImage render_slice(const std::vector<double>& values, const std::array<int, 3>& N,
                       int n, int i3) {
    const int N2 = (n == 3) ? N[2] : 1;
    if (i3 < 0 || i3 >= N2) throw ValidationError("slice index out of range");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    GrayImage img;
    img.width = N[0];
    img.height = N[1];
    img.pixels.assign(std::size_t(img.width) * img.height, 128);
    const double span = hi - lo;
    for (int i1 = 0; i1 < N[0]; ++i1) {
        for (int i2 = 0; i2 < N[1]; ++i2) {
            std::int64_t flat = std::int64_t(i1) * N[1] + i2;
            if (n == 3) flat = flat * N[2] + i3;
            int row = N[1] - 1 - i2; // image up = +x2
            int col = i1;
            double v = values[std::size_t(flat)];
            std::uint8_t px = 128;
            if (span > 0) {
                double t = (v - lo) / span;
                px = std::uint8_t(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
            }
            img.pixels[std::size_t(row) * img.width + col] = px;
        }
    }
    return img;
}

GrayImage render_field(const ScalarField& field, int i3) {
    if (!field.grid) throw ValidationError("field has no grid");
    return render_slice(field.values, field.grid->N, field.grid->n(), i3);
}

// --------------------------------------------------------------------------
// Config files
// --------------------------------------------------------------------------

namespace {
std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}
} // namespace

std::string config_env_name(const std::string& key) {
    std::string out = "CIP_";
    for (char ch : key) {
        if (ch == '.' || ch == '-')
            out.push_back('_');
        else
            out.push_back(char(std::toupper(static_cast<unsigned char>(ch))));
    }
    return out;
}

bool ConfigMap::has(const std::string& key) const {
    if (std::getenv(config_env_name(key).c_str())) return true;
    return kv.count(key) > 0;
}

std::string ConfigMap::get(const std::string& key, const std::string& fallback) const {
    if (const char* env = std::getenv(config_env_name(key).c_str())) return env;
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    std::string s = get(key, "");
    if (s.empty()) return fallback;
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': expected a number, got '" + s + "'");
    }
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
    std::string s = get(key, "");
    if (s.empty()) return fallback;
    try {
        return std::stoi(s);
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': expected an integer, got '" + s + "'");
    }
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
    std::string s = get(key, "");
    if (s.empty()) return fallback;
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ValidationError("config key '" + key + "': expected a boolean, got '" + s + "'");
}

std::vector<double> ConfigMap::get_list(const std::string& key) const {
    std::string s = get(key, "");
    for (char& ch : s)
        if (ch == ',') ch = ' ';
    std::istringstream iss(s);
    std::vector<double> out;
    double v;
    while (iss >> v) out.push_back(v);
    return out;
}

ConfigMap parse_config_text(const std::string& text, const std::string& origin) {
    ConfigMap cfg;
    std::istringstream iss(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(iss, line)) {
        ++line_no;
        std::size_t cut = line.find_first_of("#;");
        if (cut != std::string::npos) line = line.substr(0, cut);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ValidationError(origin + ":" + std::to_string(line_no) +
                                      ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(origin + ":" + std::to_string(line_no) +
                                  ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ValidationError(origin + ":" + std::to_string(line_no) + ": empty key");
        cfg.kv[section.empty() ? key : section + "." + key] = value;
    }
    return cfg;
}

ConfigMap read_config(const std::string& path) {
    auto in = open_in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

void write_config(const std::string& path, const ConfigMap& cfg) {
    auto out = open_out(path);
    // Section-less keys first: once a [section] header is emitted every
    // following line belongs to it.
    for (const auto& [key, value] : cfg.kv)
        if (key.find('.') == std::string::npos) out << key << " = " << value << "\n";
    std::string section;
    for (const auto& [key, value] : cfg.kv) {
        std::size_t dot = key.rfind('.');
        if (dot == std::string::npos) continue;
        std::string sec = key.substr(0, dot);
        if (sec != section) {
            out << '[' << sec << "]\n";
            section = sec;
        }
        out << key.substr(dot + 1) << " = " << value << "\n";
    }
    if (!out) throw ValidationError("write failed for '" + path + "'");
}

} // namespace cip
