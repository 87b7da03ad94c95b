#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cip/errors.hpp"
#include "cip/io.hpp"
#include "cip/pipeline.hpp"

using namespace cip;

namespace {
std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}
} // namespace

TEST_CASE("dataset round-trips bit-exactly") {
    BoundaryDataset d;
    d.domain.n = 2;
    d.N = {4, 4, 1};
    d.times = {0.01, 1.0 / 3.0, 2.0};
    d.sigma = 0.01;
    d.seed = 42;
    for (int t = 0; t < 3; ++t) {
        d.g0.push_back(std::vector<double>(16, 0.0));
        d.g1.push_back(std::vector<double>(16, 0.0));
        for (int p = 0; p < 16; ++p) {
            d.g0.back()[std::size_t(p)] = 1.0 / (t + p + 1);
            d.g1.back()[std::size_t(p)] = -0.1 * t + 1e-17 * p;
        }
    }
    std::string path = tmp_path("cip_test_dataset.csv");
    write_dataset(path, d);
    BoundaryDataset r = read_dataset(path);
    CHECK(r.domain.n == 2);
    CHECK(r.N == d.N);
    CHECK(r.times == d.times);
    CHECK(r.sigma == d.sigma);
    CHECK(r.seed == d.seed);
    CHECK(r.g0 == d.g0);
    CHECK(r.g1 == d.g1);
    std::remove(path.c_str());
}

TEST_CASE("corrupted dataset header reports the line") {
    std::string path = tmp_path("cip_test_bad.csv");
    {
        std::ofstream out(path);
        out << "cip-dataset,1\nn,2\nlo,1,1\nhi,2,2\nN,banana,4\n";
    }
    try {
        read_dataset(path);
        CHECK(false);
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find(":5:") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("field file round-trips") {
    Domain dom;
    SpatialGrid g = build_grid(dom, {5, 4, 1});
    ScalarField f(g);
    for (std::int64_t p = 0; p < g.num_nodes(); ++p) f[p] = std::sin(double(p)) / 3.0;
    std::string path = tmp_path("cip_test_field.csv");
    write_field(path, f);
    FieldFile r = read_field(path);
    CHECK(r.N[0] == 5);
    CHECK(r.N[1] == 4);
    CHECK(r.values == f.values);
    std::remove(path.c_str());
}

TEST_CASE("render maps extremes and degenerate range") {
    Domain dom;
    SpatialGrid g = build_grid(dom, {4, 4, 1});
    ScalarField f(g, 7.0);
    GrayImage flat = render_field(f);
    CHECK(flat.width == 4);
    CHECK(flat.height == 4);
    for (auto px : flat.pixels) CHECK(px == 128);

    // Highest x2 must land in image row 0.
    f[g.flatten({0, 3, 0})] = 8.0;
    GrayImage img = render_field(f);
    CHECK(img.at(0, 0) == 255);
    CHECK(img.at(3, 0) == 0);
}

TEST_CASE("config parsing with sections and comments") {
    ConfigMap cfg = parse_config_text("top = 1\n[carleman]\nlambda = 4 # inline\n; comment\n"
                                      "[grid]\nN = 10 10\n");
    CHECK(cfg.get("top", "") == "1");
    CHECK(cfg.get_double("carleman.lambda", 0) == 4.0);
    CHECK(cfg.get_list("grid.N") == std::vector<double>{10, 10});
    CHECK(cfg.get_double("carleman.alpha", 3e-5) == 3e-5); // fallback
    CHECK_THROWS_AS(parse_config_text("no equals sign\n"), ValidationError);
}

TEST_CASE("environment variables override config values") {
    CHECK(config_env_name("carleman.reg_order") == "CIP_CARLEMAN_REG_ORDER");
    ConfigMap cfg = parse_config_text("[carleman]\nlambda = 4\n");
    setenv("CIP_CARLEMAN_LAMBDA", "2.5", 1);
    CHECK(cfg.get_double("carleman.lambda", 0) == 2.5);
    unsetenv("CIP_CARLEMAN_LAMBDA");
    CHECK(cfg.get_double("carleman.lambda", 0) == 4.0);
}

TEST_CASE("inverse config defaults match the tuned set") {
    InverseConfig c = config_from_map(ConfigMap{});
    CHECK(c.T == 4.0);
    CHECK(c.Nt == 20);
    CHECK(c.epsilon == 0.01);
    CHECK(c.carleman.alpha == 3e-5);
    CHECK(c.carleman.lambda == 3.0);
    CHECK(c.carleman.c == 5.0);
    CHECK(c.n == 2);
    CHECK(c.N[0] == 20);
}

TEST_CASE("inverse config round-trips through a map") {
    InverseConfig c = config_from_map(ConfigMap{});
    c.carleman.lambda = 4.5;
    c.Nt = 10;
    c.phantom.letter = Letter::SZ;
    InverseConfig r = config_from_map(config_to_map(c));
    CHECK(r.carleman.lambda == 4.5);
    CHECK(r.Nt == 10);
    CHECK(r.phantom.letter == Letter::SZ);
    CHECK(r.optimizer.grad_tol == c.optimizer.grad_tol);
}

TEST_CASE("config validation failures") {
    ConfigMap bad;
    bad.set("time.epsilon", "5"); // >= T
    CHECK_THROWS_AS(config_from_map(bad), ValidationError);
    ConfigMap typo;
    typo.set("carleman.lamda", "3");
    CHECK_THROWS_AS(config_from_map(typo), ValidationError);
}

TEST_CASE("config file write/read round trip") {
    InverseConfig c = config_from_map(ConfigMap{});
    std::string path = tmp_path("cip_test_config.cfg");
    write_config(path, config_to_map(c));
    ConfigMap r = read_config(path);
    CHECK(r.kv == config_to_map(c).kv);
    std::remove(path.c_str());
}
