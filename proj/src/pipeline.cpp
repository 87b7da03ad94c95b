#include "cip/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cip/errors.hpp"

namespace cip {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T>
T parse_enum(const std::string& key, const std::string& value,
             std::initializer_list<std::pair<const char*, T>> table) {
    for (const auto& [name, item] : table)
        if (value == name) return item;
    std::string allowed;
    for (const auto& [name, item] : table) {
        if (!allowed.empty()) allowed += ", ";
        allowed += name;
    }
    throw ValidationError("config key '" + key + "': unknown value '" + value +
                          "' (allowed: " + allowed + ")");
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "grid.n", "grid.N", "domain.lo", "domain.hi",
        "time.T", "time.Nt", "time.epsilon",
        "phantom.kind", "phantom.letter", "phantom.a_inside", "phantom.image",
        "noise.sigma", "noise.seed", "noise.exempt_anchor",
        "forward.shape", "forward.r", "forward.mesh", "forward.steps", "forward.xi",
        "forward.scheme",
        "carleman.lambda", "carleman.alpha", "carleman.c", "carleman.reg_order",
        "carleman.first_residual", "carleman.divided_penalty",
        "optimizer.method", "optimizer.grad_tol", "optimizer.max_iters",
        "optimizer.lbfgs_memory", "optimizer.armijo_c", "optimizer.gd_gamma",
        "optimizer.gd_halving", "optimizer.parallel",
        "recover.form", "output.dir",
        "guess.smooth_passes", "guess.penalty_about",
    };
    return keys;
}

} // namespace

void InverseConfig::validate() const {
    if (n != 2 && n != 3) throw ValidationError("grid.n must be 2 or 3");
    for (int a = 0; a < n; ++a) {
        if (N[std::size_t(a)] < 4)
            throw ValidationError("grid.N must be >= 4 per axis (one-sided stencils)");
        if (!(domain.lo[std::size_t(a)] < domain.hi[std::size_t(a)]))
            throw ValidationError("domain.lo must be < domain.hi per axis");
    }
    if (!(epsilon > 0.0) || !(epsilon < T))
        throw ValidationError("time.epsilon must satisfy 0 < epsilon < T");
    if (Nt < 4) throw ValidationError("time.Nt must be >= 4 (endpoint stencil)");
    if (sigma < 0.0) throw ValidationError("noise.sigma must be >= 0");
    if (phantom.kind != "letter" && phantom.kind != "image" && phantom.kind != "none")
        throw ValidationError("phantom.kind must be letter, image or none");
    if (phantom.kind == "image" && phantom.image_path.empty())
        throw ValidationError("phantom.kind=image needs phantom.image");
    if (phantom.a_inside < 0.0) throw ValidationError("phantom.a_inside must be >= 0");
    aux.validate(domain);
    carleman.validate();
    if (optimizer.grad_tol <= 0.0) throw ValidationError("optimizer.grad_tol must be > 0");
    if (optimizer.max_iters < 0) throw ValidationError("optimizer.max_iters must be >= 0");
}

SpatialGrid InverseConfig::make_grid() const {
    Domain d = domain;
    d.n = n;
    std::array<int, 3> counts = N;
    if (n == 2) counts[2] = 1;
    return build_grid(d, counts);
}

TimeGrid InverseConfig::make_time_grid() const { return build_time_grid(epsilon, T, Nt); }

InverseConfig config_from_map(const ConfigMap& cfg) {
    for (const auto& [key, value] : cfg.kv)
        if (!known_keys().count(key))
            throw ValidationError("unknown config key '" + key + "'");

    InverseConfig c;
    c.n = cfg.get_int("grid.n", c.n);
    {
        auto counts = cfg.get_list("grid.N");
        if (counts.size() == 1) counts.assign(std::size_t(c.n), counts[0]);
        if (!counts.empty()) {
            if (int(counts.size()) != c.n)
                throw ValidationError("grid.N needs 1 or n entries");
            for (int a = 0; a < c.n; ++a) c.N[std::size_t(a)] = int(counts[std::size_t(a)]);
        }
        auto lo = cfg.get_list("domain.lo");
        auto hi = cfg.get_list("domain.hi");
        if (lo.size() == 1) lo.assign(std::size_t(c.n), lo[0]);
        if (hi.size() == 1) hi.assign(std::size_t(c.n), hi[0]);
        if (!lo.empty()) {
            if (int(lo.size()) != c.n) throw ValidationError("domain.lo needs 1 or n entries");
            for (int a = 0; a < c.n; ++a) c.domain.lo[std::size_t(a)] = lo[std::size_t(a)];
        }
        if (!hi.empty()) {
            if (int(hi.size()) != c.n) throw ValidationError("domain.hi needs 1 or n entries");
            for (int a = 0; a < c.n; ++a) c.domain.hi[std::size_t(a)] = hi[std::size_t(a)];
        }
    }
    c.domain.n = c.n;

    c.T = cfg.get_double("time.T", c.T);
    c.Nt = cfg.get_int("time.Nt", c.Nt);
    c.epsilon = cfg.get_double("time.epsilon", c.epsilon);

    c.phantom.kind = cfg.get("phantom.kind", c.phantom.kind);
    if (cfg.has("phantom.letter")) c.phantom.letter = parse_letter(cfg.get("phantom.letter", ""));
    c.phantom.a_inside = cfg.get_double("phantom.a_inside", c.phantom.a_inside);
    c.phantom.image_path = cfg.get("phantom.image", c.phantom.image_path);

    c.sigma = cfg.get_double("noise.sigma", c.sigma);
    c.seed = std::uint64_t(cfg.get_double("noise.seed", double(c.seed)));
    c.noise_exempt_anchor = cfg.get_bool("noise.exempt_anchor", c.noise_exempt_anchor);

    if (cfg.has("forward.shape"))
        c.aux.shape = parse_enum<AuxShape>("forward.shape", cfg.get("forward.shape", ""),
                                           {{"box", AuxShape::Box}, {"ball", AuxShape::Ball}});
    c.aux.r = cfg.get_double("forward.r", c.aux.r);
    c.aux.mesh = cfg.get_double("forward.mesh", c.aux.mesh);
    c.aux.steps = cfg.get_int("forward.steps", c.aux.steps);
    c.mollifier.xi = cfg.get_double("forward.xi", c.mollifier.xi);
    if (cfg.has("forward.scheme"))
        c.scheme = parse_enum<TimeScheme>("forward.scheme", cfg.get("forward.scheme", ""),
                                          {{"crank-nicolson", TimeScheme::CrankNicolson},
                                           {"implicit-euler", TimeScheme::ImplicitEuler}});

    c.carleman.lambda = cfg.get_double("carleman.lambda", c.carleman.lambda);
    c.carleman.alpha = cfg.get_double("carleman.alpha", c.carleman.alpha);
    c.carleman.c = cfg.get_double("carleman.c", c.carleman.c);
    c.carleman.reg_order = cfg.get_int("carleman.reg_order", c.carleman.reg_order);
    c.carleman.first_residual = cfg.get_int("carleman.first_residual", c.carleman.first_residual);
    c.carleman.divided_penalty =
        cfg.get_bool("carleman.divided_penalty", c.carleman.divided_penalty);

    if (cfg.has("optimizer.method"))
        c.optimizer.method =
            parse_enum<Method>("optimizer.method", cfg.get("optimizer.method", ""),
                               {{"lbfgs", Method::LBFGS}, {"gd", Method::GradientDescent}});
    c.optimizer.grad_tol = cfg.get_double("optimizer.grad_tol", c.optimizer.grad_tol);
    c.optimizer.max_iters = cfg.get_int("optimizer.max_iters", c.optimizer.max_iters);
    c.optimizer.lbfgs_memory = cfg.get_int("optimizer.lbfgs_memory", c.optimizer.lbfgs_memory);
    c.optimizer.armijo_c = cfg.get_double("optimizer.armijo_c", c.optimizer.armijo_c);
    c.optimizer.gd_gamma = cfg.get_double("optimizer.gd_gamma", c.optimizer.gd_gamma);
    c.optimizer.gd_halving = cfg.get_bool("optimizer.gd_halving", c.optimizer.gd_halving);
    c.optimizer.parallel = cfg.get_bool("optimizer.parallel", c.optimizer.parallel);

    if (cfg.has("recover.form"))
        c.recover_form = parse_enum<RecoverForm>(
            "recover.form", cfg.get("recover.form", ""),
            {{"inner-window", RecoverForm::InnerWindow}, {"full-window", RecoverForm::FullWindow}});
    c.output_dir = cfg.get("output.dir", c.output_dir);
    c.guess_smooth_passes = cfg.get_int("guess.smooth_passes", c.guess_smooth_passes);
    c.penalty_about_guess = cfg.get_bool("guess.penalty_about", c.penalty_about_guess);

    c.validate();
    return c;
}

ConfigMap config_to_map(const InverseConfig& c) {
    ConfigMap cfg;
    cfg.set("grid.n", std::to_string(c.n));
    {
        std::string counts, lo, hi;
        for (int a = 0; a < c.n; ++a) {
            if (a) counts += " ", lo += " ", hi += " ";
            counts += std::to_string(c.N[std::size_t(a)]);
            lo += fmt(c.domain.lo[std::size_t(a)]);
            hi += fmt(c.domain.hi[std::size_t(a)]);
        }
        cfg.set("grid.N", counts);
        cfg.set("domain.lo", lo);
        cfg.set("domain.hi", hi);
    }
    cfg.set("time.T", fmt(c.T));
    cfg.set("time.Nt", std::to_string(c.Nt));
    cfg.set("time.epsilon", fmt(c.epsilon));
    cfg.set("phantom.kind", c.phantom.kind);
    cfg.set("phantom.letter", letter_name(c.phantom.letter));
    cfg.set("phantom.a_inside", fmt(c.phantom.a_inside));
    if (!c.phantom.image_path.empty()) cfg.set("phantom.image", c.phantom.image_path);
    cfg.set("noise.sigma", fmt(c.sigma));
    cfg.set("noise.seed", std::to_string(c.seed));
    cfg.set("noise.exempt_anchor", c.noise_exempt_anchor ? "true" : "false");
    cfg.set("forward.shape", c.aux.shape == AuxShape::Box ? "box" : "ball");
    cfg.set("forward.r", fmt(c.aux.r));
    cfg.set("forward.mesh", fmt(c.aux.mesh));
    cfg.set("forward.steps", std::to_string(c.aux.steps));
    cfg.set("forward.xi", fmt(c.mollifier.xi));
    cfg.set("forward.scheme",
            c.scheme == TimeScheme::CrankNicolson ? "crank-nicolson" : "implicit-euler");
    cfg.set("carleman.lambda", fmt(c.carleman.lambda));
    cfg.set("carleman.alpha", fmt(c.carleman.alpha));
    cfg.set("carleman.c", fmt(c.carleman.c));
    cfg.set("carleman.reg_order", std::to_string(c.carleman.reg_order));
    cfg.set("carleman.first_residual", std::to_string(c.carleman.first_residual));
    cfg.set("carleman.divided_penalty", c.carleman.divided_penalty ? "true" : "false");
    cfg.set("optimizer.method", c.optimizer.method == Method::LBFGS ? "lbfgs" : "gd");
    cfg.set("optimizer.grad_tol", fmt(c.optimizer.grad_tol));
    cfg.set("optimizer.max_iters", std::to_string(c.optimizer.max_iters));
    cfg.set("optimizer.lbfgs_memory", std::to_string(c.optimizer.lbfgs_memory));
    cfg.set("optimizer.armijo_c", fmt(c.optimizer.armijo_c));
    cfg.set("optimizer.gd_gamma", fmt(c.optimizer.gd_gamma));
    cfg.set("optimizer.gd_halving", c.optimizer.gd_halving ? "true" : "false");
    cfg.set("optimizer.parallel", c.optimizer.parallel ? "true" : "false");
    cfg.set("recover.form",
            c.recover_form == RecoverForm::InnerWindow ? "inner-window" : "full-window");
    cfg.set("output.dir", c.output_dir);
    cfg.set("guess.smooth_passes", std::to_string(c.guess_smooth_passes));
    cfg.set("guess.penalty_about", c.penalty_about_guess ? "true" : "false");
    return cfg;
}

namespace {

Phantom build_phantom(const InverseConfig& c, const SpatialGrid& grid) {
    if (c.phantom.kind == "letter") return letter_phantom(grid, c.phantom.letter, c.phantom.a_inside);
    if (c.phantom.kind == "image")
        return mask_from_image(grid, read_pgm(c.phantom.image_path), c.phantom.a_inside);
    Phantom zero;
    zero.grid = &grid;
    zero.a_inside = 0.0;
    zero.mask.assign(std::size_t(grid.num_nodes()), false);
    zero.values = ScalarField(grid, 0.0);
    return zero;
}

} // namespace

BoundaryDataset simulate(const InverseConfig& config) {
    config.validate();
    SpatialGrid grid = config.make_grid();
    TimeGrid tg = config.make_time_grid();
    Phantom phantom = build_phantom(config, grid);
    BoundaryDataset data =
        simulate_dataset(grid, tg, config.aux, phantom, config.mollifier, config.scheme);
    if (config.sigma > 0.0)
        data = add_noise(data, config.sigma, config.seed, config.noise_exempt_anchor);
    return data;
}

ReconstructionResult invert(const InverseConfig& config, const BoundaryDataset& data) {
    config.validate();
    ReconstructionResult result;
    auto grid = std::make_shared<SpatialGrid>(config.make_grid());
    result.grid = grid;
    TimeGrid tg = config.make_time_grid();

    if (data.domain.n != config.n)
        throw ValidationError("dataset dimension does not match the config");
    for (int a = 0; a < config.n; ++a) {
        if (data.N[std::size_t(a)] != grid->N[std::size_t(a)])
            throw ValidationError("dataset grid does not match the config grid");
        if (std::abs(data.domain.lo[std::size_t(a)] - grid->domain.lo[std::size_t(a)]) > 1e-12 ||
            std::abs(data.domain.hi[std::size_t(a)] - grid->domain.hi[std::size_t(a)]) > 1e-12)
            throw ValidationError("dataset domain does not match the config domain");
    }

    DiscreteBoundaryData dbd = discretize_boundary(data, tg);
    BackgroundTerms bg(*grid, config.epsilon);

    // The guess interior comes from (optionally smoothed) data; the hard
    // constraints keep the raw data. With penalty_about_guess the Sobolev
    // term is measured about this constrained starting stack.
    FieldStack V0 = [&] {
        if (config.guess_smooth_passes <= 0) return initial_guess(dbd, bg, tg, *grid);
        DiscreteBoundaryData smooth =
            smooth_boundary_tangential(dbd, *grid, config.guess_smooth_passes);
        return initial_guess(smooth, bg, tg, *grid);
    }();
    for (int i = 0; i <= tg.k; ++i)
        for (std::int64_t p = 0; p < grid->num_nodes(); ++p)
            if (grid->is_boundary(p))
                V0[i][p] = dbd.dirichlet[std::size_t(i)][std::size_t(p)];
    enforce_neumann(V0, dbd, *grid);
    const FieldStack ref = V0;
    result.optim = minimize(V0, dbd, bg, tg, config.carleman, config.optimizer,
                            config.penalty_about_guess ? &ref : nullptr);
    result.w_layers = accumulate_w(result.optim.V, bg, tg);
    result.a_comp =
        recover_coefficient(result.w_layers, bg, tg, *grid, config.recover_form);
    Phantom phantom = build_phantom(config, *grid);
    result.metric = metrics(result.a_comp, phantom);
    result.config_snapshot = config_to_map(config);
    return result;
}

void write_result(const std::string& dir, const ReconstructionResult& result) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory '" + dir + "'");

    write_field(dir + "/a_comp.csv", result.a_comp);
    const SpatialGrid& g = *result.a_comp.grid;
    int mid = g.n() == 3 ? g.N[2] / 2 : 0;
    write_pgm(dir + "/a_comp.pgm", render_field(result.a_comp, mid));
    write_iteration_log(dir + "/iterations.csv", result.optim.history);
    write_config(dir + "/config.cfg", result.config_snapshot);

    std::ofstream out(dir + "/metrics.csv");
    if (!out) throw ValidationError("cannot open metrics.csv for writing");
    out << "rel_L2_err,max_value,max_value_rel_err,iou_at_half_max,centroid_offset,"
           "iterations,final_J,final_grad_norm,reached_tol\n";
    out << fmt(result.metric.rel_L2_err) << ',' << fmt(result.metric.max_value) << ','
        << fmt(result.metric.max_value_rel_err) << ',' << fmt(result.metric.iou_at_half_max)
        << ',' << fmt(result.metric.centroid_offset) << ',' << result.optim.iterations << ','
        << fmt(result.optim.final_J) << ',' << fmt(result.optim.final_grad_norm) << ','
        << (result.optim.reached_tol ? 1 : 0) << "\n";
}

} // namespace cip
