// Command-line front end: simulate / invert / sweep / render / metrics.
// Exit codes: 0 success, 2 bad input (config, flags, files), 1 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cip/errors.hpp"
#include "cip/io.hpp"
#include "cip/pipeline.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides; // key=value
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Configuration file (key = value sections)");
    cmd->add_option("--set", opts.overrides,
                    "Override a config key, e.g. --set carleman.lambda=4 (repeatable)");
}

cip::InverseConfig load_config(const CommonOpts& opts) {
    cip::ConfigMap cfg;
    if (!opts.config_path.empty()) cfg = cip::read_config(opts.config_path);
    for (const std::string& kv : opts.overrides) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw cip::ValidationError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cip::config_from_map(cfg);
}

void print_metrics(const cip::ReconstructionResult& r) {
    std::printf("iterations      %d%s\n", r.optim.iterations,
                r.optim.reached_tol ? "  (reached grad_tol)" : "  (max_iters)");
    std::printf("final_J         %.6g\n", r.optim.final_J);
    std::printf("final_grad_norm %.6g\n", r.optim.final_grad_norm);
    std::printf("rel_L2_err      %.6g\n", r.metric.rel_L2_err);
    std::printf("max_value       %.6g\n", r.metric.max_value);
    std::printf("iou_at_half_max %.6g\n", r.metric.iou_at_half_max);
    std::printf("centroid_offset %.6g\n", r.metric.centroid_offset);
}

int cmd_simulate(const CommonOpts& common, const std::string& out_path) {
    cip::InverseConfig config = load_config(common);
    cip::BoundaryDataset data = cip::simulate(config);
    std::string path = out_path.empty() ? config.output_dir + "/dataset.csv" : out_path;
    std::filesystem::create_directories(std::filesystem::path(path).parent_path().empty()
                                            ? "."
                                            : std::filesystem::path(path).parent_path().string());
    cip::write_dataset(path, data);
    // Snapshot the exact configuration next to the data for reproducibility.
    cip::write_config(path + ".cfg", cip::config_to_map(config));
    std::printf("wrote %s (%zu time nodes)\n", path.c_str(), data.times.size());
    return 0;
}

int cmd_invert(const CommonOpts& common, const std::string& dataset_path) {
    cip::InverseConfig config = load_config(common);
    cip::BoundaryDataset data = cip::read_dataset(dataset_path);
    cip::ReconstructionResult result = cip::invert(config, data);
    cip::write_result(config.output_dir, result);
    print_metrics(result);
    std::printf("wrote %s/{a_comp.csv,a_comp.pgm,iterations.csv,metrics.csv,config.cfg}\n",
                config.output_dir.c_str());
    return 0;
}

int cmd_sweep(const CommonOpts& common, const std::string& axis,
              const std::vector<double>& values) {
    if (values.empty()) throw cip::ValidationError("sweep needs a nonempty value list");
    cip::InverseConfig base = load_config(common);

    // The amplitude axis changes the simulated data; every other axis reuses
    // one dataset. sigma re-noises the same clean simulation.
    const bool resimulate = (axis == "amplitude");
    cip::BoundaryDataset shared;
    if (!resimulate) {
        cip::InverseConfig sim = base;
        if (axis == "sigma") sim.sigma = 0.0;
        shared = cip::simulate(sim);
    }

    std::filesystem::create_directories(base.output_dir);
    std::string summary_path = base.output_dir + "/sweep_" + axis + ".csv";
    std::ofstream summary(summary_path);
    summary << "value,status,rel_L2_err,max_value,iou_at_half_max,centroid_offset,"
               "iterations,final_grad_norm\n";

    for (double value : values) {
        cip::InverseConfig run = base;
        char tag[64];
        std::snprintf(tag, sizeof(tag), "%s_%g", axis.c_str(), value);
        run.output_dir = base.output_dir + "/" + tag;
        try {
            if (axis == "Nt")
                run.Nt = int(value);
            else if (axis == "epsilon")
                run.epsilon = value;
            else if (axis == "lambda")
                run.carleman.lambda = value;
            else if (axis == "sigma")
                run.sigma = value;
            else if (axis == "amplitude")
                run.phantom.a_inside = value;
            else
                throw cip::ValidationError("unknown sweep axis '" + axis + "'");

            cip::BoundaryDataset data;
            if (resimulate)
                data = cip::simulate(run);
            else if (axis == "sigma" && value > 0.0)
                data = cip::add_noise(shared, value, run.seed, run.noise_exempt_anchor);
            else if (axis == "Nt" || axis == "epsilon") {
                // The time axis changes the sample instants, so the forward
                // field must be re-sampled.
                data = cip::simulate(run);
            } else
                data = shared;

            cip::ReconstructionResult result = cip::invert(run, data);
            cip::write_result(run.output_dir, result);
            summary << value << ",ok," << result.metric.rel_L2_err << ','
                    << result.metric.max_value << ',' << result.metric.iou_at_half_max << ','
                    << result.metric.centroid_offset << ',' << result.optim.iterations << ','
                    << result.optim.final_grad_norm << "\n";
            std::printf("%s: rel_L2_err %.4g  max %.4g  IoU %.4g\n", tag,
                        result.metric.rel_L2_err, result.metric.max_value,
                        result.metric.iou_at_half_max);
        } catch (const std::exception& err) {
            summary << value << ",failed,,,,,,\n";
            std::fprintf(stderr, "%s: FAILED: %s\n", tag, err.what());
        }
        summary.flush();
    }
    std::printf("wrote %s\n", summary_path.c_str());
    return 0;
}

int cmd_render(const std::string& field_path, std::string out_path) {
    cip::FieldFile f = cip::read_field(field_path);
    if (out_path.empty())
        out_path = field_path.substr(0, field_path.find_last_of('.')) + ".pgm";
    if (f.domain.n == 2) {
        cip::write_pgm(out_path, cip::render_slice(f.values, f.N, 2, 0));
        std::printf("wrote %s\n", out_path.c_str());
        return 0;
    }
    // 3-D: one image per slice plus the mid slice under the plain name.
    std::string stem = out_path.substr(0, out_path.find_last_of('.'));
    for (int i3 = 0; i3 < f.N[2]; ++i3) {
        char path[4096];
        std::snprintf(path, sizeof(path), "%s_slice%02d.pgm", stem.c_str(), i3);
        cip::write_pgm(path, cip::render_slice(f.values, f.N, 3, i3));
    }
    cip::write_pgm(out_path, cip::render_slice(f.values, f.N, 3, f.N[2] / 2));
    std::printf("wrote %s and %d slices\n", out_path.c_str(), f.N[2]);
    return 0;
}

int cmd_metrics(const CommonOpts& common, const std::string& field_path) {
    cip::InverseConfig config = load_config(common);
    cip::FieldFile f = cip::read_field(field_path);
    cip::SpatialGrid grid = f.make_grid();
    cip::ScalarField a(grid);
    a.values = f.values;
    cip::Phantom phantom =
        config.phantom.kind == "image"
            ? cip::mask_from_image(grid, cip::read_pgm(config.phantom.image_path),
                                   config.phantom.a_inside)
            : cip::letter_phantom(grid, config.phantom.letter, config.phantom.a_inside);
    cip::MetricRecord m = cip::metrics(a, phantom);
    std::printf("rel_L2_err      %.6g\n", m.rel_L2_err);
    std::printf("max_value       %.6g\n", m.max_value);
    std::printf("max_value_rel_err %.6g\n", m.max_value_rel_err);
    std::printf("iou_at_half_max %.6g\n", m.iou_at_half_max);
    std::printf("centroid_offset %.6g\n", m.centroid_offset);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Potential reconstruction from lateral parabolic boundary data"};
    app.require_subcommand(1);

    CommonOpts sim_opts, inv_opts, sweep_opts, met_opts;
    std::string sim_out, inv_dataset, sweep_axis, render_in, render_out, metrics_field;
    std::vector<double> sweep_values;

    auto* sim = app.add_subcommand("simulate", "Run the forward solver and write a dataset");
    add_common(sim, sim_opts);
    sim->add_option("-o,--output", sim_out, "Dataset path (default <output.dir>/dataset.csv)");

    auto* inv = app.add_subcommand("invert", "Reconstruct the coefficient from a dataset");
    add_common(inv, inv_opts);
    inv->add_option("dataset", inv_dataset, "Dataset CSV from `simulate`")->required();

    auto* sweep = app.add_subcommand("sweep", "Invert across one parameter axis");
    add_common(sweep, sweep_opts);
    sweep->add_option("axis", sweep_axis, "One of Nt, epsilon, lambda, sigma, amplitude")
        ->required();
    sweep->add_option("values", sweep_values, "Axis values")->required();

    auto* render = app.add_subcommand("render", "Render a field CSV as PGM");
    render->add_option("field", render_in, "Field CSV")->required();
    render->add_option("-o,--output", render_out, "Image path (default: alongside input)");

    auto* met = app.add_subcommand("metrics", "Metrics of a stored field vs the configured phantom");
    add_common(met, met_opts);
    met->add_option("field", metrics_field, "Field CSV")->required();

    try {
        app.parse(argc, argv);
        if (sim->parsed()) return cmd_simulate(sim_opts, sim_out);
        if (inv->parsed()) return cmd_invert(inv_opts, inv_dataset);
        if (sweep->parsed()) return cmd_sweep(sweep_opts, sweep_axis, sweep_values);
        if (render->parsed()) return cmd_render(render_in, render_out);
        if (met->parsed()) return cmd_metrics(met_opts, metrics_field);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const cip::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return 1;
    }
    return 0;
}
