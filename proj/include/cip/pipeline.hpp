#pragma once

#include <memory>
#include <string>

#include "cip/carleman.hpp"
#include "cip/data_model.hpp"
#include "cip/forward.hpp"
#include "cip/io.hpp"
#include "cip/optimizer.hpp"
#include "cip/phantom.hpp"
#include "cip/reconstruct.hpp"

namespace cip {

// Ground-truth description: a built-in glyph or a thresholded image file.
struct PhantomSpec {
    std::string kind = "letter"; // "letter" | "image" | "none"
    Letter letter = Letter::B;
    double a_inside = 2.0;
    std::string image_path;
};

// Every knob of a run, with the tuned defaults.
struct InverseConfig {
    // Geometry.
    int n = 2;
    std::array<int, 3> N{20, 20, 20};
    Domain domain; // (1,2)^n by default

    // Time window and discretization.
    double T = 4.0;
    int Nt = 20;
    double epsilon = 0.01;

    // Data.
    PhantomSpec phantom;
    double sigma = 0.0;
    std::uint64_t seed = 1;
    bool noise_exempt_anchor = true;

    // Forward solver.
    AuxiliaryDomain aux;
    SourceMollifier mollifier;
    TimeScheme scheme = TimeScheme::CrankNicolson;

    // Functional and optimizer.
    CarlemanParams carleman;
    MinimizeOptions optimizer;
    RecoverForm recover_form = RecoverForm::InnerWindow;
    // Starting-stack construction: the guess (and the penalty reference, when
    // penalty_about_guess is set) is built from tangentially smoothed boundary
    // data; the hard Dirichlet/Neumann constraints always keep the raw data.
    int guess_smooth_passes = 2;
    bool penalty_about_guess = true;

    std::string output_dir = "out";

    void validate() const;
    SpatialGrid make_grid() const;
    TimeGrid make_time_grid() const;
};

// Config file <-> InverseConfig. Unknown keys in the map are rejected so
// typos fail loudly; the emitted map round-trips bit-exactly.
InverseConfig config_from_map(const ConfigMap& cfg);
ConfigMap config_to_map(const InverseConfig& config);

struct ReconstructionResult {
    std::shared_ptr<const SpatialGrid> grid; // owns the grid the fields point at
    ScalarField a_comp;
    FieldStack w_layers;
    OptimState optim;
    MetricRecord metric;
    ConfigMap config_snapshot;
};

// Forward simulation + boundary extraction + optional noise.
BoundaryDataset simulate(const InverseConfig& config);

// Full inversion of a dataset: log-derivative boundary data, initial guess,
// minimization, coefficient recovery, metrics against the configured phantom.
ReconstructionResult invert(const InverseConfig& config, const BoundaryDataset& data);

// Writes a_comp.csv, a_comp.pgm (mid-slice for 3-D), iterations.csv,
// metrics.csv and config.cfg under dir (created if missing).
void write_result(const std::string& dir, const ReconstructionResult& result);

} // namespace cip
