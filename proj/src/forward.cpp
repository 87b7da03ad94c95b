#include "cip/forward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cip/parallel.hpp"

namespace cip {

double heat_kernel(const std::array<double, 3>& x, double t, int n) {
    if (!(t > 0.0))
        throw ValidationError("heat_kernel requires t > 0, got t=" + std::to_string(t));
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
    return std::pow(2.0 * std::sqrt(M_PI * t), -n) * std::exp(-r2 / (4.0 * t));
}

double heat_kernel_dx1(const std::array<double, 3>& x, double t, int n) {
    return -x[0] / (2.0 * t) * heat_kernel(x, t, n);
}

void AuxiliaryDomain::validate(const Domain& omega) const {
    if (!(r > 0) || !(mesh > 0) || steps < 1)
        throw ValidationError("auxiliary domain needs r > 0, mesh > 0, steps >= 1");
    for (int a = 0; a < omega.n; ++a) {
        if (center[a] - r >= 0.0 || center[a] + r <= 0.0)
            throw ValidationError("auxiliary domain must contain the source point 0 "
                                  "strictly inside");
        if (center[a] - r >= omega.lo[a] || center[a] + r <= omega.hi[a])
            throw ValidationError("auxiliary domain must contain Omega strictly inside");
    }
}

namespace {

// Uniform mesh over [center-r, center+r]^n with x1 slowest in the flat index.
struct AuxMesh {
    int n = 2;
    int M = 0;            // nodes per axis
    double sp = 0.0;      // spacing
    std::array<double, 3> lo{};
    std::int64_t total = 0;

    std::int64_t idx(int i1, int i2, int i3) const {
        std::int64_t f = std::int64_t(i1) * M + i2;
        if (n == 3) f = f * M + i3;
        return f;
    }
    std::array<double, 3> coords(int i1, int i2, int i3) const {
        return {lo[0] + i1 * sp, lo[1] + i2 * sp, n == 3 ? lo[2] + i3 * sp : 0.0};
    }
};

AuxMesh make_mesh(const AuxiliaryDomain& aux, int n) {
    AuxMesh m;
    m.n = n;
    m.M = int(std::llround(2.0 * aux.r / aux.mesh)) + 1;
    m.sp = 2.0 * aux.r / (m.M - 1);
    for (int a = 0; a < n; ++a) m.lo[a] = aux.center[a] - aux.r;
    m.total = std::int64_t(m.M) * m.M * (n == 3 ? m.M : 1);
    return m;
}

// active = unknown nodes (inside the far boundary, and inside the ball when
// the Ball shape is selected). Inactive nodes are held at zero.
std::vector<std::uint8_t> make_active(const AuxMesh& m, const AuxiliaryDomain& aux) {
    std::vector<std::uint8_t> act(std::size_t(m.total), 0);
    const int M = m.M;
    const double r2max = aux.r * aux.r;
#pragma omp parallel for schedule(static)
    for (int i1 = 1; i1 < M - 1; ++i1)
        for (int i2 = 1; i2 < M - 1; ++i2)
            for (int i3 = (m.n == 3 ? 1 : 0); i3 < (m.n == 3 ? M - 1 : 1); ++i3) {
                if (aux.shape == AuxShape::Ball) {
                    auto x = m.coords(i1, i2, i3);
                    double d2 = 0.0;
                    for (int a = 0; a < m.n; ++a) {
                        double d = x[a] - aux.center[a];
                        d2 += d * d;
                    }
                    if (d2 >= r2max) continue;
                }
                act[std::size_t(m.idx(i1, i2, i3))] = 1;
            }
    return act;
}

// Nearest-node lookup of the phantom on Omega's grid, zero outside Omega.
std::vector<double> phantom_on_mesh(const AuxMesh& m, const Phantom& ph) {
    const SpatialGrid& g = *ph.grid;
    std::vector<double> a(std::size_t(m.total), 0.0);
    const int M = m.M;
#pragma omp parallel for schedule(static)
    for (int i1 = 0; i1 < M; ++i1)
        for (int i2 = 0; i2 < M; ++i2)
            for (int i3 = 0; i3 < (m.n == 3 ? M : 1); ++i3) {
                auto x = m.coords(i1, i2, i3);
                bool inside = true;
                std::array<int, 3> gi{0, 0, 0};
                for (int ax = 0; ax < m.n; ++ax) {
                    if (x[ax] < g.domain.lo[ax] || x[ax] > g.domain.hi[ax]) {
                        inside = false;
                        break;
                    }
                    gi[ax] = int(std::llround((x[ax] - g.domain.lo[ax]) / g.spacing[ax]));
                    gi[ax] = std::clamp(gi[ax], 0, g.N[ax] - 1);
                }
                if (inside) a[std::size_t(m.idx(i1, i2, i3))] = ph.values[g.flatten(gi)];
            }
    return a;
}

// y = (I - theta*dt*(Delta + a)) x on active nodes.
void apply_system(const AuxMesh& m, const std::vector<std::uint8_t>& act,
                  const std::vector<double>& a, double theta_dt,
                  const std::vector<double>& x, std::vector<double>& y) {
    const int M = m.M;
    const double inv2 = 1.0 / (m.sp * m.sp);
    const std::int64_t s1 = (m.n == 3) ? std::int64_t(M) * M : M;
    const std::int64_t s2 = (m.n == 3) ? M : 1;
    const std::int64_t s3 = 1;
#pragma omp parallel for schedule(static)
    for (std::int64_t f = 0; f < m.total; ++f) {
        if (!act[std::size_t(f)]) {
            y[std::size_t(f)] = 0.0;
            continue;
        }
        double lap = -2.0 * m.n * x[std::size_t(f)];
        lap += x[std::size_t(f + s1)] + x[std::size_t(f - s1)];
        lap += x[std::size_t(f + s2)] + x[std::size_t(f - s2)];
        if (m.n == 3) lap += x[std::size_t(f + s3)] + x[std::size_t(f - s3)];
        lap *= inv2;
        y[std::size_t(f)] =
            x[std::size_t(f)] - theta_dt * (lap + a[std::size_t(f)] * x[std::size_t(f)]);
    }
}

// Matrix-free CG for the SPD system above, relative residual 1e-10.
void cg_solve(const AuxMesh& m, const std::vector<std::uint8_t>& act,
              const std::vector<double>& a, double theta_dt,
              const std::vector<double>& rhs, std::vector<double>& x,
              std::vector<double>& rv, std::vector<double>& pv, std::vector<double>& apv) {
    const std::int64_t n = m.total;
    apply_system(m, act, a, theta_dt, x, apv);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        double r = act[std::size_t(i)] ? rhs[std::size_t(i)] - apv[std::size_t(i)] : 0.0;
        rv[std::size_t(i)] = r;
        pv[std::size_t(i)] = r;
    }
    double rr = deterministic_sum(n, [&](std::int64_t i) {
        return rv[std::size_t(i)] * rv[std::size_t(i)];
    });
    double rhs2 = deterministic_sum(n, [&](std::int64_t i) {
        return act[std::size_t(i)] ? rhs[std::size_t(i)] * rhs[std::size_t(i)] : 0.0;
    });
    const double tol2 = 1e-20 * std::max(rhs2, 1e-300);
    const int max_iters = 200 + int(10 * std::sqrt(double(n)));
    for (int it = 0; it < max_iters; ++it) {
        if (rr <= tol2) return;
        apply_system(m, act, a, theta_dt, pv, apv);
        double pap = deterministic_sum(n, [&](std::int64_t i) {
            return pv[std::size_t(i)] * apv[std::size_t(i)];
        });
        double alpha = rr / pap;
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            x[std::size_t(i)] += alpha * pv[std::size_t(i)];
            rv[std::size_t(i)] -= alpha * apv[std::size_t(i)];
        }
        double rr_new = deterministic_sum(n, [&](std::int64_t i) {
            return rv[std::size_t(i)] * rv[std::size_t(i)];
        });
        double beta = rr_new / rr;
        rr = rr_new;
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i)
            pv[std::size_t(i)] = rv[std::size_t(i)] + beta * pv[std::size_t(i)];
    }
    std::ostringstream os;
    os << "conjugate gradients did not reach relative residual 1e-10 in " << max_iters
       << " iterations (residual^2/rhs^2 = " << rr / std::max(rhs2, 1e-300) << ")";
    throw SolverError(os.str());
}

// Normalized mollifier values on the mesh. Falls back to a single-node
// discrete delta at the node nearest the origin when the support contains no
// mesh node with positive weight.
std::vector<double> initial_condition(const AuxMesh& m, const std::vector<std::uint8_t>& act,
                                      const SourceMollifier& mol) {
    std::vector<double> u(std::size_t(m.total), 0.0);
    const double xi2 = mol.xi * mol.xi;
    const int M = m.M;
    double cellvol = std::pow(m.sp, m.n);
    for (int i1 = 0; i1 < M; ++i1)
        for (int i2 = 0; i2 < M; ++i2)
            for (int i3 = 0; i3 < (m.n == 3 ? M : 1); ++i3) {
                auto x = m.coords(i1, i2, i3);
                double r2 = 0.0;
                for (int a = 0; a < m.n; ++a) r2 += x[a] * x[a];
                if (r2 < xi2)
                    u[std::size_t(m.idx(i1, i2, i3))] = std::exp(r2 / (r2 - xi2));
            }
    double mass = 0.0;
    for (std::int64_t f = 0; f < m.total; ++f)
        if (act[std::size_t(f)]) mass += u[std::size_t(f)];
        else u[std::size_t(f)] = 0.0;
    if (mass * cellvol <= 0.0) {
        // Support smaller than the mesh: discrete delta at the nearest node.
        std::array<int, 3> gi{0, 0, 0};
        for (int a = 0; a < m.n; ++a)
            gi[a] = std::clamp(int(std::llround((0.0 - m.lo[a]) / m.sp)), 0, M - 1);
        std::fill(u.begin(), u.end(), 0.0);
        u[std::size_t(m.idx(gi[0], gi[1], gi[2]))] = 1.0 / cellvol;
        return u;
    }
    const double scale = 1.0 / (mass * cellvol);
    for (auto& v : u) v *= scale;
    return u;
}

// Multilinear interpolation of a mesh field at a point.
double sample_mesh(const AuxMesh& m, const std::vector<double>& u,
                   const std::array<double, 3>& x) {
    std::array<int, 3> i0{0, 0, 0};
    std::array<double, 3> f{0, 0, 0};
    for (int a = 0; a < m.n; ++a) {
        double s = (x[a] - m.lo[a]) / m.sp;
        int i = std::clamp(int(std::floor(s)), 0, m.M - 2);
        i0[a] = i;
        f[a] = std::clamp(s - i, 0.0, 1.0);
    }
    if (m.n == 2) {
        double v00 = u[std::size_t(m.idx(i0[0], i0[1], 0))];
        double v10 = u[std::size_t(m.idx(i0[0] + 1, i0[1], 0))];
        double v01 = u[std::size_t(m.idx(i0[0], i0[1] + 1, 0))];
        double v11 = u[std::size_t(m.idx(i0[0] + 1, i0[1] + 1, 0))];
        return (1 - f[0]) * ((1 - f[1]) * v00 + f[1] * v01) +
               f[0] * ((1 - f[1]) * v10 + f[1] * v11);
    }
    double acc = 0.0;
    for (int b = 0; b < 8; ++b) {
        int d1 = b & 1, d2 = (b >> 1) & 1, d3 = (b >> 2) & 1;
        double wgt = (d1 ? f[0] : 1 - f[0]) * (d2 ? f[1] : 1 - f[1]) * (d3 ? f[2] : 1 - f[2]);
        acc += wgt * u[std::size_t(m.idx(i0[0] + d1, i0[1] + d2, i0[2] + d3))];
    }
    return acc;
}

ScalarField sample_on_grid(const AuxMesh& m, const std::vector<double>& u,
                           const SpatialGrid& grid) {
    ScalarField out(grid);
#pragma omp parallel for schedule(static)
    for (std::int64_t node = 0; node < grid.num_nodes(); ++node)
        out[node] = sample_mesh(m, u, grid.node_coords(node));
    return out;
}

} // namespace

double mollifier_mesh_integral(const AuxiliaryDomain& aux, const SourceMollifier& mol, int n) {
    AuxMesh m = make_mesh(aux, n);
    auto act = make_active(m, aux);
    auto u = initial_condition(m, act, mol);
    double mass = 0.0;
    for (double v : u) mass += v;
    return mass * std::pow(m.sp, m.n);
}

ForwardSolution solve_parabolic(const AuxiliaryDomain& aux, const Phantom& phantom,
                                const SourceMollifier& mollifier, double T,
                                const std::vector<double>& sample_times, TimeScheme scheme) {
    const SpatialGrid& grid = *phantom.grid;
    aux.validate(grid.domain);
    for (double t : sample_times)
        if (t <= 0.0 || t > T + 1e-12)
            throw ValidationError("sample time " + std::to_string(t) +
                                  " outside (0, T]");
    AuxMesh m = make_mesh(aux, grid.n());
    auto act = make_active(m, aux);
    auto a = phantom_on_mesh(m, phantom);
    auto u = initial_condition(m, act, mollifier);

    const double dt = T / aux.steps;
    std::vector<double> u_prev(u), rhs(u.size()), rv(u.size()), pv(u.size()), apv(u.size());

    ForwardSolution sol;
    sol.grid = &grid;
    std::vector<std::size_t> order(sample_times.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t l, std::size_t r) { return sample_times[l] < sample_times[r]; });
    sol.times.resize(sample_times.size());
    sol.snapshots.assign(sample_times.size(), ScalarField(grid));

    std::size_t next = 0;
    // Crank-Nicolson takes two implicit-Euler startup steps: the mollified
    // delta has energy at the mesh Nyquist scale, which CN only neutrally
    // damps (ringing); implicit Euler kills it.
    const int startup = (scheme == TimeScheme::CrankNicolson) ? 2 : 0;
    for (int step = 1; step <= aux.steps && next < order.size(); ++step) {
        const bool cn = scheme == TimeScheme::CrankNicolson && step > startup;
        const double theta_dt = cn ? 0.5 * dt : dt;
        u_prev.swap(u);
        if (cn) {
            // rhs = (I + dt/2 (Delta + a)) u_prev
            apply_system(m, act, a, -0.5 * dt, u_prev, rhs);
        } else {
            rhs = u_prev;
        }
        // warm start from the previous time level
        u = u_prev;
        cg_solve(m, act, a, theta_dt, rhs, u, rv, pv, apv);
        const double t_cur = step * dt;
        while (next < order.size() && sample_times[order[next]] <= t_cur + 1e-12) {
            const double ts = sample_times[order[next]];
            const double f = std::clamp((t_cur - ts) / dt, 0.0, 1.0);
            if (f > 1e-12) {
                std::vector<double> blend(u.size());
#pragma omp parallel for schedule(static)
                for (std::int64_t i = 0; i < std::int64_t(u.size()); ++i)
                    blend[std::size_t(i)] =
                        (1.0 - f) * u[std::size_t(i)] + f * u_prev[std::size_t(i)];
                sol.snapshots[order[next]] = sample_on_grid(m, blend, grid);
            } else {
                sol.snapshots[order[next]] = sample_on_grid(m, u, grid);
            }
            sol.times[order[next]] = ts;
            ++next;
        }
    }
    if (next < order.size())
        throw ValidationError("requested sample time beyond steps*dt = " +
                              std::to_string(T));
    return sol;
}

BoundaryDataset extract_boundary_data(const ForwardSolution& field, const SpatialGrid& grid) {
    BoundaryDataset ds;
    ds.domain = grid.domain;
    ds.N = grid.N;
    ds.times = field.times;
    const std::int64_t total = grid.num_nodes();
    ds.g0.assign(field.times.size(), std::vector<double>(std::size_t(total), 0.0));
    ds.g1.assign(field.times.size(), std::vector<double>(std::size_t(total), 0.0));
    const int I = grid.N[0] - 1;
    const double sp = grid.spacing[0];
    for (std::size_t ti = 0; ti < field.times.size(); ++ti) {
        const ScalarField& u = field.snapshots[ti];
        for (std::int64_t node = 0; node < total; ++node) {
            if (!grid.is_boundary(node)) continue;
            double v = u[node];
            if (!(v > 0.0))
                throw SolverError("non-positive boundary trace (g0 = " + std::to_string(v) +
                                  ") at t = " + std::to_string(field.times[ti]) +
                                  "; the log transform requires g0 > 0");
            ds.g0[ti][std::size_t(node)] = v;
            auto idx = grid.unflatten(node);
            if (idx[0] == I) {
                auto im1 = idx, im2 = idx;
                im1[0] = I - 1;
                im2[0] = I - 2;
                ds.g1[ti][std::size_t(node)] =
                    (3.0 * u[node] - 4.0 * u[grid.flatten(im1)] + u[grid.flatten(im2)]) /
                    (2.0 * sp);
            }
        }
    }
    return ds;
}

BoundaryDataset simulate_dataset(const SpatialGrid& grid, const TimeGrid& tg,
                                 const AuxiliaryDomain& aux, const Phantom& phantom,
                                 const SourceMollifier& mollifier, TimeScheme scheme) {
    // Simulate at t_1..t_k; the t_0 = epsilon trace comes from the analytic
    // short-time asymptotics (the model's own definition of u at epsilon —
    // the numeric field there is orders of magnitude below solver accuracy).
    std::vector<double> times(std::size_t(tg.k));
    for (int i = 1; i <= tg.k; ++i) times[std::size_t(i - 1)] = tg.t(i);
    ForwardSolution sol = solve_parabolic(aux, phantom, mollifier, tg.T, times, scheme);
    BoundaryDataset ds = extract_boundary_data(sol, grid);

    ds.times.insert(ds.times.begin(), tg.epsilon);
    std::vector<double> g0e(std::size_t(grid.num_nodes()), 0.0);
    std::vector<double> g1e(std::size_t(grid.num_nodes()), 0.0);
    for (std::int64_t node = 0; node < grid.num_nodes(); ++node) {
        if (!grid.is_boundary(node)) continue;
        auto x = grid.node_coords(node);
        g0e[std::size_t(node)] = heat_kernel(x, tg.epsilon, grid.n());
        auto idx = grid.unflatten(node);
        if (idx[0] == grid.N[0] - 1)
            g1e[std::size_t(node)] = heat_kernel_dx1(x, tg.epsilon, grid.n());
    }
    ds.g0.insert(ds.g0.begin(), std::move(g0e));
    ds.g1.insert(ds.g1.begin(), std::move(g1e));
    return ds;
}

double laplace_bridge(const std::vector<double>& tau_grid, const std::vector<double>& F,
                      double t) {
    if (!(t > 0.0)) throw ValidationError("laplace_bridge requires t > 0");
    if (tau_grid.size() != F.size() || tau_grid.size() < 3)
        throw ValidationError("laplace_bridge needs matching tau/F arrays with >= 3 samples");
    const double tau_max = tau_grid.back();
    const double tail = std::exp(-tau_max * tau_max / (4.0 * t));
    if (tail >= 1e-12) {
        std::ostringstream os;
        os << "tau grid too short: exp(-tau_max^2/(4t)) = " << tail
           << " >= 1e-12; extend the grid";
        throw ValidationError(os.str());
    }
    // Composite Simpson on a uniform grid; a final trapezoid cell absorbs an
    // even sample count.
    const std::size_t nseg = tau_grid.size() - 1;
    const double dtau = (tau_grid.back() - tau_grid.front()) / double(nseg);
    auto f = [&](std::size_t i) {
        return std::exp(-tau_grid[i] * tau_grid[i] / (4.0 * t)) * tau_grid[i] * F[i];
    };
    double acc = 0.0;
    std::size_t i = 0;
    for (; i + 2 <= nseg; i += 2)
        acc += dtau / 3.0 * (f(i) + 4.0 * f(i + 1) + f(i + 2));
    if (i < nseg) acc += dtau / 2.0 * (f(i) + f(i + 1));
    return acc / (2.0 * std::sqrt(M_PI * t * t * t));
}

double calibrate_radius(const SpatialGrid& grid, const TimeGrid& tg,
                        const AuxiliaryDomain& proto, const SourceMollifier& mollifier,
                        const std::vector<double>& candidates,
                        std::vector<double>* errors_out) {
    if (candidates.empty())
        throw ValidationError("calibrate_radius: empty candidate list");
    Phantom zero = letter_phantom(grid, Letter::B, 0.0);
    std::vector<double> times(std::size_t(tg.k) + 1);
    for (int i = 0; i <= tg.k; ++i) times[std::size_t(i)] = tg.t(i);
    std::vector<double> sorted(candidates);
    std::sort(sorted.begin(), sorted.end());
    std::ostringstream report;
    if (errors_out) errors_out->clear();
    for (double r : sorted) {
        AuxiliaryDomain aux = proto;
        aux.r = r;
        double num = 0.0, den = 0.0;
        ForwardSolution sol = solve_parabolic(aux, zero, mollifier, tg.T, times);
        for (std::size_t ti = 0; ti < times.size(); ++ti)
            for (std::int64_t node = 0; node < grid.num_nodes(); ++node) {
                double ref = heat_kernel(grid.node_coords(node), times[ti], grid.n());
                double d = sol.snapshots[ti][node] - ref;
                num += d * d;
                den += ref * ref;
            }
        double rel = std::sqrt(num / den);
        if (errors_out) errors_out->push_back(rel);
        report << "  r=" << r << ": rel L2 " << rel << "\n";
        if (rel <= 0.01) return r;
    }
    throw SolverError("no candidate radius reached 1% relative L2 against the heat "
                      "kernel:\n" + report.str());
}

} // namespace cip
