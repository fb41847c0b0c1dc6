#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "reachcert/grid_value.hpp"
#include "reachcert/parallel.hpp"
#include "reachcert/policy.hpp"

namespace reachcert {

struct SolveOptions {
    double dt = 0.0;          // 0: derive from the CFL condition
    double cfl = 0.8;         // fraction of the stable step when deriving dt
    int target_slices = 33;   // stored time slices (terminal and t=0 always kept)
    std::size_t max_dim = 4;  // practical grid limit
    std::size_t max_value_doubles = (std::size_t{1} << 30) / sizeof(double);  // ~1 GiB cap
};

/// Largest stable explicit step for the Lax-Friedrichs scheme on this grid:
/// dt <= 1 / sum_d (alpha_d / h_d) with alpha_d bounding |dH/dp_d| = |f_d|.
/// Returns +inf for frozen dynamics (all bounds zero).
inline double cfl_stable_dt(const SystemModel& sys, const Grid& grid) {
    Vec alpha = sys.flow_bounds();
    double s = 0.0;
    for (std::size_t d = 0; d < grid.dim(); ++d) s += alpha[d] / grid.spacing(d);
    return s > 0.0 ? 1.0 / s : kInf;
}

/// Solves the final-value variational inequality
///     min{ D_t V + H(x, grad V), l(x) - V } = 0,  V(x,T) = l(x)
/// backward from t = T to t = 0 with a first-order Lax-Friedrichs scheme.
/// Avoid mode maximizes the Hamiltonian over controls; Reach mode minimizes
/// (every other min/max stays put: the cost is the trajectory minimum of l
/// in both cases, so each step still freezes with min(candidate, l)).
inline GridValueFunction solve_hjb_vi(const SystemModel& sys, const Grid& grid,
                                      const SolveOptions& opt = {}) {
    if (grid.dim() != sys.state_dim())
        throw std::invalid_argument("solver: grid dimension must match system");
    if (sys.state_dim() > opt.max_dim)
        throw ConfigError("solver: state dimension " + std::to_string(sys.state_dim()) +
                          " exceeds grid limit " + std::to_string(opt.max_dim));

    double horizon = sys.horizon();
    double stable = cfl_stable_dt(sys, grid);
    double dt = opt.dt;
    if (dt <= 0.0) {
        dt = std::isfinite(stable) ? opt.cfl * stable : horizon / 10.0;
    } else if (dt > stable * (1.0 + 1e-12)) {
        throw CflError("solver: dt " + std::to_string(dt) + " exceeds stable step " +
                       std::to_string(stable));
    }
    int n_steps = std::max(1, static_cast<int>(std::ceil(horizon / dt - 1e-12)));
    dt = horizon / n_steps;  // uniform steps landing exactly on t = 0

    int keep = std::max(2, opt.target_slices);
    int store_every = std::max(1, (n_steps + keep - 2) / (keep - 1));
    std::size_t n_slices = 2 + static_cast<std::size_t>((n_steps - 1) / store_every);
    if (grid.size() * (n_slices + 3) > opt.max_value_doubles)
        throw MemoryLimitError("solver: grid of " + std::to_string(grid.size()) +
                               " nodes exceeds the configured memory cap");

    const std::size_t n_nodes = grid.size();
    const std::size_t dim = grid.dim();
    const Mode mode = sys.mode();
    Vec alpha = sys.flow_bounds();

    std::vector<double> target_values(n_nodes);
    parallel_for(
        n_nodes, [&](std::size_t i) { target_values[i] = sys.target(grid.node_state(i)); }, 1024);

    std::vector<double> current = target_values;
    std::vector<double> next(n_nodes);

    // Stored backward: slices[0] holds t=T; reversed into ascending order at the end.
    std::vector<std::vector<double>> slices;
    std::vector<double> slice_times;
    slices.push_back(current);
    slice_times.push_back(horizon);

    for (int step = 1; step <= n_steps; ++step) {
        double t = horizon - dt * step;
        parallel_for(
            n_nodes,
            [&](std::size_t i) {
                thread_local std::vector<int> idx;
                grid.unflatten(i, idx);
                Vec x = grid.node_state(i);
                Vec p_avg(dim);
                double dissipation = 0.0;
                for (std::size_t d = 0; d < dim; ++d) {
                    int i0 = idx[d];
                    int ip = grid.neighbor(d, i0, +1);
                    int im = grid.neighbor(d, i0, -1);
                    std::size_t base = i - grid.stride(d) * static_cast<std::size_t>(i0);
                    double v0 = current[i];
                    double vp = current[base + grid.stride(d) * static_cast<std::size_t>(ip)];
                    double vm = current[base + grid.stride(d) * static_cast<std::size_t>(im)];
                    double h = grid.spacing(d);
                    // One-sided differences; boundary nodes of non-periodic
                    // dimensions fall back to the interior difference.
                    double d_plus = ip != i0 ? (vp - v0) / h : (v0 - vm) / h;
                    double d_minus = im != i0 ? (v0 - vm) / h : (vp - v0) / h;
                    p_avg[d] = 0.5 * (d_plus + d_minus);
                    dissipation += 0.5 * alpha[d] * (d_plus - d_minus);
                }
                double ham = hamiltonian(sys, x, p_avg, mode);
                double candidate = current[i] + dt * (ham + dissipation);
                next[i] = std::min(candidate, target_values[i]);
            },
            256);
        std::swap(current, next);
        if (step == n_steps || step % store_every == 0) {
            slices.push_back(current);
            slice_times.push_back(t);
        }
    }

    std::reverse(slices.begin(), slices.end());
    std::reverse(slice_times.begin(), slice_times.end());
    slice_times.front() = 0.0;  // exact endpoint despite accumulated roundoff
    return GridValueFunction(grid, std::move(slice_times), std::move(slices));
}

}  // namespace reachcert
