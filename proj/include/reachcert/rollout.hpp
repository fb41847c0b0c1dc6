#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "reachcert/parallel.hpp"
#include "reachcert/policy.hpp"
#include "reachcert/value_function.hpp"

namespace reachcert {

/// Closed-loop trajectory record: states (wrapped on periodic dimensions),
/// zero-order-hold controls, and l(x) at every stored sample.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> controls;  // one per step
    std::vector<double> l_values;
    bool left_box = false;   // some non-periodic coordinate was clamped
    bool non_finite = false; // integration aborted on a non-finite state
};

/// Trajectory cost J = min over stored samples of l, plus the mode's safety
/// predicate: Avoid is safe iff J > 0; Reach is safe iff the target was hit
/// (J <= 0). A non-finite abort is never safe for Avoid and never counts as
/// reaching beyond the samples already taken.
struct RolloutCost {
    double J = kInf;
    double argmin_time = 0.0;
    bool safe = false;
    bool left_box = false;
    bool non_finite = false;
};

inline bool cost_is_safe(Mode mode, double J, bool non_finite) {
    if (mode == Mode::kAvoid) return !non_finite && J > 0.0;
    return J <= 0.0;
}

inline RolloutCost rollout_cost(const Trajectory& traj, Mode mode) {
    if (traj.l_values.empty()) throw std::invalid_argument("rollout_cost: empty trajectory");
    RolloutCost c;
    for (std::size_t k = 0; k < traj.l_values.size(); ++k) {
        if (traj.l_values[k] < c.J) {
            c.J = traj.l_values[k];
            c.argmin_time = traj.times[k];
        }
    }
    c.left_box = traj.left_box;
    c.non_finite = traj.non_finite;
    c.safe = cost_is_safe(mode, c.J, c.non_finite);
    return c;
}

namespace detail {

/// Fixed-step RK4 under the induced policy, recomputed at each step start and
/// held for the step. The observer sees every stored sample: (k, t, x, u_prev)
/// where u_prev is null for the initial sample. Returns the streaming cost.
template <typename Observer>
RolloutCost integrate_policy(const SystemModel& sys, const ValueFunctionHandle& vf, Vec x0,
                             double t0, double dt, Observer&& observe) {
    const double horizon = sys.horizon();
    if (!(dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");
    if (t0 < 0.0 || t0 >= horizon) throw std::invalid_argument("simulate: t0 outside [0, T)");

    RolloutCost cost;
    Vec x = x0;
    sys.wrap(x);
    cost.left_box = sys.clamp_to_box(x);

    double t = t0;
    double l0 = sys.target(x);
    cost.J = l0;
    cost.argmin_time = t;
    observe(std::size_t{0}, t, x, static_cast<const Vec*>(nullptr));

    const std::size_t n = sys.state_dim();
    Vec k1(n), k2(n), k3(n), k4(n), xs(n);
    std::size_t step = 1;
    while (t < horizon - 1e-12) {
        double h = std::min(dt, horizon - t);
        Vec grad = vf.gradient(x, t);
        Vec u = hamiltonian_control(sys, x, grad, sys.mode());

        sys.flow(x, u, k1);
        xs = x;
        axpy(0.5 * h, k1, xs);
        sys.flow(xs, u, k2);
        xs = x;
        axpy(0.5 * h, k2, xs);
        sys.flow(xs, u, k3);
        xs = x;
        axpy(h, k3, xs);
        sys.flow(xs, u, k4);
        for (std::size_t d = 0; d < n; ++d)
            x[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);

        t += h;
        if (!x.all_finite()) {
            cost.non_finite = true;
            break;
        }
        sys.wrap(x);
        if (sys.clamp_to_box(x)) cost.left_box = true;

        double l = sys.target(x);
        if (l < cost.J) {
            cost.J = l;
            cost.argmin_time = t;
        }
        observe(step++, t, x, &u);
    }
    cost.safe = cost_is_safe(sys.mode(), cost.J, cost.non_finite);
    return cost;
}

}  // namespace detail

/// Full trajectory record; use batch_cost for bulk work (it streams the cost
/// without storing states).
inline Trajectory simulate(const SystemModel& sys, const ValueFunctionHandle& vf, const Vec& x0,
                           double t0, double dt) {
    Trajectory traj;
    RolloutCost cost = detail::integrate_policy(
        sys, vf, x0, t0, dt, [&](std::size_t, double t, const Vec& x, const Vec* u) {
            traj.times.push_back(t);
            traj.states.push_back(x);
            traj.l_values.push_back(sys.target(x));
            if (u) traj.controls.push_back(*u);
        });
    traj.left_box = cost.left_box;
    traj.non_finite = cost.non_finite;
    return traj;
}

inline RolloutCost simulate_cost(const SystemModel& sys, const ValueFunctionHandle& vf,
                                 const Vec& x0, double t0, double dt) {
    return detail::integrate_policy(sys, vf, x0, t0, dt,
                                    [](std::size_t, double, const Vec&, const Vec*) {});
}

/// Rollout costs for a batch of initial states at t=0. Results are stored by
/// index, so the output is identical for any worker count. Per-trajectory
/// non-finite aborts are recorded in the cost, not thrown.
inline std::vector<RolloutCost> batch_cost(const SystemModel& sys, const ValueFunctionHandle& vf,
                                           const std::vector<Vec>& states, double dt) {
    std::vector<RolloutCost> costs(states.size());
    parallel_for(states.size(),
                 [&](std::size_t i) { costs[i] = simulate_cost(sys, vf, states[i], 0.0, dt); }, 4);
    return costs;
}

inline void write_trajectory_csv(const std::string& path, const SystemModel& sys,
                                 const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw MalformedFileError("cannot open trajectory csv for writing: " + path);
    out.precision(17);
    out << "time";
    for (std::size_t d = 0; d < sys.state_dim(); ++d) out << ",x" << d;
    for (std::size_t d = 0; d < sys.control_dim(); ++d) out << ",u" << d;
    out << ",l\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        out << traj.times[k];
        for (std::size_t d = 0; d < sys.state_dim(); ++d) out << ',' << traj.states[k][d];
        for (std::size_t d = 0; d < sys.control_dim(); ++d) {
            if (k < traj.controls.size())
                out << ',' << traj.controls[k][d];
            else
                out << ',';
        }
        out << ',' << traj.l_values[k] << '\n';
    }
}

}  // namespace reachcert
