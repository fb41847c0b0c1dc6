#pragma once

#include <cmath>

#include "reachcert/dynamics.hpp"

namespace reachcert {

/// Control maximizing <grad, f(x,u)> over the control box (Avoid), or
/// minimizing it (Reach). Control-affine systems get the closed-form
/// vertex answer; the tie at a zero coefficient picks the lower bound so
/// certification runs are reproducible. Non-affine systems fall back to a
/// per-dimension grid search.
inline Vec hamiltonian_control(const SystemModel& sys, const Vec& x, const Vec& grad, Mode mode,
                               int grid_points_per_dim = 11) {
    const Box& ub = sys.control_box();
    Vec u(sys.control_dim());
    Vec coeff;
    if (sys.control_coefficients(x, grad, coeff)) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            bool take_upper = mode == Mode::kAvoid ? coeff[i] > 0.0 : coeff[i] < 0.0;
            u[i] = take_upper ? ub.upper[i] : ub.lower[i];
        }
        return u;
    }

    // Exhaustive search over a regular control lattice.
    std::size_t m = sys.control_dim();
    std::size_t combos = 1;
    for (std::size_t i = 0; i < m; ++i) combos *= static_cast<std::size_t>(grid_points_per_dim);
    Vec best_u(m);
    double best = mode == Mode::kAvoid ? -kInf : kInf;
    Vec cand(m), dx(sys.state_dim());
    for (std::size_t c = 0; c < combos; ++c) {
        std::size_t rem = c;
        for (std::size_t i = 0; i < m; ++i) {
            int k = static_cast<int>(rem % grid_points_per_dim);
            rem /= grid_points_per_dim;
            cand[i] = ub.lower[i] + (ub.upper[i] - ub.lower[i]) * k / (grid_points_per_dim - 1);
        }
        sys.flow(x, cand, dx);
        double h = dot(grad, dx);
        if (mode == Mode::kAvoid ? h > best : h < best) {
            best = h;
            best_u = cand;
        }
    }
    return best_u;
}

/// Hamiltonian value H(x, p) under the mode's optimal control (Eq. of the
/// optimal safety controller evaluated back into the inner product).
inline double hamiltonian(const SystemModel& sys, const Vec& x, const Vec& grad, Mode mode) {
    Vec u = hamiltonian_control(sys, x, grad, mode);
    Vec dx(sys.state_dim());
    sys.flow(x, u, dx);
    return dot(grad, dx);
}

}  // namespace reachcert
