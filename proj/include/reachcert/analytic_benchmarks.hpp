#pragma once

#include <cmath>

#include "reachcert/dynamics.hpp"
#include "reachcert/value_function.hpp"

namespace reachcert {

/// Straight-line-extrapolation candidate for the multivehicle avoid problem:
/// each pair of cars is propagated with frozen headings and the value is the
/// worst predicted miss distance minus the collision radius over the
/// remaining horizon. Crude, but heading-aware, so the induced policy steers
/// diverging headings. Gradient via the finite-difference default (the min
/// over pairs has kinks).
inline VfPtr multivehicle_coast_handle(const SystemPtr& sys) {
    auto mv = std::dynamic_pointer_cast<const Multivehicle9D>(sys);
    if (!mv) throw std::invalid_argument("multivehicle_coast_handle: expects multivehicle9d");
    double speed = mv->speed();
    double radius = mv->radius();
    double horizon = mv->horizon();

    auto value = [speed, radius, horizon](const Vec& x, double t) {
        double remaining = std::max(0.0, horizon - t);
        double worst = kInf;
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                double px = x[3 * i] - x[3 * j];
                double py = x[3 * i + 1] - x[3 * j + 1];
                double vx = speed * (std::cos(x[3 * i + 2]) - std::cos(x[3 * j + 2]));
                double vy = speed * (std::sin(x[3 * i + 2]) - std::sin(x[3 * j + 2]));
                double a = vx * vx + vy * vy;
                double b = 2.0 * (px * vx + py * vy);
                double c = px * px + py * py;
                double tau = a > 1e-12 ? std::clamp(-b / (2.0 * a), 0.0, remaining) : 0.0;
                double d2 = std::max(0.0, c + b * tau + a * tau * tau);
                worst = std::min(worst, std::sqrt(d2) - radius);
            }
        return worst;
    };
    std::vector<std::uint8_t> periodic(sys->state_dim());
    for (std::size_t d = 0; d < sys->state_dim(); ++d) periodic[d] = sys->periodic(d) ? 1 : 0;
    return std::make_shared<AnalyticHandle>(sys->state_box(), periodic,
                                            "multivehicle straight-line miss distance", value);
}

/// Ballistic-coast candidate for the rocket landing (reach) problem: the
/// value is the best landing-zone margin l along the uncontrolled trajectory
/// (gravity only) over the remaining horizon, scanned on a fixed tau grid.
inline VfPtr rocket_ballistic_handle(const SystemPtr& sys, double gravity = 9.81,
                                     int tau_samples = 33) {
    auto rk = std::dynamic_pointer_cast<const Rocket6D>(sys);
    if (!rk) throw std::invalid_argument("rocket_ballistic_handle: expects rocket6d");
    double horizon = rk->horizon();

    auto value = [gravity, horizon, tau_samples](const Vec& x, double t) {
        double remaining = std::max(0.0, horizon - t);
        double best = kInf;
        for (int k = 0; k < tau_samples; ++k) {
            double tau = remaining * k / (tau_samples - 1);
            double px = x[0] + x[3] * tau;
            double py = x[1] + x[4] * tau - 0.5 * gravity * tau * tau;
            best = std::min(best, std::max(std::fabs(px) - 20.0, py - 20.0));
        }
        return best;
    };
    std::vector<std::uint8_t> periodic(sys->state_dim());
    for (std::size_t d = 0; d < sys->state_dim(); ++d) periodic[d] = sys->periodic(d) ? 1 : 0;
    return std::make_shared<AnalyticHandle>(sys->state_box(), periodic,
                                            "rocket ballistic landing margin", value);
}

/// Time-independent candidate equal to the target function itself. Mostly a
/// test fixture: it is the exact value function for frozen dynamics.
inline VfPtr target_function_handle(const SystemPtr& sys) {
    SystemPtr captured = sys;
    std::vector<std::uint8_t> periodic(sys->state_dim());
    for (std::size_t d = 0; d < sys->state_dim(); ++d) periodic[d] = sys->periodic(d) ? 1 : 0;
    return std::make_shared<AnalyticHandle>(
        sys->state_box(), periodic, "target function l",
        [captured](const Vec& x, double) { return captured->target(x); });
}

}  // namespace reachcert
