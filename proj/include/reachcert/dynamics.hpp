#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "reachcert/common.hpp"

namespace reachcert {

/// Whether the target set holds states to keep out of (obstacles) or states
/// to steer into (goals). Every min/max in the toolkit mirrors on this.
enum class Mode : std::uint8_t { kAvoid, kReach };

inline std::string to_string(Mode m) { return m == Mode::kAvoid ? "avoid" : "reach"; }

/// Signed target function l. The target set is exactly {x : l(x) <= 0}.
struct TargetFunction {
    std::function<double(const Vec&)> value;
    std::string description;
};

/// A control-affine dynamical system on a box-shaped verification domain.
/// Immutable after construction; all evaluation methods are pure.
class SystemModel {
  public:
    virtual ~SystemModel() = default;

    std::size_t state_dim() const { return state_box_.dim(); }
    std::size_t control_dim() const { return control_box_.dim(); }
    const Box& state_box() const { return state_box_; }
    const Box& control_box() const { return control_box_; }
    bool periodic(std::size_t d) const { return periodic_[d] != 0; }
    Mode mode() const { return mode_; }
    double horizon() const { return horizon_; }
    virtual std::string name() const = 0;

    /// dx = f(x, u)
    virtual void flow(const Vec& x, const Vec& u, Vec& dx) const = 0;

    Vec flow(const Vec& x, const Vec& u) const {
        Vec dx(state_dim());
        flow(x, u, dx);
        return dx;
    }

    double target(const Vec& x) const { return target_.value(x); }
    const TargetFunction& target_function() const { return target_; }

    /// For control-affine dynamics f(x,u) = f0(x) + B(x) u, fills
    /// coeff = B(x)^T grad (the Hamiltonian's per-control coefficients) and
    /// returns true. Systems without an affine decomposition return false and
    /// callers fall back to a control-grid search.
    virtual bool control_coefficients(const Vec& x, const Vec& grad, Vec& coeff) const {
        (void)x, (void)grad, (void)coeff;
        return false;
    }

    /// Per-dimension bound on |f_d(x,u)| over the state and control boxes,
    /// used as Lax-Friedrichs dissipation coefficients.
    virtual Vec flow_bounds() const = 0;

    /// Integration step used by rollouts when the caller does not pin one.
    virtual double default_rollout_dt() const { return 0.0025 * horizon_; }

    /// Wraps periodic coordinates into their bounds interval, in place.
    void wrap(Vec& x) const {
        for (std::size_t d = 0; d < state_dim(); ++d)
            if (periodic_[d]) x[d] = wrap_periodic(x[d], state_box_.lower[d], state_box_.upper[d]);
    }

    /// Clamps non-periodic coordinates into the state box. Returns true if
    /// any coordinate actually moved.
    bool clamp_to_box(Vec& x) const {
        bool clamped = false;
        for (std::size_t d = 0; d < state_dim(); ++d) {
            if (periodic_[d]) continue;
            double c = std::clamp(x[d], state_box_.lower[d], state_box_.upper[d]);
            if (c != x[d]) {
                x[d] = c;
                clamped = true;
            }
        }
        return clamped;
    }

  protected:
    SystemModel(Box state_box, Box control_box, std::vector<std::uint8_t> periodic, Mode mode,
                double horizon, TargetFunction target)
        : state_box_(std::move(state_box)),
          control_box_(std::move(control_box)),
          periodic_(std::move(periodic)),
          mode_(mode),
          horizon_(horizon),
          target_(std::move(target)) {
        state_box_.validate("state box");
        control_box_.validate("control box");
        if (periodic_.size() != state_box_.dim())
            throw std::invalid_argument("periodic flags must match state dimension");
        if (!(horizon_ > 0.0)) throw std::invalid_argument("horizon must be positive");
    }

    Box state_box_;
    Box control_box_;
    std::vector<std::uint8_t> periodic_;
    Mode mode_;
    double horizon_;
    TargetFunction target_;
};

using SystemPtr = std::shared_ptr<const SystemModel>;

/// Optional overrides for the documented default domain/horizon choices.
struct SystemOverrides {
    Box state_box;  // empty: keep defaults
    double horizon = 0.0;
};

namespace detail {
inline Box resolve_box(const Box& def, const Box& override_box, std::size_t dim) {
    if (override_box.lower.empty()) return def;
    if (override_box.dim() != dim) throw std::invalid_argument("state box override has wrong dimension");
    Box b = override_box;
    b.validate("state box override");
    return b;
}
}  // namespace detail

/// Dubins car: planar position, heading, fixed forward speed, bounded
/// steering rate. Avoids a disc of radius R at the origin.
class Dubins3D final : public SystemModel {
  public:
    Dubins3D(double v, double u_min, double u_max, double radius, Mode mode = Mode::kAvoid,
             const SystemOverrides& ov = {})
        : SystemModel(detail::resolve_box(default_box(), ov.state_box, 3),
                      Box{{u_min}, {u_max}}, {0, 0, 1}, mode,
                      ov.horizon > 0.0 ? ov.horizon : 1.0, make_target(radius)),
          v_(v),
          radius_(radius) {
        if (!(v > 0.0)) throw std::invalid_argument("dubins3d: speed must be positive");
        if (!(radius > 0.0)) throw std::invalid_argument("dubins3d: radius must be positive");
        if (!(u_min < u_max)) throw std::invalid_argument("dubins3d: empty steering interval");
    }

    std::string name() const override { return "dubins3d"; }

    void flow(const Vec& x, const Vec& u, Vec& dx) const override {
        dx[0] = v_ * std::cos(x[2]);
        dx[1] = v_ * std::sin(x[2]);
        dx[2] = u[0];
    }

    bool control_coefficients(const Vec& x, const Vec& grad, Vec& coeff) const override {
        (void)x;
        coeff.resize(1);
        coeff[0] = grad[2];
        return true;
    }

    Vec flow_bounds() const override {
        double u_abs = std::max(std::fabs(control_box_.lower[0]), std::fabs(control_box_.upper[0]));
        return Vec{v_, v_, u_abs};
    }

    double speed() const { return v_; }
    double radius() const { return radius_; }

  private:
    static Box default_box() { return Box{{-1.0, -1.0, -kPi}, {1.0, 1.0, kPi}}; }
    static TargetFunction make_target(double radius) {
        return TargetFunction{
            [radius](const Vec& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1]) - radius; },
            "distance to origin minus disc radius"};
    }

    double v_;
    double radius_;
};

/// Three independent Dubins cars; the target set is any pairwise collision.
/// State layout: (px1, py1, th1, px2, py2, th2, px3, py3, th3).
class Multivehicle9D final : public SystemModel {
  public:
    Multivehicle9D(double v, double u_min, double u_max, double radius, const SystemOverrides& ov = {})
        : SystemModel(detail::resolve_box(default_box(), ov.state_box, 9),
                      Box{{u_min, u_min, u_min}, {u_max, u_max, u_max}},
                      {0, 0, 1, 0, 0, 1, 0, 0, 1}, Mode::kAvoid,
                      ov.horizon > 0.0 ? ov.horizon : 1.0, make_target(radius)),
          v_(v),
          radius_(radius) {
        if (!(v > 0.0)) throw std::invalid_argument("multivehicle9d: speed must be positive");
        if (!(radius > 0.0)) throw std::invalid_argument("multivehicle9d: radius must be positive");
        if (!(u_min < u_max)) throw std::invalid_argument("multivehicle9d: empty steering interval");
    }

    std::string name() const override { return "multivehicle9d"; }

    void flow(const Vec& x, const Vec& u, Vec& dx) const override {
        for (int i = 0; i < 3; ++i) {
            dx[3 * i + 0] = v_ * std::cos(x[3 * i + 2]);
            dx[3 * i + 1] = v_ * std::sin(x[3 * i + 2]);
            dx[3 * i + 2] = u[i];
        }
    }

    bool control_coefficients(const Vec& x, const Vec& grad, Vec& coeff) const override {
        (void)x;
        coeff.resize(3);
        for (int i = 0; i < 3; ++i) coeff[i] = grad[3 * i + 2];
        return true;
    }

    Vec flow_bounds() const override {
        double u_abs = std::max(std::fabs(control_box_.lower[0]), std::fabs(control_box_.upper[0]));
        return Vec{v_, v_, u_abs, v_, v_, u_abs, v_, v_, u_abs};
    }

    double speed() const { return v_; }
    double radius() const { return radius_; }

    static double min_pairwise_distance(const Vec& x) {
        double best = kInf;
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                double dx = x[3 * i] - x[3 * j];
                double dy = x[3 * i + 1] - x[3 * j + 1];
                best = std::min(best, std::hypot(dx, dy));
            }
        return best;
    }

  private:
    static Box default_box() {
        Box b;
        for (int i = 0; i < 3; ++i) {
            b.lower.push_back(-1.0), b.lower.push_back(-1.0), b.lower.push_back(-kPi);
            b.upper.push_back(1.0), b.upper.push_back(1.0), b.upper.push_back(kPi);
        }
        return b;
    }
    static TargetFunction make_target(double radius) {
        return TargetFunction{[radius](const Vec& x) { return min_pairwise_distance(x) - radius; },
                              "minimum pairwise vehicle distance minus collision radius"};
    }

    double v_;
    double radius_;
};

/// Planar rocket with two body-frame torque/thrust controls, trying to reach
/// a rectangular landing zone. State: (px, py, th, vx, vy, w).
class Rocket6D final : public SystemModel {
  public:
    explicit Rocket6D(double tau_bound = 250.0, double gravity = 9.81, const SystemOverrides& ov = {})
        : SystemModel(detail::resolve_box(default_box(), ov.state_box, 6),
                      Box{{-tau_bound, -tau_bound}, {tau_bound, tau_bound}},
                      {0, 0, 1, 0, 0, 0}, Mode::kReach,
                      ov.horizon > 0.0 ? ov.horizon : 0.3, make_target()),
          tau_bound_(tau_bound),
          gravity_(gravity) {
        if (!(tau_bound > 0.0)) throw std::invalid_argument("rocket6d: torque bound must be positive");
    }

    std::string name() const override { return "rocket6d"; }

    void flow(const Vec& x, const Vec& u, Vec& dx) const override {
        double c = std::cos(x[2]), s = std::sin(x[2]);
        dx[0] = x[3];
        dx[1] = x[4];
        dx[2] = x[5];
        dx[3] = u[0] * c - u[1] * s;
        dx[4] = u[0] * s + u[1] * c - gravity_;
        dx[5] = 0.3 * u[0];
    }

    bool control_coefficients(const Vec& x, const Vec& grad, Vec& coeff) const override {
        double c = std::cos(x[2]), s = std::sin(x[2]);
        coeff.resize(2);
        coeff[0] = c * grad[3] + s * grad[4] + 0.3 * grad[5];
        coeff[1] = -s * grad[3] + c * grad[4];
        return true;
    }

    Vec flow_bounds() const override {
        Vec b(6);
        b[0] = std::max(std::fabs(state_box_.lower[3]), std::fabs(state_box_.upper[3]));
        b[1] = std::max(std::fabs(state_box_.lower[4]), std::fabs(state_box_.upper[4]));
        b[2] = std::max(std::fabs(state_box_.lower[5]), std::fabs(state_box_.upper[5]));
        b[3] = 2.0 * tau_bound_;
        b[4] = 2.0 * tau_bound_ + gravity_;
        b[5] = 0.3 * tau_bound_;
        return b;
    }

    double default_rollout_dt() const override { return 0.01 * horizon_; }

  private:
    static Box default_box() {
        return Box{{-150.0, 10.0, -kPi, -200.0, -200.0, -10.0},
                   {150.0, 150.0, kPi, 200.0, 200.0, 10.0}};
    }
    static TargetFunction make_target() {
        // Margins to the landing rectangle |px| < 20, py < 20; any l with the
        // correct sub-zero level set works and max-of-margins is Lipschitz.
        return TargetFunction{
            [](const Vec& x) { return std::max(std::fabs(x[0]) - 20.0, x[1] - 20.0); },
            "max of landing-zone margins"};
    }

    double tau_bound_;
    double gravity_;
};

inline SystemPtr dubins3d_system(double v, double u_min, double u_max, double radius,
                                 Mode mode = Mode::kAvoid, const SystemOverrides& ov = {}) {
    return std::make_shared<Dubins3D>(v, u_min, u_max, radius, mode, ov);
}

inline SystemPtr multivehicle9d_system(double v, double u_min, double u_max, double radius,
                                       const SystemOverrides& ov = {}) {
    return std::make_shared<Multivehicle9D>(v, u_min, u_max, radius, ov);
}

inline SystemPtr rocket6d_system(double tau_bound = 250.0, double gravity = 9.81,
                                 const SystemOverrides& ov = {}) {
    return std::make_shared<Rocket6D>(tau_bound, gravity, ov);
}

}  // namespace reachcert
