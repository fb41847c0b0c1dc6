#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "reachcert/grid_value.hpp"

namespace reachcert {

enum class Provenance : std::uint8_t { kGridSolved, kLoadedNetwork, kAnalytic, kPerturbed };

inline std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::kGridSolved: return "grid-solved";
        case Provenance::kLoadedNetwork: return "loaded-network";
        case Provenance::kAnalytic: return "analytic";
        case Provenance::kPerturbed: return "perturbed";
    }
    return "?";
}

/// Uniform interface over candidate value functions. Evaluation and gradient
/// are pure and deterministic: identical inputs give bit-identical outputs.
class ValueFunctionHandle {
  public:
    ValueFunctionHandle(Box domain, std::vector<std::uint8_t> periodic)
        : domain_(std::move(domain)), periodic_(std::move(periodic)) {}
    virtual ~ValueFunctionHandle() = default;

    virtual double value(const Vec& x, double t) const = 0;
    virtual Provenance provenance() const = 0;
    virtual std::string describe() const = 0;

    /// Spatial gradient. Default: central finite differences with step
    /// 1e-4 of the per-dimension domain width.
    virtual Vec gradient(const Vec& x, double t) const {
        Vec g(x.size());
        Vec probe = x;
        for (std::size_t d = 0; d < x.size(); ++d) {
            double h = 1e-4 * domain_.width(d);
            probe[d] = x[d] + h;
            double vp = value(probe, t);
            probe[d] = x[d] - h;
            double vm = value(probe, t);
            probe[d] = x[d];
            g[d] = (vp - vm) / (2.0 * h);
        }
        return g;
    }

    const Box& domain() const { return domain_; }
    bool periodic(std::size_t d) const { return periodic_[d] != 0; }
    const std::vector<std::uint8_t>& periodic_flags() const { return periodic_; }

  protected:
    Box domain_;
    std::vector<std::uint8_t> periodic_;
};

using VfPtr = std::shared_ptr<const ValueFunctionHandle>;

/// Handle over a grid-solved value function; delegates straight to the
/// grid interpolation.
class GridSolvedHandle final : public ValueFunctionHandle {
  public:
    explicit GridSolvedHandle(std::shared_ptr<const GridValueFunction> gvf)
        : ValueFunctionHandle(gvf->grid().box(), gvf->grid().periodic_flags()), gvf_(std::move(gvf)) {}

    double value(const Vec& x, double t) const override { return gvf_->value(x, t); }
    Vec gradient(const Vec& x, double t) const override { return gvf_->gradient(x, t); }
    Provenance provenance() const override { return Provenance::kGridSolved; }
    std::string describe() const override { return "grid-solved value function"; }

    const GridValueFunction& grid_value() const { return *gvf_; }

  private:
    std::shared_ptr<const GridValueFunction> gvf_;
};

/// Handle over closed-form expressions; used for the handcrafted
/// high-dimensional candidates and in tests. The gradient falls back to
/// finite differences unless one is supplied.
class AnalyticHandle final : public ValueFunctionHandle {
  public:
    using ValueFn = std::function<double(const Vec&, double)>;
    using GradFn = std::function<Vec(const Vec&, double)>;

    AnalyticHandle(Box domain, std::vector<std::uint8_t> periodic, std::string name, ValueFn value,
                   GradFn grad = nullptr)
        : ValueFunctionHandle(std::move(domain), std::move(periodic)),
          name_(std::move(name)),
          value_(std::move(value)),
          grad_(std::move(grad)) {}

    double value(const Vec& x, double t) const override { return value_(x, t); }
    Vec gradient(const Vec& x, double t) const override {
        return grad_ ? grad_(x, t) : ValueFunctionHandle::gradient(x, t);
    }
    Provenance provenance() const override { return Provenance::kAnalytic; }
    std::string describe() const override { return "analytic: " + name_; }

  private:
    std::string name_;
    ValueFn value_;
    GradFn grad_;
};

/// Adds a constant to every value; the gradient (and hence the induced
/// policy) is untouched.
class UniformBiasHandle final : public ValueFunctionHandle {
  public:
    UniformBiasHandle(VfPtr base, double bias)
        : ValueFunctionHandle(base->domain(), base->periodic_flags()),
          base_(std::move(base)),
          bias_(bias) {
        if (!std::isfinite(bias)) throw std::invalid_argument("perturb: bias must be finite");
    }

    double value(const Vec& x, double t) const override { return base_->value(x, t) + bias_; }
    Vec gradient(const Vec& x, double t) const override { return base_->gradient(x, t); }
    Provenance provenance() const override { return Provenance::kPerturbed; }
    std::string describe() const override {
        return base_->describe() + " + uniform bias " + std::to_string(bias_);
    }

  private:
    VfPtr base_;
    double bias_;
};

/// Adds a compactly supported smooth bump
///   amplitude * exp(1 - 1/(1 - r^2)),  r = |x - center| / radius  (r < 1),
/// with periodic dimensions measured by wrapped distance. Time-independent.
class LocalizedBumpHandle final : public ValueFunctionHandle {
  public:
    LocalizedBumpHandle(VfPtr base, Vec center, double radius, double amplitude)
        : ValueFunctionHandle(base->domain(), base->periodic_flags()),
          base_(std::move(base)),
          center_(std::move(center)),
          radius_(radius),
          amplitude_(amplitude) {
        if (center_.size() != domain_.dim())
            throw std::invalid_argument("perturb: bump center has wrong dimension");
        if (!(radius > 0.0) || !std::isfinite(radius) || !std::isfinite(amplitude))
            throw std::invalid_argument("perturb: bump radius/amplitude invalid");
    }

    double value(const Vec& x, double t) const override { return base_->value(x, t) + bump(x); }

    Vec gradient(const Vec& x, double t) const override {
        Vec g = base_->gradient(x, t);
        double s = squared_r(x);
        if (s < 1.0) {
            double b = amplitude_ * std::exp(1.0 - 1.0 / (1.0 - s));
            double db_ds = -b / ((1.0 - s) * (1.0 - s));
            for (std::size_t d = 0; d < g.size(); ++d)
                g[d] += db_ds * 2.0 * diff(x, d) / (radius_ * radius_);
        }
        return g;
    }

    Provenance provenance() const override { return Provenance::kPerturbed; }
    std::string describe() const override {
        return base_->describe() + " + bump(amplitude " + std::to_string(amplitude_) + ", radius " +
               std::to_string(radius_) + ")";
    }

  private:
    double diff(const Vec& x, std::size_t d) const {
        return periodic_[d] ? periodic_diff(x[d], center_[d], domain_.width(d)) : x[d] - center_[d];
    }
    double squared_r(const Vec& x) const {
        double s = 0.0;
        for (std::size_t d = 0; d < x.size(); ++d) {
            double r = diff(x, d) / radius_;
            s += r * r;
        }
        return s;
    }
    double bump(const Vec& x) const {
        double s = squared_r(x);
        return s < 1.0 ? amplitude_ * std::exp(1.0 - 1.0 / (1.0 - s)) : 0.0;
    }

    VfPtr base_;
    Vec center_;
    double radius_;
    double amplitude_;
};

inline VfPtr make_grid_handle(GridValueFunction gvf) {
    return std::make_shared<GridSolvedHandle>(
        std::make_shared<const GridValueFunction>(std::move(gvf)));
}

inline VfPtr perturb_uniform_bias(VfPtr base, double bias) {
    return std::make_shared<UniformBiasHandle>(std::move(base), bias);
}

inline VfPtr perturb_localized_bump(VfPtr base, Vec center, double radius, double amplitude) {
    return std::make_shared<LocalizedBumpHandle>(std::move(base), std::move(center), radius, amplitude);
}

}  // namespace reachcert
