#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>

namespace reachcert {

inline constexpr std::size_t kMaxDim = 16;
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

/// Fixed-capacity vector for states, controls, and gradients. All benchmark
/// systems fit in kMaxDim; keeping storage inline avoids heap traffic in the
/// rollout and solver inner loops.
class Vec {
  public:
    Vec() = default;
    explicit Vec(std::size_t n, double fill = 0.0) : n_(n) {
        check_cap(n);
        v_.fill(0.0);
        for (std::size_t i = 0; i < n_; ++i) v_[i] = fill;
    }
    Vec(std::initializer_list<double> xs) : n_(xs.size()) {
        check_cap(n_);
        std::size_t i = 0;
        for (double x : xs) v_[i++] = x;
    }

    std::size_t size() const { return n_; }
    bool empty() const { return n_ == 0; }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }
    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    double* begin() { return v_.data(); }
    double* end() { return v_.data() + n_; }
    const double* begin() const { return v_.data(); }
    const double* end() const { return v_.data() + n_; }

    void resize(std::size_t n, double fill = 0.0) {
        check_cap(n);
        for (std::size_t i = n_; i < n; ++i) v_[i] = fill;
        n_ = n;
    }
    void push_back(double x) {
        check_cap(n_ + 1);
        v_[n_++] = x;
    }

    bool all_finite() const {
        for (std::size_t i = 0; i < n_; ++i)
            if (!std::isfinite(v_[i])) return false;
        return true;
    }

    friend bool operator==(const Vec& a, const Vec& b) {
        if (a.n_ != b.n_) return false;
        for (std::size_t i = 0; i < a.n_; ++i)
            if (a.v_[i] != b.v_[i]) return false;
        return true;
    }

  private:
    static void check_cap(std::size_t n) {
        if (n > kMaxDim) throw std::length_error("Vec capacity exceeded");
    }
    std::array<double, kMaxDim> v_{};
    std::size_t n_ = 0;
};

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// y += a * x
inline void axpy(double a, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

/// Axis-aligned box, the verification domain X and the control set U.
struct Box {
    Vec lower;
    Vec upper;

    std::size_t dim() const { return lower.size(); }
    double width(std::size_t d) const { return upper[d] - lower[d]; }

    bool contains(const Vec& x, double slack = 0.0) const {
        for (std::size_t d = 0; d < dim(); ++d) {
            double s = slack * width(d);
            if (x[d] < lower[d] - s || x[d] > upper[d] + s) return false;
        }
        return true;
    }

    void validate(const std::string& what) const {
        if (lower.size() != upper.size() || lower.empty())
            throw std::invalid_argument(what + ": mismatched box bounds");
        for (std::size_t d = 0; d < dim(); ++d)
            if (!(lower[d] < upper[d]))
                throw std::invalid_argument(what + ": lower bound must be below upper bound");
    }
};

/// Wraps v into [lo, hi).
inline double wrap_periodic(double v, double lo, double hi) {
    double w = hi - lo;
    double r = std::fmod(v - lo, w);
    if (r < 0.0) r += w;
    return lo + r;
}

/// Shortest signed difference a-b on a periodic interval of the given width.
inline double periodic_diff(double a, double b, double width) {
    double d = std::fmod(a - b, width);
    if (d > 0.5 * width) d -= width;
    if (d < -0.5 * width) d += width;
    return d;
}

// Error taxonomy. Callers that need exit codes (the CLI) map these.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OutOfDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CflError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MemoryLimitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SamplingExhaustedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MalformedFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace reachcert
