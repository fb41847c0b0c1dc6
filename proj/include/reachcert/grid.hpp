#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "reachcert/common.hpp"

namespace reachcert {

/// Rectangular grid over a box. Non-periodic dimensions place nodes on both
/// endpoints with spacing (hi-lo)/(count-1); periodic dimensions identify the
/// endpoints and use spacing (hi-lo)/count, so node count-1 sits one step
/// below the upper bound.
class Grid {
  public:
    Grid() = default;
    Grid(Box box, std::vector<int> counts, std::vector<std::uint8_t> periodic)
        : box_(std::move(box)), counts_(std::move(counts)), periodic_(std::move(periodic)) {
        box_.validate("grid box");
        if (counts_.size() != box_.dim() || periodic_.size() != box_.dim())
            throw std::invalid_argument("grid: counts/periodic must match box dimension");
        spacing_.resize(dim());
        for (std::size_t d = 0; d < dim(); ++d) {
            if (counts_[d] < 3) throw std::invalid_argument("grid: need at least 3 nodes per dimension");
            spacing_[d] = box_.width(d) / (periodic_[d] ? counts_[d] : counts_[d] - 1);
        }
        strides_.assign(dim(), 1);
        for (std::size_t d = dim(); d-- > 1;) strides_[d - 1] = strides_[d] * counts_[d];
        size_ = strides_[0] * static_cast<std::size_t>(counts_[0]);
    }

    std::size_t dim() const { return box_.dim(); }
    std::size_t size() const { return size_; }
    const Box& box() const { return box_; }
    int count(std::size_t d) const { return counts_[d]; }
    const std::vector<int>& counts() const { return counts_; }
    bool periodic(std::size_t d) const { return periodic_[d] != 0; }
    const std::vector<std::uint8_t>& periodic_flags() const { return periodic_; }
    double spacing(std::size_t d) const { return spacing_[d]; }
    std::size_t stride(std::size_t d) const { return strides_[d]; }

    double node_coord(std::size_t d, int i) const { return box_.lower[d] + spacing_[d] * i; }

    std::size_t flat_index(const std::vector<int>& idx) const {
        std::size_t f = 0;
        for (std::size_t d = 0; d < dim(); ++d) f += strides_[d] * static_cast<std::size_t>(idx[d]);
        return f;
    }

    void unflatten(std::size_t flat, std::vector<int>& idx) const {
        idx.resize(dim());
        for (std::size_t d = 0; d < dim(); ++d) {
            idx[d] = static_cast<int>(flat / strides_[d]);
            flat %= strides_[d];
        }
    }

    Vec node_state(std::size_t flat) const {
        Vec x(dim());
        for (std::size_t d = 0; d < dim(); ++d) {
            x[d] = node_coord(d, static_cast<int>(flat / strides_[d]));
            flat %= strides_[d];
        }
        return x;
    }

    /// Index i shifted by step along dimension d, wrapping on periodic
    /// dimensions and clamping at non-periodic boundaries.
    int neighbor(std::size_t d, int i, int step) const {
        int j = i + step;
        if (periodic_[d]) {
            int c = counts_[d];
            j %= c;
            if (j < 0) j += c;
            return j;
        }
        return std::clamp(j, 0, counts_[d] - 1);
    }

    /// Locates the interpolation cell for coordinate v along dimension d;
    /// returns the lower node index and the fractional offset in [0,1].
    /// Throws for out-of-range non-periodic coordinates.
    void locate(std::size_t d, double v, int& i0, double& frac) const {
        if (periodic_[d]) {
            v = wrap_periodic(v, box_.lower[d], box_.upper[d]);
            double u = (v - box_.lower[d]) / spacing_[d];
            i0 = static_cast<int>(std::floor(u));
            if (i0 >= counts_[d]) i0 = counts_[d] - 1;  // guard for v == upper after roundoff
            frac = u - i0;
            return;
        }
        double slack = 1e-9 * box_.width(d);
        if (v < box_.lower[d] - slack || v > box_.upper[d] + slack)
            throw OutOfDomainError("grid query outside non-periodic bounds");
        double u = (v - box_.lower[d]) / spacing_[d];
        i0 = static_cast<int>(std::floor(u));
        i0 = std::clamp(i0, 0, counts_[d] - 2);
        frac = u - i0;
    }

    bool operator==(const Grid& other) const {
        return counts_ == other.counts_ && periodic_ == other.periodic_ &&
               box_.lower == other.box_.lower && box_.upper == other.box_.upper;
    }

  private:
    Box box_;
    std::vector<int> counts_;
    std::vector<std::uint8_t> periodic_;
    Vec spacing_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

}  // namespace reachcert
