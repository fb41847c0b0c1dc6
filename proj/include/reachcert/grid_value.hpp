#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "reachcert/grid.hpp"

namespace reachcert {

/// A value function V(x,t) sampled on a grid at a set of ascending time
/// stamps. Immutable once built; interpolation queries are concurrency-safe.
class GridValueFunction {
  public:
    GridValueFunction() = default;
    GridValueFunction(Grid grid, std::vector<double> times, std::vector<std::vector<double>> values)
        : grid_(std::move(grid)), times_(std::move(times)), values_(std::move(values)) {
        if (times_.empty() || values_.size() != times_.size())
            throw std::invalid_argument("grid value function: one value slice per time stamp");
        for (std::size_t k = 0; k + 1 < times_.size(); ++k)
            if (!(times_[k] < times_[k + 1]))
                throw std::invalid_argument("grid value function: time stamps must be ascending");
        for (const auto& slice : values_)
            if (slice.size() != grid_.size())
                throw std::invalid_argument("grid value function: slice size mismatch");
    }

    const Grid& grid() const { return grid_; }
    const std::vector<double>& times() const { return times_; }
    std::size_t slice_count() const { return times_.size(); }
    const std::vector<double>& slice(std::size_t k) const { return values_[k]; }
    const std::vector<double>& initial_slice() const { return values_.front(); }
    const std::vector<double>& terminal_slice() const { return values_.back(); }

    /// Multilinear interpolation in space, linear in time between slices.
    double value(const Vec& x, double t) const {
        int k0;
        double tf;
        locate_time(t, k0, tf);
        double v0 = interpolate_slice(values_[k0], x);
        if (tf == 0.0) return v0;
        double v1 = interpolate_slice(values_[k0 + 1], x);
        return v0 + tf * (v1 - v0);
    }

    /// Spatial gradient: central differences at the nodes (one-sided at
    /// non-periodic boundaries), multilinearly interpolated like the values.
    Vec gradient(const Vec& x, double t) const {
        int k0;
        double tf;
        locate_time(t, k0, tf);
        Vec g0 = interpolate_slice_gradient(values_[k0], x);
        if (tf == 0.0) return g0;
        Vec g1 = interpolate_slice_gradient(values_[k0 + 1], x);
        for (std::size_t d = 0; d < g0.size(); ++d) g0[d] += tf * (g1[d] - g0[d]);
        return g0;
    }

    void save(const std::string& path) const;
    static GridValueFunction load(const std::string& path);

    /// Writes a CSV of a 2D slice: dimensions (dim_x, dim_y) sweep their node
    /// coordinates, the remaining dimensions are fixed at the given state's
    /// components, time fixed at t.
    void write_slice_csv(const std::string& path, std::size_t dim_x, std::size_t dim_y,
                         const Vec& fixed, double t) const {
        std::ofstream out(path);
        if (!out) throw MalformedFileError("cannot open slice csv for writing: " + path);
        out << "x,y,value\n";
        out.precision(17);
        Vec q = fixed;
        for (int i = 0; i < grid_.count(dim_x); ++i) {
            for (int j = 0; j < grid_.count(dim_y); ++j) {
                q[dim_x] = grid_.node_coord(dim_x, i);
                q[dim_y] = grid_.node_coord(dim_y, j);
                out << q[dim_x] << ',' << q[dim_y] << ',' << value(q, t) << '\n';
            }
        }
    }

  private:
    void locate_time(double t, int& k0, double& frac) const {
        double slack = 1e-9 * (times_.back() - times_.front() + 1.0);
        if (t < times_.front() - slack || t > times_.back() + slack)
            throw OutOfDomainError("time outside stored range");
        if (times_.size() == 1 || t >= times_.back()) {
            k0 = static_cast<int>(times_.size()) - 1;
            frac = 0.0;
            if (times_.size() > 1) {
                k0 -= 1;
                frac = 1.0;
            }
            return;
        }
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        k0 = static_cast<int>(it - times_.begin()) - 1;
        if (k0 < 0) k0 = 0;
        frac = (t - times_[k0]) / (times_[k0 + 1] - times_[k0]);
    }

    double node_value(const std::vector<double>& slice, const std::vector<int>& idx) const {
        return slice[grid_.flat_index(idx)];
    }

    /// Central-difference gradient component at a node.
    double node_gradient(const std::vector<double>& slice, std::vector<int>& idx, std::size_t d) const {
        int i = idx[d];
        int ip = grid_.neighbor(d, i, +1);
        int im = grid_.neighbor(d, i, -1);
        idx[d] = ip;
        double vp = node_value(slice, idx);
        idx[d] = im;
        double vm = node_value(slice, idx);
        idx[d] = i;
        double span = grid_.spacing(d) * (grid_.periodic(d) ? 2.0 : (ip - i) - (im - i));
        return (vp - vm) / span;
    }

    template <typename NodeFn>
    void for_cell_corners(const Vec& x, NodeFn&& fn) const {
        std::size_t n = grid_.dim();
        std::vector<int> base(n);
        Vec frac(n);
        for (std::size_t d = 0; d < n; ++d) grid_.locate(d, x[d], base[d], frac[d]);
        std::vector<int> idx(n);
        std::size_t corners = std::size_t{1} << n;
        for (std::size_t c = 0; c < corners; ++c) {
            double w = 1.0;
            for (std::size_t d = 0; d < n; ++d) {
                bool hi = (c >> d) & 1u;
                idx[d] = hi ? grid_.neighbor(d, base[d], +1) : base[d];
                w *= hi ? frac[d] : 1.0 - frac[d];
            }
            if (w != 0.0) fn(idx, w);
        }
    }

    double interpolate_slice(const std::vector<double>& slice, const Vec& x) const {
        double acc = 0.0;
        for_cell_corners(x, [&](const std::vector<int>& idx, double w) {
            acc += w * node_value(slice, idx);
        });
        return acc;
    }

    Vec interpolate_slice_gradient(const std::vector<double>& slice, const Vec& x) const {
        Vec acc(grid_.dim());
        std::vector<int> scratch;
        for_cell_corners(x, [&](const std::vector<int>& idx, double w) {
            scratch = idx;
            for (std::size_t d = 0; d < grid_.dim(); ++d)
                acc[d] += w * node_gradient(slice, scratch, d);
        });
        return acc;
    }

    Grid grid_;
    std::vector<double> times_;
    std::vector<std::vector<double>> values_;
};

// --- binary file format -----------------------------------------------------
//
//   magic "RCGV" | u32 version | u32 endianness tag 0x01020304
//   u32 dim | per dim: u32 count, f64 lower, f64 upper, u8 periodic
//   u32 slice count | f64 time stamps
//   then slice-major, row-major (last dim fastest) f64 node values.

namespace detail {
inline constexpr char kGridMagic[4] = {'R', 'C', 'G', 'V'};
inline constexpr std::uint32_t kGridVersion = 1;
inline constexpr std::uint32_t kEndianTag = 0x01020304u;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, bool swap) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw MalformedFileError("unexpected end of file");
    if (swap && sizeof(T) > 1) {
        auto* p = reinterpret_cast<unsigned char*>(&v);
        std::reverse(p, p + sizeof(T));
    }
    return v;
}
}  // namespace detail

inline void GridValueFunction::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MalformedFileError("cannot open for writing: " + path);
    out.write(detail::kGridMagic, 4);
    detail::write_pod(out, detail::kGridVersion);
    detail::write_pod(out, detail::kEndianTag);
    detail::write_pod(out, static_cast<std::uint32_t>(grid_.dim()));
    for (std::size_t d = 0; d < grid_.dim(); ++d) {
        detail::write_pod(out, static_cast<std::uint32_t>(grid_.count(d)));
        detail::write_pod(out, grid_.box().lower[d]);
        detail::write_pod(out, grid_.box().upper[d]);
        detail::write_pod(out, static_cast<std::uint8_t>(grid_.periodic(d) ? 1 : 0));
    }
    detail::write_pod(out, static_cast<std::uint32_t>(times_.size()));
    for (double t : times_) detail::write_pod(out, t);
    for (const auto& slice : values_)
        out.write(reinterpret_cast<const char*>(slice.data()),
                  static_cast<std::streamsize>(slice.size() * sizeof(double)));
    if (!out) throw MalformedFileError("write failed: " + path);
}

inline GridValueFunction GridValueFunction::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedFileError("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, detail::kGridMagic, 4) != 0)
        throw MalformedFileError("not a grid value file: " + path);
    bool swap = false;
    auto version = detail::read_pod<std::uint32_t>(in, false);
    auto tag = detail::read_pod<std::uint32_t>(in, false);
    if (tag != detail::kEndianTag) {
        std::uint32_t swapped = ((tag & 0xffu) << 24) | ((tag & 0xff00u) << 8) |
                                ((tag >> 8) & 0xff00u) | (tag >> 24);
        if (swapped != detail::kEndianTag) throw MalformedFileError("bad endianness tag");
        swap = true;
        version = ((version & 0xffu) << 24) | ((version & 0xff00u) << 8) |
                  ((version >> 8) & 0xff00u) | (version >> 24);
    }
    if (version != detail::kGridVersion) throw MalformedFileError("unsupported grid file version");

    auto dim = detail::read_pod<std::uint32_t>(in, swap);
    if (dim == 0 || dim > kMaxDim) throw MalformedFileError("bad grid dimension");
    Box box;
    std::vector<int> counts(dim);
    std::vector<std::uint8_t> periodic(dim);
    for (std::uint32_t d = 0; d < dim; ++d) {
        counts[d] = static_cast<int>(detail::read_pod<std::uint32_t>(in, swap));
        box.lower.push_back(detail::read_pod<double>(in, swap));
        box.upper.push_back(detail::read_pod<double>(in, swap));
        periodic[d] = detail::read_pod<std::uint8_t>(in, swap);
    }
    Grid grid(box, counts, periodic);

    auto n_times = detail::read_pod<std::uint32_t>(in, swap);
    if (n_times == 0) throw MalformedFileError("grid file has no time stamps");
    std::vector<double> times(n_times);
    for (auto& t : times) t = detail::read_pod<double>(in, swap);

    std::vector<std::vector<double>> values(n_times);
    for (auto& slice : values) {
        slice.resize(grid.size());
        in.read(reinterpret_cast<char*>(slice.data()),
                static_cast<std::streamsize>(slice.size() * sizeof(double)));
        if (!in) throw MalformedFileError("truncated grid value file: " + path);
        if (swap)
            for (auto& v : slice) {
                auto* p = reinterpret_cast<unsigned char*>(&v);
                std::reverse(p, p + sizeof(double));
            }
        for (double v : slice)
            if (std::isnan(v)) throw MalformedFileError("grid file contains NaN values");
    }
    return GridValueFunction(std::move(grid), std::move(times), std::move(values));
}

}  // namespace reachcert
