#pragma once

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "reachcert/value_function.hpp"

namespace reachcert {

/// Sinusoidal fully connected network approximating V(x,t). Inputs are the
/// state coordinates followed by time, each affinely mapped to [-1,1] by the
/// stored normalization ranges; hidden layers apply sin (the first one scaled
/// by the frequency w0), the output layer is affine with a single unit.
class SirenNetwork {
  public:
    struct Layer {
        int in = 0, out = 0;
        std::vector<double> weights;  // row-major, out x in
        std::vector<double> bias;     // out
    };

    SirenNetwork() = default;
    SirenNetwork(std::size_t state_dim, std::vector<Layer> layers, double w0, Box input_ranges)
        : state_dim_(state_dim), layers_(std::move(layers)), w0_(w0), ranges_(std::move(input_ranges)) {
        validate();
    }

    std::size_t state_dim() const { return state_dim_; }
    std::size_t input_dim() const { return state_dim_ + 1; }
    double w0() const { return w0_; }
    const Box& input_ranges() const { return ranges_; }
    const std::vector<Layer>& layers() const { return layers_; }

    double evaluate(const Vec& x, double t) const {
        thread_local std::vector<double> a, b;
        normalize_input(x, t, a);
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            affine(layers_[k], a, b);
            if (k + 1 < layers_.size()) {
                double scale = k == 0 ? w0_ : 1.0;
                for (auto& v : b) v = std::sin(scale * v);
            }
            std::swap(a, b);
        }
        return a[0];
    }

    /// Analytic spatial gradient via the chain rule, including the input
    /// normalization slope. Matches central finite differences to ~1e-4
    /// relative error.
    Vec spatial_gradient(const Vec& x, double t) const {
        thread_local std::vector<double> a, b, pre;
        thread_local std::vector<std::vector<double>> cos_scale;
        cos_scale.resize(layers_.size());
        normalize_input(x, t, a);
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            affine(layers_[k], a, b);
            if (k + 1 < layers_.size()) {
                double scale = k == 0 ? w0_ : 1.0;
                auto& cs = cos_scale[k];
                cs.resize(b.size());
                for (std::size_t i = 0; i < b.size(); ++i) {
                    cs[i] = scale * std::cos(scale * b[i]);
                    b[i] = std::sin(scale * b[i]);
                }
            }
            std::swap(a, b);
        }

        // Backward pass: d(output)/d(pre-activation) going down the stack.
        thread_local std::vector<double> grad_upper, grad_lower;
        grad_upper.assign(layers_.back().in, 0.0);
        const Layer& out_layer = layers_.back();
        for (int j = 0; j < out_layer.in; ++j) grad_upper[j] = out_layer.weights[j];
        for (std::size_t k = layers_.size() - 1; k-- > 0;) {
            const Layer& lay = layers_[k];
            const auto& cs = cos_scale[k];
            pre.assign(lay.out, 0.0);
            for (int i = 0; i < lay.out; ++i) pre[i] = grad_upper[i] * cs[i];
            grad_lower.assign(lay.in, 0.0);
            for (int i = 0; i < lay.out; ++i) {
                const double* row = &lay.weights[static_cast<std::size_t>(i) * lay.in];
                double pi = pre[i];
                for (int j = 0; j < lay.in; ++j) grad_lower[j] += pi * row[j];
            }
            std::swap(grad_upper, grad_lower);
        }

        Vec g(state_dim_);
        for (std::size_t d = 0; d < state_dim_; ++d)
            g[d] = grad_upper[d] * 2.0 / ranges_.width(d);
        return g;
    }

    void save(const std::string& path) const;
    static SirenNetwork load(const std::string& path);

  private:
    void validate() const {
        if (layers_.size() < 2) throw MalformedFileError("siren: need at least hidden and output layers");
        if (ranges_.dim() != input_dim()) throw MalformedFileError("siren: normalization range mismatch");
        ranges_.validate("siren input ranges");
        if (!(w0_ > 0.0) || !std::isfinite(w0_)) throw MalformedFileError("siren: invalid w0");
        int expect_in = static_cast<int>(input_dim());
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            const Layer& lay = layers_[k];
            if (lay.in != expect_in || lay.out <= 0)
                throw MalformedFileError("siren: layer dimension mismatch");
            if (lay.weights.size() != static_cast<std::size_t>(lay.in) * lay.out ||
                lay.bias.size() != static_cast<std::size_t>(lay.out))
                throw MalformedFileError("siren: layer size mismatch");
            for (double w : lay.weights)
                if (!std::isfinite(w)) throw MalformedFileError("siren: non-finite weight");
            for (double b : lay.bias)
                if (!std::isfinite(b)) throw MalformedFileError("siren: non-finite bias");
            expect_in = lay.out;
        }
        if (layers_.back().out != 1) throw MalformedFileError("siren: output dimension must be 1");
    }

    void normalize_input(const Vec& x, double t, std::vector<double>& z) const {
        z.resize(input_dim());
        for (std::size_t d = 0; d < state_dim_; ++d)
            z[d] = 2.0 * (x[d] - ranges_.lower[d]) / ranges_.width(d) - 1.0;
        std::size_t td = state_dim_;
        z[td] = 2.0 * (t - ranges_.lower[td]) / ranges_.width(td) - 1.0;
    }

    static void affine(const Layer& lay, const std::vector<double>& in, std::vector<double>& out) {
        out.assign(lay.out, 0.0);
        for (int i = 0; i < lay.out; ++i) {
            const double* row = &lay.weights[static_cast<std::size_t>(i) * lay.in];
            double acc = lay.bias[i];
            for (int j = 0; j < lay.in; ++j) acc += row[j] * in[j];
            out[i] = acc;
        }
    }

    std::size_t state_dim_ = 0;
    std::vector<Layer> layers_;
    double w0_ = 30.0;
    Box ranges_;
};

// --- weights file format ------------------------------------------------
//
//   magic "RCWT" | u32 version | u32 endianness tag
//   u32 state_dim | f64 w0
//   per input dim (state dims then time): f64 lower, f64 upper
//   u32 layer count | per layer: u32 in, u32 out, f64 weights (row-major), f64 bias

inline void SirenNetwork::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MalformedFileError("cannot open for writing: " + path);
    out.write("RCWT", 4);
    detail::write_pod(out, std::uint32_t{1});
    detail::write_pod(out, detail::kEndianTag);
    detail::write_pod(out, static_cast<std::uint32_t>(state_dim_));
    detail::write_pod(out, w0_);
    for (std::size_t d = 0; d < input_dim(); ++d) {
        detail::write_pod(out, ranges_.lower[d]);
        detail::write_pod(out, ranges_.upper[d]);
    }
    detail::write_pod(out, static_cast<std::uint32_t>(layers_.size()));
    for (const Layer& lay : layers_) {
        detail::write_pod(out, static_cast<std::uint32_t>(lay.in));
        detail::write_pod(out, static_cast<std::uint32_t>(lay.out));
        out.write(reinterpret_cast<const char*>(lay.weights.data()),
                  static_cast<std::streamsize>(lay.weights.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(lay.bias.data()),
                  static_cast<std::streamsize>(lay.bias.size() * sizeof(double)));
    }
    if (!out) throw MalformedFileError("write failed: " + path);
}

inline SirenNetwork SirenNetwork::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedFileError("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "RCWT", 4) != 0)
        throw MalformedFileError("not a weights file: " + path);
    auto version = detail::read_pod<std::uint32_t>(in, false);
    auto tag = detail::read_pod<std::uint32_t>(in, false);
    bool swap = false;
    if (tag != detail::kEndianTag) {
        std::uint32_t swapped = ((tag & 0xffu) << 24) | ((tag & 0xff00u) << 8) |
                                ((tag >> 8) & 0xff00u) | (tag >> 24);
        if (swapped != detail::kEndianTag) throw MalformedFileError("bad endianness tag");
        swap = true;
        version = ((version & 0xffu) << 24) | ((version & 0xff00u) << 8) |
                  ((version >> 8) & 0xff00u) | (version >> 24);
    }
    if (version != 1) throw MalformedFileError("unsupported weights file version");

    auto state_dim = detail::read_pod<std::uint32_t>(in, swap);
    if (state_dim == 0 || state_dim >= kMaxDim) throw MalformedFileError("bad state dimension");
    double w0 = detail::read_pod<double>(in, swap);
    Box ranges;
    for (std::uint32_t d = 0; d < state_dim + 1; ++d) {
        ranges.lower.push_back(detail::read_pod<double>(in, swap));
        ranges.upper.push_back(detail::read_pod<double>(in, swap));
    }
    auto n_layers = detail::read_pod<std::uint32_t>(in, swap);
    if (n_layers < 2 || n_layers > 64) throw MalformedFileError("bad layer count");
    std::vector<Layer> layers(n_layers);
    for (auto& lay : layers) {
        lay.in = static_cast<int>(detail::read_pod<std::uint32_t>(in, swap));
        lay.out = static_cast<int>(detail::read_pod<std::uint32_t>(in, swap));
        if (lay.in <= 0 || lay.out <= 0 || lay.in > 100000 || lay.out > 100000)
            throw MalformedFileError("bad layer shape");
        lay.weights.resize(static_cast<std::size_t>(lay.in) * lay.out);
        lay.bias.resize(lay.out);
        in.read(reinterpret_cast<char*>(lay.weights.data()),
                static_cast<std::streamsize>(lay.weights.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(lay.bias.data()),
                static_cast<std::streamsize>(lay.bias.size() * sizeof(double)));
        if (!in) throw MalformedFileError("truncated weights file: " + path);
        if (swap) {
            for (auto& v : lay.weights) {
                auto* p = reinterpret_cast<unsigned char*>(&v);
                std::reverse(p, p + sizeof(double));
            }
            for (auto& v : lay.bias) {
                auto* p = reinterpret_cast<unsigned char*>(&v);
                std::reverse(p, p + sizeof(double));
            }
        }
    }
    return SirenNetwork(state_dim, std::move(layers), w0, std::move(ranges));
}

/// Handle adapter for loaded networks.
class SirenHandle final : public ValueFunctionHandle {
  public:
    SirenHandle(SirenNetwork net, std::vector<std::uint8_t> periodic, std::string origin)
        : ValueFunctionHandle(state_box_of(net), std::move(periodic)),
          net_(std::move(net)),
          origin_(std::move(origin)) {
        if (periodic_.size() != net_.state_dim())
            throw MalformedFileError("siren: periodic flags must match state dimension");
    }

    double value(const Vec& x, double t) const override { return net_.evaluate(x, t); }
    Vec gradient(const Vec& x, double t) const override { return net_.spatial_gradient(x, t); }
    Provenance provenance() const override { return Provenance::kLoadedNetwork; }
    std::string describe() const override { return "loaded network: " + origin_; }
    const SirenNetwork& network() const { return net_; }

  private:
    static Box state_box_of(const SirenNetwork& net) {
        Box b;
        for (std::size_t d = 0; d < net.state_dim(); ++d) {
            b.lower.push_back(net.input_ranges().lower[d]);
            b.upper.push_back(net.input_ranges().upper[d]);
        }
        return b;
    }

    SirenNetwork net_;
    std::string origin_;
};

inline VfPtr load_network(const std::string& path, std::vector<std::uint8_t> periodic) {
    return std::make_shared<SirenHandle>(SirenNetwork::load(path), std::move(periodic), path);
}

}  // namespace reachcert
