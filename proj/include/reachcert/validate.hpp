#pragma once

#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "reachcert/grid_value.hpp"
#include "reachcert/verify.hpp"

namespace reachcert {

/// Independent statistical validation of a certificate. All counters come
/// from deterministic per-index sampling; the seed must differ from the
/// certification seed.
struct ValidationReport {
    long long samples_drawn = 0;
    long long violation_count = 0;
    double violation_rate = 0.0;
    double violation_rate_stderr = 0.0;
    bool empty_recovered_set = false;

    long long volume_samples = 0;
    double volume_fraction_trained = 0.0;
    double volume_fraction_recovered = 0.0;
    double volume_stderr_trained = 0.0;
    double volume_stderr_recovered = 0.0;
    double percent_reduction = 0.0;
    bool trained_volume_zero = false;

    bool has_truth = false;
    long long containment_samples = 0;
    long long containment_violations = 0;
    double containment_rate = 0.0;
    long long containment_outside_band = 0;

    std::vector<double> histogram_edges;
    std::vector<long long> histogram_counts_trained;
    std::vector<long long> histogram_counts_recovered;
    long long histogram_underflow_trained = 0, histogram_overflow_trained = 0;
    long long histogram_underflow_recovered = 0, histogram_overflow_recovered = 0;

    std::uint64_t seed = 0;
};

using MemberPredicate = std::function<bool(const Vec&)>;

/// Uniform rejection sampling of `count` states from {x in X : accept(x)}.
inline std::vector<Vec> sample_set(const SystemModel& sys, const MemberPredicate& accept,
                                   long long count, const StreamRng& rng,
                                   long long max_rejection_factor = 10000) {
    std::vector<Vec> out(static_cast<std::size_t>(count));
    parallel_for(
        out.size(),
        [&](std::size_t slot) {
            StreamRng slot_rng = rng.split(slot);
            for (long long attempt = 0; attempt < max_rejection_factor; ++attempt) {
                Vec x = detail::propose_uniform(sys.state_box(), slot_rng,
                                                static_cast<std::uint64_t>(attempt) * sys.state_dim());
                if (!accept(x)) continue;
                out[slot] = x;
                return;
            }
            throw SamplingExhaustedError("validation sampling exhausted: set has vanishing volume");
        },
        16);
    return out;
}

/// Draws fresh states uniformly from the recovered set, rolls them out under
/// the induced policy, and counts safety violations.
inline ValidationReport estimate_violation_rate(const ValueFunctionHandle& vf,
                                                const SystemModel& sys, double delta_hat,
                                                long long n_samples, std::uint64_t seed,
                                                double dt = 0.0,
                                                const MemberPredicate& member_override = nullptr) {
    ValidationReport report;
    report.seed = seed;
    const Mode mode = sys.mode();
    MemberPredicate member =
        member_override ? member_override
                        : MemberPredicate([&vf, delta_hat, mode](const Vec& x) {
                              return recovered_member(vf, delta_hat, x, mode);
                          });

    StreamRng rng = StreamRng(seed).split(0x7a11d8ull);
    std::vector<Vec> states;
    try {
        states = sample_set(sys, member, n_samples, rng);
    } catch (const SamplingExhaustedError&) {
        report.empty_recovered_set = true;
        return report;
    }
    double step = dt > 0.0 ? dt : sys.default_rollout_dt();
    std::vector<RolloutCost> costs = batch_cost(sys, vf, states, step);
    report.samples_drawn = static_cast<long long>(costs.size());
    for (const RolloutCost& c : costs)
        if (!c.safe) ++report.violation_count;
    report.violation_rate = double(report.violation_count) / double(report.samples_drawn);
    report.violation_rate_stderr =
        std::sqrt(report.violation_rate * (1.0 - report.violation_rate) / report.samples_drawn);
    return report;
}

/// Monte-Carlo volume fractions of the trained set (value side of zero) and
/// the recovered set (value side of delta_hat), from one common sample.
inline void volume_fractions(const ValueFunctionHandle& vf, const SystemModel& sys,
                             double delta_hat, long long n_samples, std::uint64_t seed,
                             ValidationReport& report,
                             const MemberPredicate& member_override = nullptr) {
    const Mode mode = sys.mode();
    StreamRng rng = StreamRng(seed).split(0x101f5ull);
    std::atomic<long long> trained{0}, recovered{0};
    parallel_for(
        static_cast<std::size_t>(n_samples),
        [&](std::size_t i) {
            Vec x = detail::propose_uniform(sys.state_box(), rng.split(i), 0);
            double v = vf.value(x, 0.0);
            bool in_trained = mode == Mode::kAvoid ? v > 0.0 : v <= 0.0;
            bool in_recovered = member_override ? member_override(x)
                                                : detail::level_accepts(mode, v, delta_hat);
            if (in_trained) trained.fetch_add(1, std::memory_order_relaxed);
            if (in_recovered) recovered.fetch_add(1, std::memory_order_relaxed);
        },
        64);
    report.volume_samples = n_samples;
    report.volume_fraction_trained = double(trained.load()) / double(n_samples);
    report.volume_fraction_recovered = double(recovered.load()) / double(n_samples);
    auto se = [n_samples](double p) { return std::sqrt(p * (1.0 - p) / n_samples); };
    report.volume_stderr_trained = se(report.volume_fraction_trained);
    report.volume_stderr_recovered = se(report.volume_fraction_recovered);
    if (report.volume_fraction_trained > 0.0) {
        report.percent_reduction =
            1.0 - report.volume_fraction_recovered / report.volume_fraction_trained;
    } else {
        report.percent_reduction = 0.0;
        report.trained_volume_zero = true;
    }
}

/// True when the zero level set of the truth's initial slice passes within
/// `cells` grid cells of x: the node block spanning the containing cell,
/// expanded by `cells`, has both signs.
inline bool near_zero_level(const GridValueFunction& truth, const Vec& x, int cells = 1) {
    const Grid& grid = truth.grid();
    const std::vector<double>& slice = truth.initial_slice();
    std::size_t n = grid.dim();
    std::vector<int> base(n);
    Vec frac(n);
    for (std::size_t d = 0; d < n; ++d) grid.locate(d, x[d], base[d], frac[d]);

    double lo = kInf, hi = -kInf;
    std::vector<int> idx(n);
    std::function<void(std::size_t)> sweep = [&](std::size_t d) {
        if (d == n) {
            double v = slice[grid.flat_index(idx)];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            return;
        }
        for (int o = -cells; o <= cells + 1; ++o) {
            int j = base[d] + o;
            if (grid.periodic(d)) {
                j %= grid.count(d);
                if (j < 0) j += grid.count(d);
            } else {
                if (j < 0 || j >= grid.count(d)) continue;
            }
            idx[d] = j;
            sweep(d + 1);
        }
    };
    sweep(0);
    return lo <= 0.0 && hi >= 0.0;
}

/// Containment against ground truth. Avoid: samples truly-unsafe states
/// (truth <= 0) and counts those the certificate claims safe. Reach: samples
/// the recovered set and counts states outside the true tube (truth > 0).
/// Also counts how many violations fall outside the one-cell discretization
/// band of the truth's zero level set.
inline void containment_check(const ValueFunctionHandle& vf, const SystemModel& sys,
                              double delta_hat, const GridValueFunction& truth,
                              long long n_samples, std::uint64_t seed, ValidationReport& report,
                              const MemberPredicate& member_override = nullptr) {
    const Mode mode = sys.mode();
    MemberPredicate member =
        member_override ? member_override
                        : MemberPredicate([&vf, delta_hat, mode](const Vec& x) {
                              return recovered_member(vf, delta_hat, x, mode);
                          });
    StreamRng rng = StreamRng(seed).split(0xc0417ull);

    MemberPredicate base = mode == Mode::kAvoid
                               ? MemberPredicate([&truth](const Vec& x) { return truth.value(x, 0.0) <= 0.0; })
                               : member;
    std::vector<Vec> states = sample_set(sys, base, n_samples, rng);

    std::vector<std::uint8_t> violation(states.size(), 0), outside(states.size(), 0);
    parallel_for(
        states.size(),
        [&](std::size_t i) {
            bool bad = mode == Mode::kAvoid ? member(states[i]) : truth.value(states[i], 0.0) > 0.0;
            if (!bad) return;
            violation[i] = 1;
            outside[i] = near_zero_level(truth, states[i], 1) ? 0 : 1;
        },
        32);
    report.has_truth = true;
    report.containment_samples = static_cast<long long>(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        report.containment_violations += violation[i];
        report.containment_outside_band += outside[i];
    }
    report.containment_rate =
        double(report.containment_violations) / double(report.containment_samples);
}

struct Histogram {
    std::vector<double> edges;
    std::vector<long long> counts;
    long long underflow = 0;
    long long overflow = 0;

    long long mass_below(double threshold) const {
        long long m = underflow;
        for (std::size_t b = 0; b + 1 < edges.size(); ++b)
            if (edges[b + 1] <= threshold) m += counts[b];
        return m;
    }
};

/// Bins per-trajectory costs J (for the multivehicle system J is the minimum
/// pairwise distance minus the collision radius).
inline Histogram min_l_histogram(const std::vector<RolloutCost>& costs,
                                 const std::vector<double>& edges) {
    if (edges.size() < 2) throw std::invalid_argument("histogram: need at least two edges");
    Histogram h;
    h.edges = edges;
    h.counts.assign(edges.size() - 1, 0);
    for (const RolloutCost& c : costs) {
        if (c.J < edges.front()) {
            ++h.underflow;
            continue;
        }
        if (c.J >= edges.back()) {
            ++h.overflow;
            continue;
        }
        auto it = std::upper_bound(h.edges.begin(), h.edges.end(), c.J);
        h.counts[static_cast<std::size_t>(it - h.edges.begin()) - 1] += 1;
    }
    return h;
}

inline void write_histogram_csv(const std::string& path, const Histogram& trained,
                                const Histogram& recovered) {
    std::ofstream out(path);
    if (!out) throw MalformedFileError("cannot open histogram csv for writing: " + path);
    out.precision(17);
    out << "bin_lo,bin_hi,count_trained,count_recovered\n";
    for (std::size_t b = 0; b + 1 < trained.edges.size(); ++b)
        out << trained.edges[b] << ',' << trained.edges[b + 1] << ',' << trained.counts[b] << ','
            << recovered.counts[b] << '\n';
}

/// Figure-style slice export: a regular lattice over two state dimensions at
/// fixed remaining coordinates, with the candidate value, recovered-set flag,
/// and (optionally) the truth's sub-zero flag per point.
inline void write_slice_csv(const std::string& path, const ValueFunctionHandle& vf,
                            const SystemModel& sys, const MemberPredicate& member,
                            std::size_t dim_x, std::size_t dim_y, const Vec& fixed, int nx, int ny,
                            const GridValueFunction* truth = nullptr) {
    std::ofstream out(path);
    if (!out) throw MalformedFileError("cannot open slice csv for writing: " + path);
    out.precision(17);
    out << "x,y,value,recovered";
    if (truth) out << ",truth_unsafe";
    out << '\n';
    const Box& box = sys.state_box();
    Vec q = fixed;
    for (int i = 0; i < nx; ++i) {
        double x = box.lower[dim_x] + box.width(dim_x) * i / (nx - 1);
        for (int j = 0; j < ny; ++j) {
            double y = box.lower[dim_y] + box.width(dim_y) * j / (ny - 1);
            q[dim_x] = x;
            q[dim_y] = y;
            double v = vf.value(q, 0.0);
            out << x << ',' << y << ',' << v << ',' << (member(q) ? 1 : 0);
            if (truth) out << ',' << (truth->value(q, 0.0) <= 0.0 ? 1 : 0);
            out << '\n';
        }
    }
}

}  // namespace reachcert
