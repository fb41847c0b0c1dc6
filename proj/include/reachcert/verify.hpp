#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "reachcert/rng.hpp"
#include "reachcert/rollout.hpp"

namespace reachcert {

/// Smallest sample count N with N >= (2/epsilon) (ln(1/beta) + 1), the
/// scenario-optimization prescription behind the (epsilon, beta) guarantee.
inline long long required_samples(double epsilon, double beta) {
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) throw std::domain_error("epsilon must lie in (0,1)");
    if (!(beta > 0.0) || !(beta < 1.0)) throw std::domain_error("beta must lie in (0,1)");
    double bound = (2.0 / epsilon) * (std::log(1.0 / beta) + 1.0);
    if (!(bound < 9.0e18)) throw std::domain_error("sample bound overflows a 64-bit count");
    return std::max<long long>(1, static_cast<long long>(std::ceil(bound)));
}

struct VerifyConfig {
    double epsilon = 1e-3;
    double beta = 1e-16;
    long long samples = 0;  // 0: derive from (epsilon, beta)
    int max_iterations = 20;
    std::uint64_t seed = 1;
    double dt = 0.0;  // 0: system default
    long long max_rejection_factor = 10000;
    int violation_log_cap = 32;

    long long resolved_samples() const {
        long long n = samples > 0 ? samples : required_samples(epsilon, beta);
        if (samples > 0 && samples < required_samples(epsilon, beta))
            throw ConfigError("verify: sample override is below the (epsilon, beta) bound");
        return n;
    }

    void validate() const {
        (void)resolved_samples();
        if (max_iterations < 1) throw ConfigError("verify: max_iterations must be >= 1");
        if (max_rejection_factor < 1) throw ConfigError("verify: max_rejection_factor must be >= 1");
    }
};

struct ViolationRecord {
    Vec state;
    double value;  // candidate value at (x, 0)
    double J;
};

struct VerifyResult {
    Mode mode = Mode::kAvoid;
    double delta_hat = -kInf;
    std::vector<double> iteration_deltas;  // delta_0 (+-inf) then each update
    bool converged = false;
    bool degenerate = false;  // super-level sampling exhausted: empty recovered set
    long long total_rollouts = 0;
    long long samples_per_iteration = 0;
    int iterations_run = 0;
    std::uint64_t seed = 0;
    std::vector<ViolationRecord> violating_samples;  // capped log
};

/// Recovered-set membership (strict inequalities): Avoid keeps the
/// super-delta level set, Reach the sub-delta one.
inline bool recovered_member(const ValueFunctionHandle& vf, double delta_hat, const Vec& x, Mode mode) {
    double v = vf.value(x, 0.0);
    return mode == Mode::kAvoid ? v > delta_hat : v < delta_hat;
}

namespace detail {

inline bool level_accepts(Mode mode, double v, double delta) {
    return mode == Mode::kAvoid ? v > delta : v < delta;
}

/// One uniform proposal on the box; coordinates consume consecutive counters.
inline Vec propose_uniform(const Box& box, const StreamRng& rng, std::uint64_t base_counter) {
    Vec x(box.dim());
    for (std::size_t d = 0; d < box.dim(); ++d)
        x[d] = rng.uniform(base_counter + d, box.lower[d], box.upper[d]);
    return x;
}

}  // namespace detail

using RegionPredicate = std::function<bool(const Vec&)>;

/// Rejection sampling of `count` i.i.d. states uniform over
/// {x in X : vf(x,0) > delta} (Avoid; "<" for Reach), optionally intersected
/// with a region predicate. Each output slot draws from its own counter
/// stream, so results are reproducible for any worker count. Throws
/// SamplingExhaustedError once a slot burns max_rejection_factor proposals,
/// which signals a (near-)empty set.
inline std::vector<Vec> sample_super_level(const ValueFunctionHandle& vf, const SystemModel& sys,
                                           double delta, long long count, const StreamRng& rng,
                                           long long max_rejection_factor = 10000,
                                           const RegionPredicate& region = nullptr) {
    const Box& box = sys.state_box();
    const Mode mode = sys.mode();
    std::vector<Vec> out(static_cast<std::size_t>(count));
    parallel_for(
        out.size(),
        [&](std::size_t slot) {
            StreamRng slot_rng = rng.split(slot);
            for (long long attempt = 0; attempt < max_rejection_factor; ++attempt) {
                Vec x = detail::propose_uniform(
                    box, slot_rng, static_cast<std::uint64_t>(attempt) * box.dim());
                if (!detail::level_accepts(mode, vf.value(x, 0.0), delta)) continue;
                if (region && !region(x)) continue;
                out[slot] = x;
                return;
            }
            throw SamplingExhaustedError(
                "rejection sampling exhausted after " + std::to_string(max_rejection_factor) +
                " proposals per sample; the level set is empty or vanishingly small");
        },
        16);
    return out;
}

/// Scenario Optimization Verification. Starting from delta_0 = -inf (Avoid;
/// +inf for Reach), each iteration samples N fresh i.i.d. states from the
/// current super-delta level set, rolls them out under the induced policy,
/// and raises delta to the worst violating value. Convergence means an
/// entire iteration passed with zero violations; delta is deliberately not
/// touched in that final iteration. An exhausted sampler yields a valid but
/// empty certificate (delta_hat at the empty-side sentinel).
inline VerifyResult scenario_verify(const ValueFunctionHandle& vf, const SystemModel& sys,
                                    const VerifyConfig& config,
                                    const RegionPredicate& region = nullptr,
                                    std::uint64_t region_tag = 0) {
    config.validate();
    const Mode mode = sys.mode();
    const long long n_samples = config.resolved_samples();
    const double dt = config.dt > 0.0 ? config.dt : sys.default_rollout_dt();

    VerifyResult result;
    result.mode = mode;
    result.seed = config.seed;
    result.samples_per_iteration = n_samples;

    double delta = mode == Mode::kAvoid ? -kInf : kInf;
    result.iteration_deltas.push_back(delta);

    StreamRng root = StreamRng(config.seed).split(0x7e21f1ull).split(region_tag);
    for (int iter = 0; iter < config.max_iterations; ++iter) {
        std::vector<Vec> states;
        try {
            states = sample_super_level(vf, sys, delta, n_samples, root.split(iter),
                                        config.max_rejection_factor, region);
        } catch (const SamplingExhaustedError&) {
            result.degenerate = true;
            result.converged = true;
            delta = mode == Mode::kAvoid ? kInf : -kInf;
            result.iteration_deltas.push_back(delta);
            break;
        }
        std::vector<RolloutCost> costs = batch_cost(sys, vf, states, dt);
        result.total_rollouts += static_cast<long long>(costs.size());
        ++result.iterations_run;

        bool any_violation = false;
        double worst = delta;
        for (std::size_t i = 0; i < costs.size(); ++i) {
            if (costs[i].safe) continue;
            double v = vf.value(states[i], 0.0);
            if (!any_violation) {
                worst = v;
                any_violation = true;
            } else {
                worst = mode == Mode::kAvoid ? std::max(worst, v) : std::min(worst, v);
            }
            if (static_cast<int>(result.violating_samples.size()) < config.violation_log_cap)
                result.violating_samples.push_back({states[i], v, costs[i].J});
        }
        if (!any_violation) {
            result.converged = true;
            break;
        }
        delta = worst;
        result.iteration_deltas.push_back(delta);
    }
    result.delta_hat = result.iteration_deltas.back();
    return result;
}

/// k-nearest-neighbor regressor over (state, empirical cost) pairs, used only
/// to partition the domain for binned verification; the per-region guarantee
/// never depends on its accuracy. Distances are box-normalized Euclidean with
/// periodic wrap.
class CostPredictor {
  public:
    CostPredictor(std::vector<Vec> states, std::vector<double> scores, Box box,
                  std::vector<std::uint8_t> periodic, int k = 16)
        : states_(std::move(states)),
          scores_(std::move(scores)),
          box_(std::move(box)),
          periodic_(std::move(periodic)),
          k_(k) {
        if (states_.empty() || states_.size() != scores_.size())
            throw std::invalid_argument("predictor: need matching non-empty states/scores");
        if (k_ < 1 || k_ > 64) throw std::invalid_argument("predictor: k must lie in [1, 64]");
    }

    /// Builds the training set by rolling out n_train uniform states under
    /// the handle's own induced policy.
    static CostPredictor train(const ValueFunctionHandle& vf, const SystemModel& sys,
                               long long n_train, std::uint64_t seed, double dt = 0.0, int k = 16) {
        StreamRng rng = StreamRng(seed).split(0x9c0573ull);
        std::vector<Vec> states(static_cast<std::size_t>(n_train));
        for (std::size_t i = 0; i < states.size(); ++i)
            states[i] = detail::propose_uniform(sys.state_box(), rng.split(i), 0);
        double step = dt > 0.0 ? dt : sys.default_rollout_dt();
        std::vector<RolloutCost> costs = batch_cost(sys, vf, states, step);
        std::vector<double> scores(states.size());
        for (std::size_t i = 0; i < states.size(); ++i) scores[i] = costs[i].J;
        return CostPredictor(std::move(states), std::move(scores), sys.state_box(),
                             sys_periodic(sys), k);
    }

    /// Loads externally scored points from CSV rows "x0,...,xn-1,score".
    static CostPredictor load_csv(const std::string& path, const SystemModel& sys, int k = 16) {
        std::ifstream in(path);
        if (!in) throw MalformedFileError("cannot open scored-points file: " + path);
        std::vector<Vec> states;
        std::vector<double> scores;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream row(line);
            std::string cell;
            std::vector<double> vals;
            while (std::getline(row, cell, ',')) {
                try {
                    vals.push_back(std::stod(cell));
                } catch (const std::exception&) {
                    throw MalformedFileError("scored-points cell is not a number: " + cell);
                }
            }
            if (vals.size() != sys.state_dim() + 1)
                throw MalformedFileError("scored-points row has wrong arity: " + line);
            Vec x(sys.state_dim());
            for (std::size_t d = 0; d < sys.state_dim(); ++d) x[d] = vals[d];
            states.push_back(x);
            scores.push_back(vals.back());
        }
        return CostPredictor(std::move(states), std::move(scores), sys.state_box(),
                             sys_periodic(sys), k);
    }

    double predict(const Vec& x) const {
        int k = std::min<int>(k_, static_cast<int>(states_.size()));
        // Fixed-size worst-first list of the k best distances seen so far.
        std::array<double, 64> best_d;
        std::array<double, 64> best_s;
        int kk = std::min(k, 64);
        for (int i = 0; i < kk; ++i) best_d[i] = kInf;
        for (std::size_t i = 0; i < states_.size(); ++i) {
            double d2 = distance2(states_[i], x);
            if (d2 >= best_d[0]) continue;
            // replace current worst, then restore worst-first order
            int pos = 0;
            while (pos + 1 < kk && best_d[pos + 1] > d2) {
                best_d[pos] = best_d[pos + 1];
                best_s[pos] = best_s[pos + 1];
                ++pos;
            }
            best_d[pos] = d2;
            best_s[pos] = scores_[i];
        }
        double acc = 0.0;
        for (int i = 0; i < kk; ++i) acc += best_s[i];
        return acc / kk;
    }

    std::size_t training_size() const { return states_.size(); }

  private:
    static std::vector<std::uint8_t> sys_periodic(const SystemModel& sys) {
        std::vector<std::uint8_t> p(sys.state_dim());
        for (std::size_t d = 0; d < sys.state_dim(); ++d) p[d] = sys.periodic(d) ? 1 : 0;
        return p;
    }

    double distance2(const Vec& a, const Vec& b) const {
        double s = 0.0;
        for (std::size_t d = 0; d < a.size(); ++d) {
            double w = box_.width(d);
            double diff = periodic_[d] ? periodic_diff(a[d], b[d], w) : a[d] - b[d];
            diff /= w;
            s += diff * diff;
        }
        return s;
    }

    std::vector<Vec> states_;
    std::vector<double> scores_;
    Box box_;
    std::vector<std::uint8_t> periodic_;
    int k_;
};

struct RegionResult {
    double lower = -kInf;  // predictor-output interval (lower, upper]
    double upper = kInf;
    VerifyResult verify;
};

struct BinnedResult {
    std::vector<double> quantile_edges;
    std::vector<RegionResult> regions;
    long long total_rollouts = 0;
    bool all_converged = false;
    std::uint64_t seed = 0;
};

/// Refined error correction: the domain is split into predictor-output
/// quantile bands and Algorithm 1 runs independently on each band (the band
/// plays the role of X, so the per-region guarantee is untouched). With one
/// effective region this reduces exactly to scenario_verify, same stream.
inline BinnedResult binned_verify(const ValueFunctionHandle& vf, const SystemModel& sys,
                                  const CostPredictor& predictor, int bins,
                                  const VerifyConfig& config, long long calibration_samples = 20000) {
    if (bins < 1) throw ConfigError("binned_verify: bins must be >= 1");
    config.validate();

    BinnedResult result;
    result.seed = config.seed;

    // Quantile edges from a calibration sample of predictor outputs.
    if (bins > 1) {
        StreamRng cal = StreamRng(config.seed).split(0xca11bull);
        std::vector<double> scores(static_cast<std::size_t>(calibration_samples));
        parallel_for(
            scores.size(),
            [&](std::size_t i) {
                Vec x = detail::propose_uniform(sys.state_box(), cal.split(i), 0);
                scores[i] = predictor.predict(x);
            },
            16);
        std::sort(scores.begin(), scores.end());
        for (int b = 1; b < bins; ++b) {
            double q = scores[static_cast<std::size_t>(scores.size() * (double(b) / bins))];
            // Collapsed bands merge: edges must strictly increase and an edge
            // at the calibration maximum would leave an empty top region.
            bool increasing = result.quantile_edges.empty() || q > result.quantile_edges.back();
            if (increasing && q < scores.back()) result.quantile_edges.push_back(q);
        }
    }

    std::vector<double> edges = result.quantile_edges;
    std::size_t n_regions = edges.size() + 1;
    result.all_converged = true;
    for (std::size_t r = 0; r < n_regions; ++r) {
        RegionResult region;
        region.lower = r == 0 ? -kInf : edges[r - 1];
        region.upper = r == edges.size() ? kInf : edges[r];
        RegionPredicate pred = nullptr;
        if (n_regions > 1) {
            double lo = region.lower, hi = region.upper;
            pred = [&predictor, lo, hi](const Vec& x) {
                double p = predictor.predict(x);
                return p > lo && p <= hi;
            };
        }
        region.verify = scenario_verify(vf, sys, config, pred, r);
        result.total_rollouts += region.verify.total_rollouts;
        result.all_converged = result.all_converged && region.verify.converged;
        result.regions.push_back(std::move(region));
    }
    return result;
}

/// Membership in the binned recovered set: locate the predictor band, then
/// apply that band's certificate.
inline bool binned_recovered_member(const ValueFunctionHandle& vf, const BinnedResult& result,
                                    const CostPredictor& predictor, const Vec& x, Mode mode) {
    std::size_t r = 0;
    if (result.regions.size() > 1) {
        double p = predictor.predict(x);
        while (r < result.quantile_edges.size() && p > result.quantile_edges[r]) ++r;
    }
    const RegionResult& region = result.regions[r];
    if (region.verify.degenerate) return false;
    return recovered_member(vf, region.verify.delta_hat, x, mode);
}

}  // namespace reachcert
