#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "reachcert/analytic_benchmarks.hpp"
#include "reachcert/hjb_solver.hpp"
#include "reachcert/report.hpp"
#include "reachcert/siren.hpp"

namespace reachcert {

inline constexpr int kConfigSchemaVersion = 1;

/// Parsed run configuration (see configs/ for examples). Schema:
///
///   {
///     "schema_version": 1,
///     "system": {"name", "params": {...}, "mode"?, "horizon"?,
///                "state_lower"?, "state_upper"?},
///     "value_function": {"grid_file" | "weights_file" | "analytic",
///                        "perturb"?: {"kind": "uniform_bias", "c": ...} |
///                                    {"kind": "bump", "center": [...],
///                                     "radius": ..., "amplitude": ...}},
///     "groundtruth"?: {"nodes": [...], "cfl"?, "dt"?, "stored_slices"?},
///     "verify"?: {"epsilon", "beta", "samples"?, "max_iterations"?, "seed",
///                 "dt"?, "bins"?, "predictor"?: {"train_samples"?, "seed"?,
///                 "k"?, "scored_points_file"?}},
///     "validate"?: {"samples", "seed", "volume_samples"?,
///                   "truth_grid_file"?, "containment_samples"?,
///                   "histogram_edges"?, "slices"?: [{"x_dim", "y_dim",
///                   "fixed": [...], "nx"?, "ny"?}]},
///     "output_dir"?: "out"
///   }
struct RunConfig {
    nlohmann::json raw;  // canonical echo for hashing
    std::string hash;

    SystemPtr system;

    // value function source (exactly one)
    std::string grid_file;
    std::string weights_file;
    std::string analytic_name;
    Json perturb_spec;

    // groundtruth block
    std::vector<int> gt_nodes;
    SolveOptions gt_options;

    VerifyConfig verify;
    int bins = 1;
    long long predictor_train_samples = 8192;
    std::uint64_t predictor_seed = 0;  // 0: derive from verify seed
    int predictor_k = 16;
    std::string scored_points_file;

    long long validate_samples = 100000;
    std::uint64_t validate_seed = 0;
    long long volume_samples = 100000;
    long long containment_samples = 0;  // 0: use validate_samples
    std::string truth_grid_file;
    std::vector<double> histogram_edges;
    struct SliceSpec {
        std::size_t x_dim = 0, y_dim = 1;
        Vec fixed;
        int nx = 101, ny = 101;
    };
    std::vector<SliceSpec> slices;

    std::string output_dir = "out";
};

namespace detail {

inline double get_num(const nlohmann::json& j, const std::string& key, double fallback,
                      bool required = false) {
    if (!j.contains(key)) {
        if (required) throw ConfigError("config: missing required field '" + key + "'");
        return fallback;
    }
    if (!j.at(key).is_number()) throw ConfigError("config: field '" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline Vec get_vec(const nlohmann::json& j, const std::string& key) {
    Vec v;
    for (const auto& e : j.at(key)) v.push_back(e.get<double>());
    return v;
}

}  // namespace detail

inline SystemPtr make_system(const nlohmann::json& sys_block) {
    if (!sys_block.contains("name")) throw ConfigError("config: system.name is required");
    std::string name = sys_block.at("name").get<std::string>();
    nlohmann::json params = sys_block.value("params", nlohmann::json::object());

    SystemOverrides ov;
    ov.horizon = detail::get_num(sys_block, "horizon", 0.0);
    if (sys_block.contains("state_lower") != sys_block.contains("state_upper"))
        throw ConfigError("config: state_lower/state_upper must be given together");
    if (sys_block.contains("state_lower")) {
        ov.state_box.lower = detail::get_vec(sys_block, "state_lower");
        ov.state_box.upper = detail::get_vec(sys_block, "state_upper");
    }

    std::string mode_str = sys_block.value("mode", "");
    auto parse_mode = [&](Mode fallback) {
        if (mode_str.empty()) return fallback;
        if (mode_str == "avoid") return Mode::kAvoid;
        if (mode_str == "reach") return Mode::kReach;
        throw ConfigError("config: mode must be 'avoid' or 'reach'");
    };

    try {
        if (name == "dubins3d") {
            return dubins3d_system(detail::get_num(params, "v", 0.6),
                                   detail::get_num(params, "u_min", -1.1),
                                   detail::get_num(params, "u_max", 1.1),
                                   detail::get_num(params, "R", 0.25), parse_mode(Mode::kAvoid), ov);
        }
        if (name == "multivehicle9d") {
            if (parse_mode(Mode::kAvoid) != Mode::kAvoid)
                throw ConfigError("config: multivehicle9d is an avoid problem");
            return multivehicle9d_system(detail::get_num(params, "v", 0.6),
                                         detail::get_num(params, "u_min", -1.1),
                                         detail::get_num(params, "u_max", 1.1),
                                         detail::get_num(params, "R", 0.25), ov);
        }
        if (name == "rocket6d") {
            if (parse_mode(Mode::kReach) != Mode::kReach)
                throw ConfigError("config: rocket6d is a reach problem");
            return rocket6d_system(detail::get_num(params, "tau_bound", 250.0),
                                   detail::get_num(params, "g", 9.81), ov);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    throw ConfigError("config: unknown system '" + name + "'");
}

/// Builds the candidate value function named by the config, including the
/// optional perturbation wrapper.
inline VfPtr make_value_function(const RunConfig& cfg) {
    // File existence is checked here, not at config load: the groundtruth
    // command may legitimately point value_function at its own future output.
    for (const std::string& f : {cfg.grid_file, cfg.weights_file})
        if (!f.empty() && !std::filesystem::exists(f))
            throw ConfigError("config: referenced file does not exist: " + f);
    VfPtr handle;
    if (!cfg.grid_file.empty()) {
        handle = make_grid_handle(GridValueFunction::load(cfg.grid_file));
    } else if (!cfg.weights_file.empty()) {
        std::vector<std::uint8_t> periodic(cfg.system->state_dim());
        for (std::size_t d = 0; d < periodic.size(); ++d)
            periodic[d] = cfg.system->periodic(d) ? 1 : 0;
        handle = load_network(cfg.weights_file, periodic);
        if (handle->domain().dim() != cfg.system->state_dim())
            throw ConfigError("config: weights file dimension does not match the system");
    } else if (cfg.analytic_name == "multivehicle_coast") {
        handle = multivehicle_coast_handle(cfg.system);
    } else if (cfg.analytic_name == "rocket_ballistic") {
        handle = rocket_ballistic_handle(cfg.system);
    } else if (cfg.analytic_name == "target_function") {
        handle = target_function_handle(cfg.system);
    } else {
        throw ConfigError("config: unknown analytic value function '" + cfg.analytic_name + "'");
    }

    if (!cfg.perturb_spec.is_null()) {
        std::string kind = cfg.perturb_spec.at("kind").get<std::string>();
        if (kind == "uniform_bias") {
            handle = perturb_uniform_bias(handle, cfg.perturb_spec.at("c").get<double>());
        } else if (kind == "bump") {
            Vec center;
            for (const auto& e : cfg.perturb_spec.at("center")) center.push_back(e.get<double>());
            handle = perturb_localized_bump(handle, center,
                                            cfg.perturb_spec.at("radius").get<double>(),
                                            cfg.perturb_spec.at("amplitude").get<double>());
        } else {
            throw ConfigError("config: unknown perturbation kind '" + kind + "'");
        }
    }
    return handle;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }

    RunConfig cfg;
    cfg.raw = j;
    cfg.hash = config_hash(j);
    if (j.value("schema_version", 0) != kConfigSchemaVersion)
        throw ConfigError("config: schema_version must be " + std::to_string(kConfigSchemaVersion));
    if (!j.contains("system")) throw ConfigError("config: missing system block");
    cfg.system = make_system(j.at("system"));

    const auto vf = j.value("value_function", nlohmann::json::object());
    int sources = 0;
    if (vf.contains("grid_file")) ++sources, cfg.grid_file = vf.at("grid_file").get<std::string>();
    if (vf.contains("weights_file"))
        ++sources, cfg.weights_file = vf.at("weights_file").get<std::string>();
    if (vf.contains("analytic")) ++sources, cfg.analytic_name = vf.at("analytic").get<std::string>();
    if (sources != 1)
        throw ConfigError("config: value_function needs exactly one of grid_file / weights_file / analytic");
    if (vf.contains("perturb")) cfg.perturb_spec = vf.at("perturb");

    if (j.contains("groundtruth")) {
        const auto& gt = j.at("groundtruth");
        for (const auto& e : gt.at("nodes")) cfg.gt_nodes.push_back(e.get<int>());
        cfg.gt_options.cfl = detail::get_num(gt, "cfl", 0.8);
        cfg.gt_options.dt = detail::get_num(gt, "dt", 0.0);
        cfg.gt_options.target_slices = static_cast<int>(detail::get_num(gt, "stored_slices", 33));
    }

    if (j.contains("verify")) {
        const auto& v = j.at("verify");
        cfg.verify.epsilon = detail::get_num(v, "epsilon", 1e-3);
        cfg.verify.beta = detail::get_num(v, "beta", 1e-16);
        cfg.verify.samples = static_cast<long long>(detail::get_num(v, "samples", 0));
        cfg.verify.max_iterations = static_cast<int>(detail::get_num(v, "max_iterations", 20));
        cfg.verify.seed = static_cast<std::uint64_t>(detail::get_num(v, "seed", 1));
        cfg.verify.dt = detail::get_num(v, "dt", 0.0);
        cfg.verify.max_rejection_factor =
            static_cast<long long>(detail::get_num(v, "max_rejection_factor", 10000));
        cfg.bins = static_cast<int>(detail::get_num(v, "bins", 1));
        if (v.contains("predictor")) {
            const auto& p = v.at("predictor");
            cfg.predictor_train_samples =
                static_cast<long long>(detail::get_num(p, "train_samples", 8192));
            cfg.predictor_seed = static_cast<std::uint64_t>(detail::get_num(p, "seed", 0));
            cfg.predictor_k = static_cast<int>(detail::get_num(p, "k", 16));
            cfg.scored_points_file = p.value("scored_points_file", "");
        }
    }

    if (j.contains("validate")) {
        const auto& v = j.at("validate");
        cfg.validate_samples = static_cast<long long>(detail::get_num(v, "samples", 100000));
        cfg.validate_seed = static_cast<std::uint64_t>(detail::get_num(v, "seed", 0));
        cfg.volume_samples =
            static_cast<long long>(detail::get_num(v, "volume_samples", cfg.validate_samples));
        cfg.containment_samples =
            static_cast<long long>(detail::get_num(v, "containment_samples", 0));
        cfg.truth_grid_file = v.value("truth_grid_file", "");
        if (v.contains("histogram_edges"))
            for (const auto& e : v.at("histogram_edges")) cfg.histogram_edges.push_back(e.get<double>());
        if (v.contains("slices")) {
            for (const auto& s : v.at("slices")) {
                RunConfig::SliceSpec spec;
                spec.x_dim = static_cast<std::size_t>(detail::get_num(s, "x_dim", 0));
                spec.y_dim = static_cast<std::size_t>(detail::get_num(s, "y_dim", 1));
                spec.fixed = detail::get_vec(s, "fixed");
                spec.nx = static_cast<int>(detail::get_num(s, "nx", 101));
                spec.ny = static_cast<int>(detail::get_num(s, "ny", 101));
                if (spec.fixed.size() != cfg.system->state_dim())
                    throw ConfigError("config: slice 'fixed' must list all state coordinates");
                cfg.slices.push_back(spec);
            }
        }
    }

    cfg.output_dir = j.value("output_dir", "out");

    // Disjoint seeds keep validation independent of certification.
    if (cfg.validate_seed == 0) cfg.validate_seed = cfg.verify.seed + 1000003ull;
    if (cfg.validate_seed == cfg.verify.seed)
        throw ConfigError("config: validate.seed must differ from verify.seed");
    if (cfg.predictor_seed == 0) cfg.predictor_seed = cfg.verify.seed + 7777ull;

    try {
        cfg.verify.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

}  // namespace reachcert
