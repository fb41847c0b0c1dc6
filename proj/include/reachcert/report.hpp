#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "reachcert/validate.hpp"

namespace reachcert {

using Json = nlohmann::ordered_json;

/// JSON has no +-inf literals; sentinels round-trip them.
inline Json encode_real(double v) {
    if (v == kInf) return Json("inf");
    if (v == -kInf) return Json("-inf");
    return Json(v);
}

inline double decode_real(const Json& j) {
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        throw MalformedFileError("bad real sentinel: " + s);
    }
    return j.get<double>();
}

/// FNV-1a 64-bit over the canonical (key-sorted) dump; embedded in every
/// report so certificates and validations are traceable to their config.
inline std::string config_hash(const nlohmann::json& config) {
    std::string canon = config.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline Json to_json(const VerifyResult& r) {
    Json j;
    j["mode"] = to_string(r.mode);
    j["delta_hat"] = encode_real(r.delta_hat);
    Json deltas = Json::array();
    for (double d : r.iteration_deltas) deltas.push_back(encode_real(d));
    j["iteration_deltas"] = deltas;
    j["converged"] = r.converged;
    j["degenerate_empty_set"] = r.degenerate;
    j["iterations_run"] = r.iterations_run;
    j["samples_per_iteration"] = r.samples_per_iteration;
    j["total_rollouts"] = r.total_rollouts;
    j["seed"] = r.seed;
    Json viols = Json::array();
    for (const ViolationRecord& v : r.violating_samples) {
        Json rec;
        rec["state"] = std::vector<double>(v.state.begin(), v.state.end());
        rec["value"] = encode_real(v.value);
        rec["J"] = v.J;
        viols.push_back(rec);
    }
    j["violating_samples"] = viols;
    return j;
}

inline void verify_result_from_json(const Json& j, VerifyResult& r) {
    r.mode = j.at("mode").get<std::string>() == "reach" ? Mode::kReach : Mode::kAvoid;
    r.delta_hat = decode_real(j.at("delta_hat"));
    r.iteration_deltas.clear();
    for (const auto& d : j.at("iteration_deltas")) r.iteration_deltas.push_back(decode_real(d));
    r.converged = j.at("converged").get<bool>();
    r.degenerate = j.at("degenerate_empty_set").get<bool>();
    r.iterations_run = j.at("iterations_run").get<int>();
    r.samples_per_iteration = j.at("samples_per_iteration").get<long long>();
    r.total_rollouts = j.at("total_rollouts").get<long long>();
    r.seed = j.at("seed").get<std::uint64_t>();
}

inline Json to_json(const BinnedResult& r) {
    Json j;
    j["seed"] = r.seed;
    j["quantile_edges"] = r.quantile_edges;
    j["all_converged"] = r.all_converged;
    j["total_rollouts"] = r.total_rollouts;
    Json regions = Json::array();
    for (const RegionResult& reg : r.regions) {
        Json rj;
        rj["predictor_lower"] = encode_real(reg.lower);
        rj["predictor_upper"] = encode_real(reg.upper);
        rj["result"] = to_json(reg.verify);
        regions.push_back(rj);
    }
    j["regions"] = regions;
    return j;
}

inline Json to_json(const ValidationReport& r) {
    Json j;
    j["seed"] = r.seed;
    j["empty_recovered_set"] = r.empty_recovered_set;
    j["samples_drawn"] = r.samples_drawn;
    j["violation_count"] = r.violation_count;
    j["violation_rate"] = r.violation_rate;
    j["violation_rate_stderr"] = r.violation_rate_stderr;
    j["volume_samples"] = r.volume_samples;
    j["volume_fraction_trained"] = r.volume_fraction_trained;
    j["volume_fraction_recovered"] = r.volume_fraction_recovered;
    j["volume_stderr_trained"] = r.volume_stderr_trained;
    j["volume_stderr_recovered"] = r.volume_stderr_recovered;
    j["percent_reduction"] = r.percent_reduction;
    j["trained_volume_zero"] = r.trained_volume_zero;
    j["has_truth"] = r.has_truth;
    if (r.has_truth) {
        j["containment_samples"] = r.containment_samples;
        j["containment_violations"] = r.containment_violations;
        j["containment_rate"] = r.containment_rate;
        j["containment_outside_band"] = r.containment_outside_band;
    }
    return j;
}

inline void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw MalformedFileError("cannot open report for writing: " + path);
    out << j.dump(2) << '\n';
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedFileError("cannot open: " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedFileError("bad JSON in " + path + ": " + e.what());
    }
}

}  // namespace reachcert
