#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "simlab/model.hpp"

namespace simlab {

// Monte Carlo acceptance thresholds. Defaults follow the shipped verification
// suite; every value can be overridden from the [tolerances] config section.
struct Tolerances {
    double ci_multiplier = 3.0;     // SE multiplier for all Monte Carlo verdicts
    double slope_lo = -0.8;         // convergence-rate window for the error-decay fit
    double slope_hi = -0.3;
    double clt_rel = 0.20;          // relative window for empirical vs analytic variance
    double growth_exp_tol = 0.05;   // growth-exponent window around 4 - beta
    double longrun_gap_rel = 0.02;  // relative gap demanded of finite-horizon limits
    double ks_p_min = 0.01;         // minimum KS p-value
};

// One experiment run, fully describing its inputs. Loaded from a line-based
// `key = value` file with [sections]; every key is checked against the schema
// below and unknown keys are hard errors.
struct ExperimentConfig {
    std::string experiment;  // lln | clt | moment-bound | longrun | fou-verify |
                             // baseline-no-control | sampler-selftest
    ModelParams params;
    Policy policy = Policy::linear(1.0);
    double horizon = 5.0;
    double step = 0.0025;  // analytic grid resolution (fluid, covariance, time change)
    std::vector<long> n_ladder{8, 16, 32, 64};
    std::size_t replications = 200;
    std::uint64_t base_seed = 20240915;
    std::string out_dir = "out";
    Tolerances tol;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, const std::string& key, int line) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = std::string::npos;
    }
    if (pos != v.size())
        throw validation_error("config line " + std::to_string(line) + ": key `" + key +
                               "`: not a number: " + v);
    return x;
}

inline long parse_long(const std::string& v, const std::string& key, int line) {
    std::size_t pos = 0;
    long x = 0;
    try {
        x = std::stol(v, &pos);
    } catch (const std::exception&) {
        pos = std::string::npos;
    }
    if (pos != v.size())
        throw validation_error("config line " + std::to_string(line) + ": key `" + key +
                               "`: not an integer: " + v);
    return x;
}

inline std::vector<long> parse_long_list(const std::string& v, const std::string& key,
                                         int line) {
    std::vector<long> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_long(trim(item), key, line));
    if (out.empty())
        throw validation_error("config line " + std::to_string(line) + ": key `" + key +
                               "`: empty list");
    return out;
}

}  // namespace detail

inline bool known_experiment(const std::string& e) {
    return e == "lln" || e == "clt" || e == "moment-bound" || e == "longrun" ||
           e == "fou-verify" || e == "baseline-no-control" || e == "sampler-selftest";
}

/*
 * Grammar: `#` starts a comment (whole line or trailing), blank lines are
 * skipped, `[section]` opens a section, `key = value` assigns. Sections and
 * keys: top level `experiment`; [model] beta theta alpha b d n;
 * [policy] kind c c1 c2; [run] horizon step n_ladder replications
 * base_seed out_dir; [tolerances] ci_multiplier slope_lo slope_hi clt_rel
 * growth_exp_tol longrun_gap_rel ks_p_min. n_ladder is a comma list.
 */
inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("config: cannot open " + path);

    ExperimentConfig cfg;
    // policy assembled at the end so kind/c/c1/c2 may appear in any order
    std::string policy_kind = "linear";
    double pc = 1.0, pc1 = 1.0, pc2 = 0.5;

    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw validation_error("config line " + std::to_string(lineno) +
                                       ": malformed section header: " + line);
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "model" && section != "policy" && section != "run" &&
                section != "tolerances")
                throw validation_error("config line " + std::to_string(lineno) +
                                       ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw validation_error("config line " + std::to_string(lineno) +
                                   ": expected `key = value`: " + line);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw validation_error("config line " + std::to_string(lineno) +
                                   ": empty key or value");

        auto unknown = [&]() {
            throw validation_error("config line " + std::to_string(lineno) +
                                   ": unknown key `" + key + "` in section [" +
                                   (section.empty() ? "top level" : section) + "]");
        };

        if (section.empty()) {
            if (key == "experiment") {
                if (!known_experiment(val))
                    throw validation_error("config line " + std::to_string(lineno) +
                                           ": unknown experiment `" + val + "`");
                cfg.experiment = val;
            } else {
                unknown();
            }
        } else if (section == "model") {
            if (key == "beta") cfg.params.beta = detail::parse_double(val, key, lineno);
            else if (key == "theta") cfg.params.theta = detail::parse_double(val, key, lineno);
            else if (key == "alpha") cfg.params.alpha = detail::parse_double(val, key, lineno);
            else if (key == "b") cfg.params.b = detail::parse_double(val, key, lineno);
            else if (key == "d") cfg.params.d = static_cast<int>(detail::parse_long(val, key, lineno));
            else if (key == "n") cfg.params.n = detail::parse_long(val, key, lineno);
            else unknown();
        } else if (section == "policy") {
            if (key == "kind") policy_kind = val;
            else if (key == "c") pc = detail::parse_double(val, key, lineno);
            else if (key == "c1") pc1 = detail::parse_double(val, key, lineno);
            else if (key == "c2") pc2 = detail::parse_double(val, key, lineno);
            else unknown();
        } else if (section == "run") {
            if (key == "horizon") cfg.horizon = detail::parse_double(val, key, lineno);
            else if (key == "step") cfg.step = detail::parse_double(val, key, lineno);
            else if (key == "n_ladder") cfg.n_ladder = detail::parse_long_list(val, key, lineno);
            else if (key == "replications")
                cfg.replications = static_cast<std::size_t>(detail::parse_long(val, key, lineno));
            else if (key == "base_seed")
                cfg.base_seed = static_cast<std::uint64_t>(detail::parse_long(val, key, lineno));
            else if (key == "out_dir") cfg.out_dir = val;
            else unknown();
        } else {  // tolerances
            if (key == "ci_multiplier") cfg.tol.ci_multiplier = detail::parse_double(val, key, lineno);
            else if (key == "slope_lo") cfg.tol.slope_lo = detail::parse_double(val, key, lineno);
            else if (key == "slope_hi") cfg.tol.slope_hi = detail::parse_double(val, key, lineno);
            else if (key == "clt_rel") cfg.tol.clt_rel = detail::parse_double(val, key, lineno);
            else if (key == "growth_exp_tol")
                cfg.tol.growth_exp_tol = detail::parse_double(val, key, lineno);
            else if (key == "longrun_gap_rel")
                cfg.tol.longrun_gap_rel = detail::parse_double(val, key, lineno);
            else if (key == "ks_p_min") cfg.tol.ks_p_min = detail::parse_double(val, key, lineno);
            else unknown();
        }
    }

    if (policy_kind == "linear") cfg.policy = Policy::linear(pc);
    else if (policy_kind == "linear-plus-tanh") cfg.policy = Policy::linear_plus_tanh(pc1, pc2);
    else if (policy_kind == "zero") cfg.policy = Policy::zero();
    else throw validation_error("config: unknown policy kind `" + policy_kind + "`");

    try {
        validate_params(cfg.params);
    } catch (const validation_error& e) {
        throw validation_error("config [model]: " + std::string(e.what()));
    }
    if (!(cfg.horizon > 0.0)) throw validation_error("config [run]: horizon not positive");
    if (!(cfg.step > 0.0) || cfg.step > cfg.horizon)
        throw validation_error("config [run]: step must lie in (0, horizon]");
    if (cfg.replications < 2) throw validation_error("config [run]: replications below 2");
    for (std::size_t i = 0; i + 1 < cfg.n_ladder.size(); ++i)
        if (cfg.n_ladder[i] >= cfg.n_ladder[i + 1])
            throw validation_error("config [run]: n_ladder not strictly increasing");
    for (long nv : cfg.n_ladder)
        if (nv < 1) throw validation_error("config [run]: n_ladder entries must be >= 1");
    return cfg;
}

}  // namespace simlab
