#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "estimate.hpp"
#include "format.hpp"
#include "study.hpp"

namespace rieszboost {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A simulation run: the study itself plus where to write its reports.
struct RunConfig {
    StudyConfig study;
    double ase_delta = 1.0;
    double lase_delta = 1.0;
    double lase_threshold = 0.0;
    std::string out_csv = "study.csv";
    std::string out_markdown = "study.md";
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline double config_double(const std::string& key, const std::string& value) {
    try {
        return parse_double(value, "config");
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse number '" + value + "'");
    }
}

inline long long config_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse integer '" + value + "'");
    }
}

inline bool config_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" + value + "'");
}

inline std::vector<double> config_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& tok : split_list(value)) {
        out.push_back(config_double(key, tok));
    }
    return out;
}

inline std::vector<int> config_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const auto& tok : split_list(value)) {
        out.push_back(static_cast<int>(config_int(key, tok)));
    }
    return out;
}

}  // namespace detail

/// Parse a key = value config file. Lines starting with # and blank lines
/// are skipped; every key must be one of the documented keys, and errors
/// name the offending key.
inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }

    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value, got '" + stripped + "'");
        }
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        if (kv.count(key)) {
            throw ConfigError("config key '" + key + "' appears more than once");
        }
        kv[key] = value;
    }

    static const std::set<std::string> known{
        "dgp",           "functionals",        "methods",
        "n",             "n_sims",             "base_seed",
        "split_fraction", "cv_folds",          "two_fold",
        "ase.delta",     "lase.delta",         "lase.threshold",
        "grid.learning_rates", "grid.n_iterations", "grid.max_depths",
        "grid.min_samples_leaf", "kde.joint_bandwidths", "kde.marginal_bandwidths",
        "clip.propensity", "clip.density_floor", "propensity.cv_metric",
        "out.csv", "out.markdown"};
    for (const auto& [key, value] : kv) {
        if (!known.count(key)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }

    RunConfig cfg;
    auto get = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };

    if (const auto* v = get("dgp")) {
        try {
            cfg.study.dgp = parse_dgp(*v);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config key 'dgp': ") + e.what());
        }
    }
    if (const auto* v = get("n")) cfg.study.n = static_cast<std::size_t>(detail::config_int("n", *v));
    if (const auto* v = get("n_sims")) {
        cfg.study.n_sims = static_cast<std::size_t>(detail::config_int("n_sims", *v));
    }
    if (const auto* v = get("base_seed")) {
        cfg.study.base_seed = static_cast<std::uint64_t>(detail::config_int("base_seed", *v));
    }
    if (const auto* v = get("split_fraction")) {
        cfg.study.estimator.split_fraction = detail::config_double("split_fraction", *v);
    }
    if (const auto* v = get("cv_folds")) {
        cfg.study.estimator.cv_folds = static_cast<int>(detail::config_int("cv_folds", *v));
    }
    if (const auto* v = get("two_fold")) {
        cfg.study.estimator.two_fold = detail::config_bool("two_fold", *v);
    }
    if (const auto* v = get("ase.delta")) cfg.ase_delta = detail::config_double("ase.delta", *v);
    if (const auto* v = get("lase.delta")) cfg.lase_delta = detail::config_double("lase.delta", *v);
    if (const auto* v = get("lase.threshold")) {
        cfg.lase_threshold = detail::config_double("lase.threshold", *v);
    }

    {
        std::vector<double> lrs{0.001, 0.01, 0.1, 0.25};
        std::vector<int> iters{10, 30, 50, 75, 100, 150, 200};
        std::vector<int> depths{3, 5, 7};
        int min_leaf = 5;
        if (const auto* v = get("grid.learning_rates")) {
            lrs = detail::config_double_list("grid.learning_rates", *v);
        }
        if (const auto* v = get("grid.n_iterations")) {
            iters = detail::config_int_list("grid.n_iterations", *v);
        }
        if (const auto* v = get("grid.max_depths")) {
            depths = detail::config_int_list("grid.max_depths", *v);
        }
        if (const auto* v = get("grid.min_samples_leaf")) {
            min_leaf = static_cast<int>(detail::config_int("grid.min_samples_leaf", *v));
        }
        try {
            cfg.study.estimator.grid = make_grid(lrs, iters, depths, min_leaf);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config key 'grid.*': ") + e.what());
        }
    }
    if (const auto* v = get("kde.joint_bandwidths")) {
        cfg.study.estimator.kde_joint_bandwidths =
            detail::config_double_list("kde.joint_bandwidths", *v);
    }
    if (const auto* v = get("kde.marginal_bandwidths")) {
        cfg.study.estimator.kde_marginal_bandwidths =
            detail::config_double_list("kde.marginal_bandwidths", *v);
    }
    if (const auto* v = get("clip.propensity")) {
        cfg.study.estimator.propensity_clip = detail::config_double("clip.propensity", *v);
    }
    if (const auto* v = get("clip.density_floor")) {
        cfg.study.estimator.density_floor = detail::config_double("clip.density_floor", *v);
    }
    if (const auto* v = get("out.csv")) cfg.out_csv = *v;
    if (const auto* v = get("out.markdown")) cfg.out_markdown = *v;

    if (const auto* v = get("functionals")) {
        cfg.study.functionals.clear();
        for (const auto& name : detail::split_list(*v)) {
            try {
                cfg.study.functionals.push_back(
                    parse_functional(name, name == "ase" ? cfg.ase_delta : cfg.lase_delta,
                                     cfg.lase_threshold));
            } catch (const std::exception& e) {
                throw ConfigError(std::string("config key 'functionals': ") + e.what());
            }
        }
    }
    if (const auto* v = get("methods")) {
        cfg.study.methods.clear();
        for (const auto& name : detail::split_list(*v)) {
            try {
                cfg.study.methods.push_back(parse_method(name));
            } catch (const std::exception& e) {
                throw ConfigError(std::string("config key 'methods': ") + e.what());
            }
        }
    }
    if (cfg.study.functionals.empty()) {
        cfg.study.functionals =
            cfg.study.dgp == DgpKind::binary
                ? std::vector<FunctionalSpec>{FunctionalSpec::ate(), FunctionalSpec::att()}
                : std::vector<FunctionalSpec>{FunctionalSpec::ase(cfg.ase_delta),
                                              FunctionalSpec::lase(cfg.lase_delta,
                                                                   cfg.lase_threshold)};
    }
    return cfg;
}

}  // namespace rieszboost
