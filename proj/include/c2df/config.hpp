#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "c2df/core.hpp"
#include "c2df/denoiser.hpp"

namespace c2df {

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

inline double parse_real(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw Error("");
        return d;
    } catch (...) {
        throw Error("config: bad number for " + key + ": '" + v + "'");
    }
}

inline int parse_int(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        int i = std::stoi(v, &pos);
        if (pos != v.size()) throw Error("");
        return i;
    } catch (...) {
        throw Error("config: bad integer for " + key + ": '" + v + "'");
    }
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error("config: bad boolean for " + key + ": '" + v + "'");
}

}  // namespace detail

inline std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
    std::vector<int> out;
    for (const auto& tok : detail::split(v, ','))
        if (!tok.empty()) out.push_back(detail::parse_int(tok, key));
    require(!out.empty(), "config: empty list for " + key);
    return out;
}

inline std::vector<double> parse_real_list(const std::string& v, const std::string& key) {
    std::vector<double> out;
    for (const auto& tok : detail::split(v, ','))
        if (!tok.empty()) out.push_back(detail::parse_real(tok, key));
    require(!out.empty(), "config: empty list for " + key);
    return out;
}

// rho_table entries look like "0:0,50:0.5" (sigma:share pairs).
inline std::vector<RhoPoint> parse_rho_table(const std::string& v) {
    std::vector<RhoPoint> table;
    for (const auto& tok : detail::split(v, ',')) {
        if (tok.empty()) continue;
        const auto parts = detail::split(tok, ':');
        require(parts.size() == 2, "config: rho_table entries must be sigma:share pairs");
        table.push_back({detail::parse_real(parts[0], "rho_table"),
                         detail::parse_real(parts[1], "rho_table")});
    }
    require(!table.empty(), "config: empty rho_table");
    return table;
}

// Applies one key=value setting; returns false for keys this config does not
// own (callers with a wider schema, like the bench manifest, handle those).
inline bool apply_config_kv(DenoiseConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "patch_sizes") cfg.patch_sizes = parse_int_list(value, key);
    else if (key == "gamma") cfg.gamma = parse_real_list(value, key);
    else if (key == "epsilon") cfg.epsilon = detail::parse_real(value, key);
    else if (key == "max_neighbors") cfg.max_neighbors = detail::parse_int(value, key);
    else if (key == "window_radius") cfg.window_radius = detail::parse_int(value, key);
    else if (key == "full_search_max_pixels") cfg.full_search_max_pixels = detail::parse_int(value, key);
    else if (key == "beta") cfg.beta = detail::parse_real(value, key);
    else if (key == "overcompleteness") cfg.overcompleteness = detail::parse_real(value, key);
    else if (key == "p") cfg.p = detail::parse_real(value, key);
    else if (key == "branch_width") cfg.branch_width = detail::parse_int(value, key);
    else if (key == "max_support") cfg.max_support = detail::parse_int(value, key);
    else if (key == "delta_log") cfg.delta_log = detail::parse_real(value, key);
    else if (key == "lambda_min") cfg.lambda_min = detail::parse_real(value, key);
    else if (key == "collaborate") cfg.collaborate = detail::parse_bool(value, key);
    else if (key == "sigma") cfg.sigma_w = detail::parse_real(value, key);
    else if (key == "postprocess") cfg.postprocess_enabled = detail::parse_bool(value, key);
    else if (key == "zeta") cfg.zeta = detail::parse_real(value, key);
    else if (key == "num_bins") cfg.postproc.num_bins = detail::parse_int(value, key);
    else if (key == "min_region") cfg.postproc.min_region = detail::parse_int(value, key);
    else if (key == "rho_table") cfg.postproc.rho_table = parse_rho_table(value);
    else if (key == "debug_dir") cfg.debug_dir = value;
    else return false;
    return true;
}

// Flat key=value file; '#' starts a comment, blank lines are skipped.
inline void load_config_file(const std::string& path, DenoiseConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        require(eq != std::string::npos,
                "config: missing '=' at " + path + ":" + std::to_string(lineno));
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        require(apply_config_kv(cfg, key, value),
                "config: unknown key '" + key + "' at " + path + ":" + std::to_string(lineno));
    }
}

// One benchmark noise point: either an absolute sigma or an SNR target.
struct NoisePoint {
    bool is_snr = false;
    double value = 0.0;
};

// Grid description for the bench command: images x noise points, plus any
// denoiser settings, all in the same key=value format as config files.
struct RunManifest {
    std::vector<std::string> images;
    std::vector<NoisePoint> noise;
    uint64_t seed = 1;
    std::string out_dir;
    bool emit_images = false;
    DenoiseConfig cfg;
};

inline RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest: " + path);
    RunManifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        require(eq != std::string::npos,
                "manifest: missing '=' at " + path + ":" + std::to_string(lineno));
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key == "image") {
            m.images.push_back(value);
        } else if (key == "images") {
            for (const auto& v : detail::split(value, ','))
                if (!v.empty()) m.images.push_back(v);
        } else if (key == "sigmas") {
            for (double s : parse_real_list(value, key)) m.noise.push_back({false, s});
        } else if (key == "snrs_db") {
            for (double s : parse_real_list(value, key)) m.noise.push_back({true, s});
        } else if (key == "seed") {
            m.seed = static_cast<uint64_t>(detail::parse_int(value, key));
        } else if (key == "out_dir") {
            m.out_dir = value;
        } else if (key == "emit_images") {
            m.emit_images = detail::parse_bool(value, key);
        } else if (!apply_config_kv(m.cfg, key, value)) {
            throw Error("manifest: unknown key '" + key + "' at " + path + ":" +
                        std::to_string(lineno));
        }
    }
    require(!m.images.empty(), "manifest lists no images");
    require(!m.noise.empty(), "manifest lists no sigmas/snrs_db");
    return m;
}

}  // namespace c2df
