#pragma once

// Flat `key = value` run configuration. Unknown keys are a hard error so a
// typo never silently falls back to a default. `#` starts a comment line.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "tyfo/errors.hpp"
#include "tyfo/model.hpp"
#include "tyfo/train.hpp"

namespace tyfo {

struct RunConfig {
    std::string data_path;
    std::string prompt_cache_path;     // optional import
    std::string embedding_cache_path;  // optional import
    std::string checkpoint_path = "model.tyfo";
    std::string report_path = "train_report.csv";
    std::string metrics_path = "metrics.csv";

    ModelConfig model;
    TrainConfig train;

    int train_year_from = 2004;
    int train_year_to = 2021;
    int test_year_from = 2022;
    int test_year_to = 2024;
};

namespace detail {

inline std::string strip_copy(const std::string& s) {
    auto sv = strip(s);
    return std::string(sv);
}

inline int to_int(const std::string& v, const std::string& key) {
    int out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("key '" + key + "': bad integer '" + v + "'");
    return out;
}

inline uint64_t to_u64(const std::string& v, const std::string& key) {
    uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("key '" + key + "': bad integer '" + v + "'");
    return out;
}

inline double to_double(const std::string& v, const std::string& key) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("key '" + key + "': bad number '" + v + "'");
    return out;
}

inline bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + key + "': bad bool '" + v + "'");
}

inline void parse_year_range(const std::string& v, const std::string& key, int& from, int& to) {
    size_t dash = v.find('-');
    if (dash == std::string::npos) throw ConfigError("key '" + key + "': expected YYYY-YYYY");
    from = to_int(v.substr(0, dash), key);
    to = to_int(v.substr(dash + 1), key);
    if (from > to) throw ConfigError("key '" + key + "': range is backwards");
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    RunConfig c;
    std::string line;
    int line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string t = detail::strip_copy(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        std::string key = detail::strip_copy(t.substr(0, eq));
        std::string val = detail::strip_copy(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");

        if (key == "data") c.data_path = val;
        else if (key == "prompt_cache") c.prompt_cache_path = val;
        else if (key == "embedding_cache") c.embedding_cache_path = val;
        else if (key == "checkpoint") c.checkpoint_path = val;
        else if (key == "report") c.report_path = val;
        else if (key == "metrics") c.metrics_path = val;
        else if (key == "d_txt") c.model.d_txt = detail::to_int(val, key);
        else if (key == "d_model") c.model.d_model = detail::to_int(val, key);
        else if (key == "n_layers") c.model.n_layers = detail::to_int(val, key);
        else if (key == "n_heads") c.model.n_heads = detail::to_int(val, key);
        else if (key == "d_ff") c.model.d_ff = detail::to_int(val, key);
        else if (key == "history_length") c.model.history_len = detail::to_int(val, key);
        else if (key == "horizons") c.model.horizons = detail::to_int(val, key);
        else if (key == "layer_norm_eps") c.model.layer_norm_eps = detail::to_double(val, key);
        else if (key == "positional_encoding") c.model.positional_encoding = detail::to_bool(val, key);
        else if (key == "prompt_mode") {
            if (val == "last") c.model.prompt_mode = PromptMode::kLast;
            else if (val == "per_step") c.model.prompt_mode = PromptMode::kPerStep;
            else throw ConfigError("prompt_mode must be 'last' or 'per_step'");
        }
        else if (key == "lr") c.train.lr = detail::to_double(val, key);
        else if (key == "beta1") c.train.beta1 = detail::to_double(val, key);
        else if (key == "beta2") c.train.beta2 = detail::to_double(val, key);
        else if (key == "adam_eps") c.train.adam_eps = detail::to_double(val, key);
        else if (key == "batch_size") c.train.batch_size = detail::to_int(val, key);
        else if (key == "epochs") c.train.epochs = detail::to_int(val, key);
        else if (key == "seed") c.train.seed = detail::to_u64(val, key);
        else if (key == "grad_clip_norm") c.train.grad_clip_norm = detail::to_double(val, key);
        else if (key == "checkpoint_every") c.train.checkpoint_every = detail::to_int(val, key);
        else if (key == "train_years") detail::parse_year_range(val, key, c.train_year_from, c.train_year_to);
        else if (key == "test_years") detail::parse_year_range(val, key, c.test_year_from, c.test_year_to);
        else throw ConfigError("unknown key '" + key + "'");
    }
    c.train.checkpoint_path = c.checkpoint_path;
    return c;
}

// TYFO_SEED, when set, overrides the configured seed.
inline void apply_seed_override(RunConfig& c) {
    if (const char* env = std::getenv("TYFO_SEED")) {
        c.train.seed = detail::to_u64(env, "TYFO_SEED");
    }
}

}  // namespace tyfo
