#include "relpose/runconfig.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "relpose/errors.hpp"

namespace relpose::cli {

const std::vector<std::string>& RunConfig::known_keys() {
    static const std::vector<std::string> keys = {
        "scene.source",    // synth | jsonl | 7scenes | cambridge
        "scene.path",
        "scene.descriptors",
        "synth.num_sequences",
        "synth.frames_per_sequence",
        "synth.workspace_extent",
        "synth.descriptor_dim",
        "synth.descriptor_noise_sigma",
        "synth.aliasing_fraction",
        "synth.aliasing_pair_min_distance",
        "synth.test_fraction",
        "model.input_dim",
        "model.hidden_dims",
        "model.feature_dim",
        "model.dropout_rate",
        "model.head_hidden",
        "model.with_rpru",
        "train.combination",
        "train.learning_rate",
        "train.adam_beta1",
        "train.adam_beta2",
        "train.weight_decay",
        "train.batch_size",
        "train.max_epochs",
        "train.convergence_window",
        "train.convergence_threshold",
        "train.pairing",
        "train.random_within_sequence_only",
        "train.global_both_frames",
        "train.alpha",
        "train.margin",
        "ablate.combinations",
        "ablate.seeds",
        "eval.checkpoint",
        "eval.predictions",
        "gradcheck.points",
    };
    return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
        throw Error("unknown config key: " + key);
    values_[key] = value;
}

RunConfig RunConfig::from_string(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto b2 = s.find_first_not_of(" \t");
            if (b2 == std::string::npos) return std::string();
            const auto e2 = s.find_last_not_of(" \t");
            return s.substr(b2, e2 - b2 + 1);
        };
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw Error("");
        return v;
    } catch (...) {
        throw Error("config key " + key + ": not a number: " + it->second);
    }
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw Error("");
        return v;
    } catch (...) {
        throw Error("config key " + key + ": not an integer: " + it->second);
    }
}

std::uint64_t RunConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
    const std::int64_t v = get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw Error("config key " + key + ": must be non-negative");
    return static_cast<std::uint64_t>(v);
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw Error("config key " + key + ": not a boolean: " + it->second);
}

std::vector<std::string> RunConfig::get_list(const std::string& key,
                                             const std::vector<std::string>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::string> out;
    std::istringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

}  // namespace relpose::cli
