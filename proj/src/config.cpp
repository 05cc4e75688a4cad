#include "unpaired_sr/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace unpaired_sr {

namespace {

enum class Kind { integer, real, boolean, string };

struct Value {
    Kind kind;
    std::string text;  ///< unquoted for strings
    std::string where;
};

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::integer: return "integer";
        case Kind::real: return "number";
        case Kind::boolean: return "boolean";
        case Kind::string: return "string";
    }
    return "?";
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool is_integer(const std::string& t) {
    int64_t v = 0;
    const auto* end = t.data() + t.size();
    auto [p, ec] = std::from_chars(t.data(), end, v);
    return ec == std::errc() && p == end;
}

bool is_real(const std::string& t) {
    double v = 0;
    const auto* end = t.data() + t.size();
    auto [p, ec] = std::from_chars(t.data(), end, v);
    return ec == std::errc() && p == end;
}

/// `bare_strings` lets command-line overrides omit the quotes.
Value classify(const std::string& raw, const std::string& where, bool bare_strings) {
    const auto t = trim(raw);
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"') return {Kind::string, t.substr(1, t.size() - 2), where};
    if (t == "true" || t == "false") return {Kind::boolean, t, where};
    if (is_integer(t)) return {Kind::integer, t, where};
    if (is_real(t)) return {Kind::real, t, where};
    if (bare_strings && !t.empty()) return {Kind::string, t, where};
    throw ConfigError(where + ": cannot parse value '" + t + "' (strings need double quotes)");
}

using Setter = std::function<void(RunConfig&, const Value&)>;

struct Key {
    std::string name;
    Kind kind;
    Setter set;
};

void expect(const std::string& key, const Value& v, Kind kind) {
    const bool ok = v.kind == kind || (kind == Kind::real && v.kind == Kind::integer);
    if (!ok) {
        throw ConfigError(v.where + ": " + key + " expects a " + kind_name(kind) + ", got " + kind_name(v.kind) +
                          " '" + v.text + "'");
    }
}

int64_t as_int(const Value& v) { return std::stoll(v.text); }
double as_real(const Value& v) { return std::stod(v.text); }
bool as_bool(const Value& v) { return v.text == "true"; }

template <typename T>
Key int_key(std::string name, std::function<T&(RunConfig&)> field) {
    return {std::move(name), Kind::integer, [field](RunConfig& c, const Value& v) {
                field(c) = static_cast<T>(as_int(v));
            }};
}

Key real_key(std::string name, std::function<double&(RunConfig&)> field) {
    return {std::move(name), Kind::real, [field](RunConfig& c, const Value& v) { field(c) = as_real(v); }};
}

Key bool_key(std::string name, std::function<bool&(RunConfig&)> field) {
    return {std::move(name), Kind::boolean, [field](RunConfig& c, const Value& v) { field(c) = as_bool(v); }};
}

Key path_key(std::string name, std::function<std::filesystem::path&(RunConfig&)> field) {
    return {std::move(name), Kind::string, [field](RunConfig& c, const Value& v) { field(c) = v.text; }};
}

/// Weight keys apply to both stage configs so each carries the full set.
Key weight_key(std::string name, double LossWeights::*member) {
    return {std::move(name), Kind::real, [member](RunConfig& c, const Value& v) {
                c.stage1.weights.*member = as_real(v);
                c.stage2.weights.*member = as_real(v);
            }};
}

template <typename Cfg>
void schedule_keys(std::vector<Key>& keys, const std::string& sec, Cfg RunConfig::*stage) {
    keys.push_back(int_key<int64_t>(sec + ".batch", [stage](RunConfig& c) -> int64_t& { return (c.*stage).batch; }));
    keys.push_back(
        int_key<int64_t>(sec + ".patch_lr", [stage](RunConfig& c) -> int64_t& { return (c.*stage).patch_lr; }));
    keys.push_back(real_key(sec + ".lr0", [stage](RunConfig& c) -> double& { return (c.*stage).lr0; }));
    keys.push_back(
        int_key<int64_t>(sec + ".halve_every", [stage](RunConfig& c) -> int64_t& { return (c.*stage).halve_every; }));
    keys.push_back(
        int_key<int64_t>(sec + ".total_steps", [stage](RunConfig& c) -> int64_t& { return (c.*stage).total_steps; }));
    keys.push_back(int_key<int>(sec + ".d_steps_per_g_step",
                                [stage](RunConfig& c) -> int& { return (c.*stage).d_steps_per_g_step; }));
    keys.push_back(
        int_key<int64_t>(sec + ".log_every", [stage](RunConfig& c) -> int64_t& { return (c.*stage).log_every; }));
}

const std::vector<Key>& key_table() {
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        k.push_back(path_key("data.lr_dir", [](RunConfig& c) -> std::filesystem::path& { return c.data.lr_dir; }));
        k.push_back(path_key("data.hr_dir", [](RunConfig& c) -> std::filesystem::path& { return c.data.hr_dir; }));
        k.push_back(path_key("data.pairs", [](RunConfig& c) -> std::filesystem::path& { return c.data.pairs; }));
        k.push_back(int_key<int>("data.scale", [](RunConfig& c) -> int& { return c.data.scale; }));
        k.push_back(bool_key("data.augment", [](RunConfig& c) -> bool& { return c.data.augment; }));

        schedule_keys(k, "stage1", &RunConfig::stage1);
        k.push_back(bool_key("stage1.cycle", [](RunConfig& c) -> bool& { return c.stage1.cycle; }));
        k.push_back(int_key<int64_t>("stage1.history_pool",
                                     [](RunConfig& c) -> int64_t& { return c.stage1.history_pool; }));

        schedule_keys(k, "stage2", &RunConfig::stage2);
        k.push_back({"stage2.ablation", Kind::string, [](RunConfig& c, const Value& v) {
                         try {
                             c.stage2.ablation = parse_ablation(v.text);
                         } catch (const Error& e) {
                             throw ConfigError(v.where + ": stage2.ablation: " + e.what());
                         }
                     }});

        k.push_back(int_key<int>("networks.g_blocks", [](RunConfig& c) -> int& { return c.stage1.generator.n_res_blocks; }));
        k.push_back(int_key<int>("networks.g_channels", [](RunConfig& c) -> int& { return c.stage1.generator.channels; }));
        k.push_back(int_key<int>("networks.d_lr_channels",
                                 [](RunConfig& c) -> int& { return c.stage1.discriminator.base_channels; }));
        k.push_back(int_key<int>("networks.d_lr_layers",
                                 [](RunConfig& c) -> int& { return c.stage1.discriminator.n_scale_layers; }));
        k.push_back(int_key<int>("networks.sr_groups", [](RunConfig& c) -> int& { return c.stage2.sr.n_groups; }));
        k.push_back(
            int_key<int>("networks.sr_blocks", [](RunConfig& c) -> int& { return c.stage2.sr.n_blocks_per_group; }));
        k.push_back(int_key<int>("networks.sr_channels", [](RunConfig& c) -> int& { return c.stage2.sr.channels; }));
        k.push_back(
            int_key<int>("networks.sr_reduction", [](RunConfig& c) -> int& { return c.stage2.sr.ca_reduction; }));
        k.push_back({"networks.sr_tap", Kind::string, [](RunConfig& c, const Value& v) {
                         try {
                             c.stage2.sr.tap = parse_tap_point(v.text);
                         } catch (const Error& e) {
                             throw ConfigError(v.where + ": networks.sr_tap: " + e.what());
                         }
                     }});
        k.push_back(int_key<int>("networks.d_hr_channels",
                                 [](RunConfig& c) -> int& { return c.stage2.hr_discriminator.base_channels; }));
        k.push_back(int_key<int>("networks.d_hr_layers",
                                 [](RunConfig& c) -> int& { return c.stage2.hr_discriminator.n_scale_layers; }));
        k.push_back(int_key<int>("networks.d_ada_channels",
                                 [](RunConfig& c) -> int& { return c.stage2.ada_discriminator.base_channels; }));
        k.push_back(int_key<int>("networks.d_ada_layers",
                                 [](RunConfig& c) -> int& { return c.stage2.ada_discriminator.n_scale_layers; }));

        k.push_back(weight_key("weights.w1", &LossWeights::w1));
        k.push_back(weight_key("weights.w2", &LossWeights::w2));
        k.push_back(weight_key("weights.w3", &LossWeights::w3));
        k.push_back(weight_key("weights.lambda1", &LossWeights::lambda1));
        k.push_back(weight_key("weights.lambda2", &LossWeights::lambda2));
        k.push_back(weight_key("weights.lambda3", &LossWeights::lambda3));
        k.push_back(weight_key("weights.lambda4", &LossWeights::lambda4));

        k.push_back({"run.seed", Kind::integer, [](RunConfig& c, const Value& v) {
                         if (v.text.front() == '-') throw ConfigError(v.where + ": run.seed must be non-negative");
                         c.run.seed = std::stoull(v.text);
                     }});
        k.push_back(path_key("run.out_dir", [](RunConfig& c) -> std::filesystem::path& { return c.run.out_dir; }));
        k.push_back(int_key<int64_t>("run.tile", [](RunConfig& c) -> int64_t& { return c.run.tile; }));
        k.push_back(int_key<int64_t>("run.overlap", [](RunConfig& c) -> int64_t& { return c.run.overlap; }));
        k.push_back(int_key<int64_t>("run.border_crop", [](RunConfig& c) -> int64_t& { return c.run.border_crop; }));
        k.push_back({"run.metric_plugin", Kind::string,
                     [](RunConfig& c, const Value& v) { c.run.metric_plugin = v.text; }});
        return k;
    }();
    return table;
}

const Key* find_key(const std::string& name) {
    for (const auto& k : key_table()) {
        if (k.name == name) return &k;
    }
    return nullptr;
}

void assign(RunConfig& cfg, const std::string& name, const Value& v) {
    const auto* key = find_key(name);
    if (key == nullptr) throw ConfigError(v.where + ": unknown key '" + name + "'");
    expect(name, v, key->kind);
    try {
        key->set(cfg, v);
    } catch (const std::out_of_range&) {
        throw ConfigError(v.where + ": " + name + " value out of range");
    }
}

/// Copies the shared fields into both stage configs.
void propagate(RunConfig& cfg) {
    cfg.stage1.seed = cfg.run.seed;
    cfg.stage2.seed = cfg.run.seed;
    cfg.stage1.augment = cfg.data.augment;
    cfg.stage2.augment = cfg.data.augment;
    cfg.stage2.sr.scale = cfg.data.scale;
}

/// Applies overrides in order; returns the keys they set.
std::vector<std::string> apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
    std::vector<std::string> names;
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("--set " + o + ": expected section.key=value");
        const auto name = trim(o.substr(0, eq));
        assign(cfg, name, classify(o.substr(eq + 1), "--set " + name, true));
        names.push_back(name);
    }
    return names;
}

RunConfig finish(RunConfig cfg) {
    propagate(cfg);
    cfg.validate();
    return cfg;
}

}  // namespace

void RunConfig::validate() const {
    if (data.scale < 2 || data.scale > 4) throw ConfigError("data.scale must be 2, 3 or 4");
    if (run.tile < 8) throw ConfigError("run.tile must be at least 8");
    if (run.overlap < 0 || run.overlap * 2 >= run.tile) throw ConfigError("run.overlap must be in [0, tile/2)");
    if (run.border_crop < -1) throw ConfigError("run.border_crop must be >= 0");
    stage1.validate();
    stage2.validate();
}

RunConfig parse_config_text(const std::string& text, const std::string& origin,
                            const std::vector<std::string>& overrides) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::map<std::string, int> seen;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = origin + ":" + std::to_string(line_no);
        // Strip comments outside quotes.
        bool quoted = false;
        for (size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        const auto t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError(where + ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            static const std::vector<std::string> sections{"data", "stage1", "stage2", "networks", "weights", "run"};
            if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
                throw ConfigError(where + ": unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        if (section.empty()) throw ConfigError(where + ": key outside any section");
        const auto name = section + "." + trim(t.substr(0, eq));
        if (auto it = seen.find(name); it != seen.end()) {
            throw ConfigError(where + ": duplicate key '" + name + "' (first set on line " +
                              std::to_string(it->second) + ")");
        }
        seen[name] = line_no;
        assign(cfg, name, classify(t.substr(eq + 1), where, false));
    }
    std::map<std::string, std::string> set_at;
    for (const auto& [name, ln] : seen) set_at[name] = origin + ":" + std::to_string(ln);
    for (const auto& name : apply_overrides(cfg, overrides)) set_at[name] = "--set " + name;
    try {
        return finish(std::move(cfg));
    } catch (const ConfigError& e) {
        // Point invariant violations at whatever set the offending key.
        const std::string msg = e.what();
        for (const auto& [name, where] : set_at) {
            if (msg.find(name) != std::string::npos) throw ConfigError(where + ": " + msg);
        }
        throw;
    }
}

RunConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path.string(), overrides);
}

RunConfig default_config(const std::vector<std::string>& overrides) {
    return parse_config_text("", "<defaults>", overrides);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : key_table()) out.push_back(k.name);
    return out;
}

}  // namespace unpaired_sr
