#include "popnet/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "popnet/rng.hpp"

namespace popnet {

void TrainConfig::validate() const {
    if (resolution < 32 || resolution % 32 != 0)
        throw ValidationError("config: resolution must be a positive multiple of 32");
    if (!(lr > 0.0)) throw ValidationError("config: lr must be > 0");
    if (lr_step_epochs <= 0) throw ValidationError("config: lr_step_epochs must be > 0");
    if (epochs <= 0 && max_steps <= 0)
        throw ValidationError("config: need epochs > 0 or max_steps > 0");
    if (batch_size <= 0) throw ValidationError("config: batch_size must be > 0");
    if (!(width_mult > 0.0)) throw ValidationError("config: width_mult must be > 0");
    if (weight_decay < 0.0) throw ValidationError("config: weight_decay must be >= 0");
    if (max_steps < 0 || checkpoint_every < 0)
        throw ValidationError("config: step counts must be >= 0");
    hp.ssim().validate();
    hp.wtv().validate();
    hp.pop_weights().validate();
    hp.separation().validate();
    hp.total_weights().validate();
    aug.validate();
}

namespace {

struct TomlValue {
    std::string raw;

    double num(const std::string& key) const {
        try {
            size_t used = 0;
            const double v = std::stod(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw ValidationError("config: key '" + key + "' expects a number, got '" + raw +
                                  "'");
        }
    }
    bool boolean(const std::string& key) const {
        if (raw == "true") return true;
        if (raw == "false") return false;
        throw ValidationError("config: key '" + key + "' expects true/false, got '" + raw +
                              "'");
    }
};

// Minimal TOML: [tables], key = value, '#' comments, bare scalars only.
std::map<std::string, TomlValue> parse_flat_toml(const std::string& text) {
    std::map<std::string, TomlValue> kv;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ValidationError("config line " + std::to_string(lineno) +
                                      ": malformed table header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (key.empty() || value.empty())
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": empty key or value");
        const std::string full = section.empty() ? key : section + "." + key;
        kv[full] = TomlValue{value};
    }
    return kv;
}

}  // namespace

TrainConfig parse_config_toml(const std::string& text) {
    TrainConfig cfg;
    auto kv = parse_flat_toml(text);
    auto take = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) return std::optional<TomlValue>();
        auto v = it->second;
        kv.erase(it);
        return std::optional<TomlValue>(v);
    };
    auto num = [&](const std::string& key, double& dst) {
        if (auto v = take(key)) dst = v->num(key);
    };
    auto inum = [&](const std::string& key, auto& dst) {
        if (auto v = take(key)) dst = static_cast<std::decay_t<decltype(dst)>>(v->num(key));
    };
    auto flag = [&](const std::string& key, bool& dst) {
        if (auto v = take(key)) dst = v->boolean(key);
    };

    inum("resolution", cfg.resolution);
    num("lr", cfg.lr);
    inum("lr_step_epochs", cfg.lr_step_epochs);
    inum("epochs", cfg.epochs);
    inum("max_steps", cfg.max_steps);
    inum("batch_size", cfg.batch_size);
    inum("seed", cfg.seed);
    num("width_mult", cfg.width_mult);
    num("weight_decay", cfg.weight_decay);
    inum("checkpoint_every", cfg.checkpoint_every);

    num("loss.lambda1", cfg.hp.lambda1);
    num("loss.lambda2", cfg.hp.lambda2);
    num("loss.alpha1", cfg.hp.alpha1);
    num("loss.alpha2", cfg.hp.alpha2);
    num("loss.sigma", cfg.hp.sigma);
    num("loss.gamma", cfg.hp.gamma);
    inum("loss.ssim_window", cfg.hp.ssim_window);
    num("loss.ssim_c1", cfg.hp.ssim_c1);
    num("loss.ssim_c2", cfg.hp.ssim_c2);
    num("loss.bce_eps", cfg.hp.bce_eps);
    flag("loss.enable_dep", cfg.losses.dep);
    flag("loss.enable_loc", cfg.losses.loc);
    flag("loss.enable_wtv", cfg.losses.wtv);
    flag("loss.enable_sep", cfg.losses.sep);

    num("augment.flip_prob", cfg.aug.flip_prob);
    num("augment.rotation_deg", cfg.aug.rotation_deg);
    num("augment.clip_lo", cfg.aug.clip_lo);
    num("augment.clip_hi", cfg.aug.clip_hi);

    if (!kv.empty())
        throw ValidationError("config: unknown key '" + kv.begin()->first + "'");
    cfg.validate();
    return cfg;
}

TrainConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_toml(ss.str());
}

std::string config_to_json(const TrainConfig& cfg) {
    nlohmann::json j;
    j["resolution"] = cfg.resolution;
    j["lr"] = cfg.lr;
    j["lr_step_epochs"] = cfg.lr_step_epochs;
    j["epochs"] = cfg.epochs;
    j["max_steps"] = cfg.max_steps;
    j["batch_size"] = cfg.batch_size;
    j["seed"] = cfg.seed;
    j["width_mult"] = cfg.width_mult;
    j["weight_decay"] = cfg.weight_decay;
    j["checkpoint_every"] = cfg.checkpoint_every;
    j["loss"] = {{"lambda1", cfg.hp.lambda1},   {"lambda2", cfg.hp.lambda2},
                 {"alpha1", cfg.hp.alpha1},     {"alpha2", cfg.hp.alpha2},
                 {"sigma", cfg.hp.sigma},       {"gamma", cfg.hp.gamma},
                 {"ssim_window", cfg.hp.ssim_window},
                 {"ssim_c1", cfg.hp.ssim_c1},   {"ssim_c2", cfg.hp.ssim_c2},
                 {"bce_eps", cfg.hp.bce_eps},   {"enable_dep", cfg.losses.dep},
                 {"enable_loc", cfg.losses.loc},{"enable_wtv", cfg.losses.wtv},
                 {"enable_sep", cfg.losses.sep}};
    j["augment"] = {{"flip_prob", cfg.aug.flip_prob},
                    {"rotation_deg", cfg.aug.rotation_deg},
                    {"clip_lo", cfg.aug.clip_lo},
                    {"clip_hi", cfg.aug.clip_hi}};
    return j.dump();
}

TrainConfig config_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    TrainConfig cfg;
    cfg.resolution = j.at("resolution");
    cfg.lr = j.at("lr");
    cfg.lr_step_epochs = j.at("lr_step_epochs");
    cfg.epochs = j.at("epochs");
    cfg.max_steps = j.at("max_steps");
    cfg.batch_size = j.at("batch_size");
    cfg.seed = j.at("seed");
    cfg.width_mult = j.at("width_mult");
    cfg.weight_decay = j.at("weight_decay");
    cfg.checkpoint_every = j.at("checkpoint_every");
    const auto& l = j.at("loss");
    cfg.hp.lambda1 = l.at("lambda1");
    cfg.hp.lambda2 = l.at("lambda2");
    cfg.hp.alpha1 = l.at("alpha1");
    cfg.hp.alpha2 = l.at("alpha2");
    cfg.hp.sigma = l.at("sigma");
    cfg.hp.gamma = l.at("gamma");
    cfg.hp.ssim_window = l.at("ssim_window");
    cfg.hp.ssim_c1 = l.at("ssim_c1");
    cfg.hp.ssim_c2 = l.at("ssim_c2");
    cfg.hp.bce_eps = l.at("bce_eps");
    cfg.losses.dep = l.at("enable_dep");
    cfg.losses.loc = l.at("enable_loc");
    cfg.losses.wtv = l.at("enable_wtv");
    cfg.losses.sep = l.at("enable_sep");
    const auto& a = j.at("augment");
    cfg.aug.flip_prob = a.at("flip_prob");
    cfg.aug.rotation_deg = a.at("rotation_deg");
    cfg.aug.clip_lo = a.at("clip_lo");
    cfg.aug.clip_hi = a.at("clip_hi");
    cfg.validate();
    return cfg;
}

std::string config_hash(const TrainConfig& cfg) {
    const std::string canon = config_to_json(cfg);
    return hex64(fnv1a64(canon.data(), canon.size()));
}

std::string default_config_toml() {
    return R"(# popnet training configuration (defaults shown)
# Defaults the upstream protocol leaves open and we had to pick:
#   batch_size = 8, weight_decay = 0.0

resolution = 352        # input side length, multiple of 32
lr = 1e-4               # Adam, divided by 10 every lr_step_epochs
lr_step_epochs = 60
epochs = 100
max_steps = 0           # 0 = run full epochs; >0 caps total steps
batch_size = 8
seed = 0                # POPNET_SEED env var overrides
width_mult = 1.0        # channel plan 16/32/64/128/256 times this (4.0 = paper-scale popping net)
weight_decay = 0.0
checkpoint_every = 0    # 0 = final checkpoint only

[loss]
lambda1 = 1.0           # local smoothness weight
lambda2 = 1.0           # weighted TV weight
alpha1 = 1.0            # separation loss weight
alpha2 = 1.0            # semantic loss weight
sigma = 10.0            # separation sigmoid slope
gamma = 0.5             # TV weight added off the semantic boundary
ssim_window = 3
ssim_c1 = 1e-4
ssim_c2 = 9e-4
bce_eps = 1e-7
enable_dep = true
enable_loc = true
enable_wtv = true
enable_sep = true

[augment]
flip_prob = 0.5
rotation_deg = 10.0
clip_lo = 0.0
clip_hi = 0.1
)";
}

}  // namespace popnet
