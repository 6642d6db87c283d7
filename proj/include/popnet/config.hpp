#pragma once

// Training configuration. File format is TOML (flat keys plus [loss] and
// [augment] tables); the parser below covers that subset since the toolchain
// ships no TOML library. A fully commented default template lives in
// docs/popnet.toml and is also embedded as default_config_toml().

#include <string>

#include "popnet/losses.hpp"

namespace popnet {

struct HyperParams {
    double lambda1 = 1.0, lambda2 = 1.0;  // pop-loss weights
    double alpha1 = 1.0, alpha2 = 1.0;    // total-loss weights
    double sigma = 10.0;                  // separation slope
    double gamma = 0.5;                   // non-boundary TV weight increment
    int ssim_window = 3;
    double ssim_c1 = 1e-4, ssim_c2 = 9e-4;
    double bce_eps = 1e-7;

    SsimConfig ssim() const { return SsimConfig{ssim_window, ssim_c1, ssim_c2}; }
    WtvConfig wtv() const { return WtvConfig{gamma}; }
    PopLossWeights pop_weights() const { return PopLossWeights{lambda1, lambda2}; }
    SeparationConfig separation() const { return SeparationConfig{sigma, bce_eps}; }
    TotalLossWeights total_weights() const { return TotalLossWeights{alpha1, alpha2}; }
};

struct LossFlags {
    bool dep = true, loc = true, wtv = true, sep = true;
};

struct AugmentationPolicy {
    double flip_prob = 0.5;
    double rotation_deg = 10.0;       // uniform in [-r, r]
    double clip_lo = 0.0, clip_hi = 0.1;  // border-clip fraction range

    void validate() const {
        if (!(flip_prob >= 0.0 && flip_prob <= 1.0))
            throw ValidationError("augment: flip_prob must be in [0,1]");
        if (rotation_deg < 0.0) throw ValidationError("augment: rotation_deg must be >= 0");
        if (!(clip_lo >= 0.0 && clip_lo <= clip_hi && clip_hi < 0.3))
            throw ValidationError("augment: clip fractions must satisfy 0 <= lo <= hi < 0.3");
    }
};

struct TrainConfig {
    int resolution = 352;
    double lr = 1e-4;
    int lr_step_epochs = 60;  // divide lr by 10 every this many epochs
    int epochs = 100;
    int64_t max_steps = 0;  // 0: run epochs; otherwise cap the step count
    int batch_size = 8;
    uint64_t seed = 0;
    double width_mult = 1.0;
    double weight_decay = 0.0;
    int64_t checkpoint_every = 0;  // 0: final checkpoint only
    HyperParams hp;
    LossFlags losses;
    AugmentationPolicy aug;

    void validate() const;
};

// Parses the TOML subset; unknown keys are an error so typos do not silently
// fall back to defaults.
TrainConfig parse_config_toml(const std::string& text);
TrainConfig load_config_file(const std::string& path);

std::string config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const std::string& json_text);

// FNV-1a over the canonical JSON form.
std::string config_hash(const TrainConfig& cfg);

std::string default_config_toml();

}  // namespace popnet
