#pragma once

// Versioned single-file checkpoint: magic, JSON manifest (embedded config,
// config hash, step/seed/RNG state, epoch permutation, tensor directory),
// then raw float32 tensor payload. Parameters, Adam moments and BN running
// stats are all stored, so loading restores training exactly.

#include <string>
#include <vector>

#include "popnet/config.hpp"
#include "popnet/nets.hpp"

namespace popnet {

struct TrainerState {
    int64_t step = 0;
    std::string rng_state;
    std::vector<int> permutation;
    int64_t cursor = 0;
};

void save_checkpoint(const std::string& path, PopNetModel& model, const TrainConfig& cfg,
                     const TrainerState& state);

// Reads the embedded config (validated against `expected` when provided —
// mismatching config hashes are an error).
TrainConfig peek_checkpoint_config(const std::string& path);

void load_checkpoint(const std::string& path, PopNetModel& model, const TrainConfig& expected,
                     TrainerState* state);

}  // namespace popnet
