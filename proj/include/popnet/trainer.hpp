#pragma once

// End-to-end training of the popping + segmentation stack and model-side
// evaluation. Single logical training thread; deterministic per seed. A run
// is exactly resumable from a checkpoint: parameters, Adam moments, BN running
// stats, RNG stream and the epoch permutation are all restored.

#include <functional>
#include <string>
#include <vector>

#include "popnet/checkpoint.hpp"
#include "popnet/config.hpp"
#include "popnet/metrics.hpp"
#include "popnet/nets.hpp"

namespace popnet {

struct StepLog {
    int64_t step = 0;  // 1-based after the update
    double lr = 0.0;
    double total = 0.0, pop = 0.0, sep = 0.0, sem = 0.0;
    double dep = 0.0, loc = 0.0, wtv = 0.0;
};

struct TrainResult {
    std::vector<StepLog> logs;  // logs of the steps run in this call
    int64_t steps_run = 0;
    int64_t param_count = 0;
    std::string checkpoint_path;
};

TrainResult train(const TrainConfig& cfg, const std::string& data_dir,
                  const std::string& out_ckpt, const std::string& resume_path = "",
                  const std::string& log_path = "");

struct EvalOutputs {
    MetricsReport semantic;    // S-tilde against ground truth
    MetricsReport separation;  // S_s against ground truth (when requested)
    bool has_separation = false;
    double mean_iou = 0.0;  // IoU of S-tilde thresholded at 0.5
};

// identity_oracle substitutes the ground-truth mask for the prediction,
// validating the evaluation plumbing end to end.
EvalOutputs evaluate_model(PopNetModel& model, const TrainConfig& cfg,
                           const std::string& data_dir, bool with_separation = false,
                           bool identity_oracle = false);

// Per-sample inference products, shared by the infer command and evaluation.
struct InferenceOutputs {
    DepthMap d_po;
    ContactSurface d_c;
    SoftMask s_tilde;
    SoftMask s_s;
    BinaryMask hard_mask;
};
InferenceOutputs run_inference(PopNetModel& model, const TrainConfig& cfg,
                               const RgbImage& rgb, const DepthMap& d_sf);

double binary_iou(const BinaryMask& a, const BinaryMask& b);

}  // namespace popnet
