#pragma once

// Saliency evaluation: MAE, max F-measure (256 thresholds, beta^2 = 0.3),
// S-measure (structure measure, Fan et al. ICCV 2017) and max E-measure
// (enhanced alignment, Fan et al. IJCAI 2018). F and E sweep thresholds with a
// sort-based cumulative count; the literal per-threshold transcriptions used
// as oracles live in the test suite.

#include <string>
#include <vector>

#include "popnet/grid.hpp"

namespace popnet {

struct ImageMetrics {
    double mae = 0.0;
    double max_f = 0.0;
    double s_measure = 0.0;
    double max_e = 0.0;
};

struct MetricsReport {
    struct Entry {
        std::string stem;
        ImageMetrics m;
    };
    std::vector<Entry> per_image;
    ImageMetrics mean;
    std::vector<std::string> skipped;  // stems present on one side only
};

double mae(const SoftMask& pred, const BinaryMask& gt);

// Max over 256 thresholds t = k/255 of F = 1.3*P*R / (0.3*P + R), binarizing
// pred > t. Soft predictions are min-max normalized per image first unless
// `normalize` is false. Empty-foreground ground truth is rejected.
double max_f_measure(const SoftMask& pred, const BinaryMask& gt, bool normalize = true);

double s_measure(const SoftMask& pred, const BinaryMask& gt);

double max_e_measure(const SoftMask& pred, const BinaryMask& gt, bool normalize = true);

ImageMetrics compute_image_metrics(const SoftMask& pred, const BinaryMask& gt,
                                   bool normalize = true);

// Pairs files by stem between pred_dir and gt_dir (8-bit gray PNGs), computes
// per-image metrics plus the dataset mean. Unmatched stems are reported in
// `skipped`; an empty intersection is an error.
MetricsReport evaluate_dataset(const std::string& pred_dir, const std::string& gt_dir,
                               bool normalize = true);

}  // namespace popnet
