#pragma once

// Test-only oracle transcriptions of the published saliency evaluation code:
//   - F-measure: per-threshold loop, beta^2 = 0.3, 256 levels
//   - S-measure: StructureMeasure.m (Fan et al., ICCV 2017)
//   - E-measure: Emeasure.m (Fan et al., IJCAI 2018), sum/(w*h-1+eps)
// Kept deliberately literal (1-indexed arithmetic where the original is,
// per-threshold full-image loops) and independent of src/metrics.cpp. Final
// scores are clipped to [0,1] on both routes.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <vector>

#include "popnet/grid.hpp"

namespace refmetrics {

constexpr double eps = DBL_EPSILON;

inline double mean2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// ---- max F-measure ----------------------------------------------------------

inline double max_f_reference(const popnet::Gridd& pred, const popnet::Gridu8& gt) {
    const size_t n = pred.v.size();
    // per-image min-max normalization (skipped for constant maps)
    popnet::Gridd p = pred;
    double mn = p.v[0], mx = p.v[0];
    for (double x : p.v) {
        mn = std::min(mn, x);
        mx = std::max(mx, x);
    }
    if (mx > mn)
        for (auto& x : p.v) x = (x - mn) / (mx - mn);
    long npos_gt = 0;
    for (auto g : gt.v) npos_gt += g;
    double best = 0.0;
    for (int k = 0; k < 256; ++k) {
        const double t = k / 255.0;
        long tp = 0, fp = 0;
        for (size_t i = 0; i < n; ++i) {
            if (p.v[i] > t) {
                if (gt.v[i])
                    ++tp;
                else
                    ++fp;
            }
        }
        const double prec = (tp + fp) > 0 ? double(tp) / double(tp + fp) : 0.0;
        const double rec = double(tp) / double(npos_gt);
        const double denom = 0.3 * prec + rec;
        const double f = denom > 0.0 ? 1.3 * prec * rec / denom : 0.0;
        best = std::max(best, f);
    }
    return std::clamp(best, 0.0, 1.0);
}

// ---- S-measure --------------------------------------------------------------

inline double ref_object(const popnet::Gridd& prediction, const std::vector<bool>& region) {
    std::vector<double> vals;
    for (size_t i = 0; i < prediction.v.size(); ++i)
        if (region[i]) vals.push_back(prediction.v[i]);
    if (vals.empty()) return 0.0;
    const double x = mean2(vals);
    double ss = 0.0;
    for (double v : vals) ss += (v - x) * (v - x);
    const double sigma_x = vals.size() > 1 ? std::sqrt(ss / (vals.size() - 1.0)) : 0.0;
    return 2.0 * x / (x * x + 1.0 + sigma_x + eps);
}

inline double ref_s_object(const popnet::Gridd& prediction, const popnet::Gridu8& GT) {
    const size_t n = prediction.v.size();
    popnet::Gridd pred_fg = prediction;
    std::vector<bool> fg(n), bg(n);
    for (size_t i = 0; i < n; ++i) {
        fg[i] = GT.v[i] != 0;
        bg[i] = GT.v[i] == 0;
        if (!fg[i]) pred_fg.v[i] = 0.0;
    }
    popnet::Gridd pred_bg = prediction;
    for (size_t i = 0; i < n; ++i) pred_bg.v[i] = bg[i] ? 1.0 - prediction.v[i] : 0.0;
    double u = 0.0;
    for (size_t i = 0; i < n; ++i) u += GT.v[i];
    u /= static_cast<double>(n);
    return u * ref_object(pred_fg, fg) + (1.0 - u) * ref_object(pred_bg, bg);
}

inline double ref_ssim_block(const popnet::Gridd& pred, const popnet::Gridu8& GT, int r0,
                             int r1, int c0, int c1) {
    const long N = long(r1 - r0) * long(c1 - c0);
    if (N <= 0) return 0.0;
    double x = 0.0, y = 0.0;
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
            x += pred.at(r, c);
            y += GT.at(r, c);
        }
    x /= N;
    y /= N;
    double sx2 = 0.0, sy2 = 0.0, sxy = 0.0;
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
            sx2 += (pred.at(r, c) - x) * (pred.at(r, c) - x);
            sy2 += (GT.at(r, c) - y) * (GT.at(r, c) - y);
            sxy += (pred.at(r, c) - x) * (GT.at(r, c) - y);
        }
    sx2 /= (N - 1.0 + eps);
    sy2 /= (N - 1.0 + eps);
    sxy /= (N - 1.0 + eps);
    const double alpha = 4.0 * x * y * sxy;
    const double beta = (x * x + y * y) * (sx2 + sy2);
    if (alpha != 0.0) return alpha / (beta + eps);
    if (alpha == 0.0 && beta == 0.0) return 1.0;
    return 0.0;
}

inline double ref_s_region(const popnet::Gridd& pred, const popnet::Gridu8& GT) {
    const int rows = GT.h, cols = GT.w;
    double total = 0.0, sx = 0.0, sy = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (GT.at(r, c)) {
                total += 1.0;
                sx += (c + 1);  // Matlab is 1-indexed
                sy += (r + 1);
            }
    int X, Y;
    if (total == 0.0) {
        X = int(std::round(cols / 2.0));
        Y = int(std::round(rows / 2.0));
    } else {
        X = int(std::round(sx / total));
        Y = int(std::round(sy / total));
    }
    const double area = double(rows) * cols;
    const double w1 = (double(X) * Y) / area;
    const double w2 = (double(cols - X) * Y) / area;
    const double w3 = (double(X) * (rows - Y)) / area;
    const double w4 = 1.0 - w1 - w2 - w3;
    // Blocks GT(1:Y,1:X) etc., converted to 0-indexed half-open ranges.
    const double q1 = ref_ssim_block(pred, GT, 0, Y, 0, X);
    const double q2 = ref_ssim_block(pred, GT, 0, Y, X, cols);
    const double q3 = ref_ssim_block(pred, GT, Y, rows, 0, X);
    const double q4 = ref_ssim_block(pred, GT, Y, rows, X, cols);
    return w1 * q1 + w2 * q2 + w3 * q3 + w4 * q4;
}

inline double s_measure_reference(const popnet::Gridd& pred, const popnet::Gridu8& GT) {
    double y = 0.0;
    for (auto g : GT.v) y += g;
    y /= static_cast<double>(GT.v.size());
    double Q;
    if (y == 0.0) {
        Q = 1.0 - mean2(pred.v);
    } else if (y == 1.0) {
        Q = mean2(pred.v);
    } else {
        const double alpha = 0.5;
        Q = alpha * ref_s_object(pred, GT) + (1.0 - alpha) * ref_s_region(pred, GT);
        if (Q < 0.0) Q = 0.0;
    }
    return std::clamp(Q, 0.0, 1.0);
}

// ---- max E-measure ----------------------------------------------------------

inline double e_measure_reference_binary(const popnet::Gridu8& FM, const popnet::Gridu8& GT) {
    const size_t n = FM.v.size();
    long sum_gt = 0;
    for (auto g : GT.v) sum_gt += g;
    std::vector<double> enhanced(n);
    if (sum_gt == 0) {
        for (size_t i = 0; i < n; ++i) enhanced[i] = 1.0 - double(FM.v[i]);
    } else if (sum_gt == long(n)) {
        for (size_t i = 0; i < n; ++i) enhanced[i] = double(FM.v[i]);
    } else {
        double mu_fm = 0.0, mu_gt = 0.0;
        for (size_t i = 0; i < n; ++i) {
            mu_fm += FM.v[i];
            mu_gt += GT.v[i];
        }
        mu_fm /= double(n);
        mu_gt /= double(n);
        for (size_t i = 0; i < n; ++i) {
            const double af = double(FM.v[i]) - mu_fm;
            const double ag = double(GT.v[i]) - mu_gt;
            const double align = 2.0 * ag * af / (ag * ag + af * af + eps);
            enhanced[i] = (align + 1.0) * (align + 1.0) / 4.0;
        }
    }
    double s = 0.0;
    for (double e : enhanced) s += e;
    return s / (double(n) - 1.0 + eps);
}

inline double max_e_reference(const popnet::Gridd& pred, const popnet::Gridu8& GT) {
    popnet::Gridd p = pred;
    double mn = p.v[0], mx = p.v[0];
    for (double x : p.v) {
        mn = std::min(mn, x);
        mx = std::max(mx, x);
    }
    if (mx > mn)
        for (auto& x : p.v) x = (x - mn) / (mx - mn);
    double best = 0.0;
    for (int k = 0; k < 256; ++k) {
        const double t = k / 255.0;
        popnet::Gridu8 FM(p.h, p.w);
        for (size_t i = 0; i < p.v.size(); ++i) FM.v[i] = p.v[i] > t ? 1 : 0;
        best = std::max(best, e_measure_reference_binary(FM, GT));
    }
    return std::clamp(best, 0.0, 1.0);
}

}  // namespace refmetrics
