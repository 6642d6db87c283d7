#include "popnet/metrics.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>

#include "popnet/dataset.hpp"
#include "popnet/errors.hpp"

namespace popnet {

namespace {

constexpr double kEps = DBL_EPSILON;  // matches the reference toolbox 'eps'

void check_shapes(const SoftMask& pred, const BinaryMask& gt, const char* op) {
    if (pred.h() != gt.h() || pred.w() != gt.w())
        throw ValidationError(std::string(op) + ": shape mismatch");
}

Gridd normalized_pred(const SoftMask& pred, bool normalize) {
    Gridd p = pred.data.cast<double>();
    if (!normalize) return p;
    const auto [mn_it, mx_it] = std::minmax_element(p.v.begin(), p.v.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx > mn)
        for (auto& x : p.v) x = (x - mn) / (mx - mn);
    // Constant predictions are left untouched: no scale to normalize by.
    return p;
}

// Cumulative (positives, true positives) at each of the 256 thresholds via a
// descending sort: count of values strictly above t.
struct ThresholdCounts {
    std::array<int64_t, 256> npos;  // predicted positives
    std::array<int64_t, 256> ntp;   // predicted positives that are foreground
};

ThresholdCounts threshold_counts(const Gridd& pred, const BinaryMask& gt) {
    const size_t n = pred.v.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return pred.v[a] > pred.v[b]; });
    std::vector<double> sorted(n);
    std::vector<int64_t> tp_prefix(n + 1, 0);
    for (size_t i = 0; i < n; ++i) {
        sorted[i] = pred.v[order[i]];
        tp_prefix[i + 1] = tp_prefix[i] + gt.data.v[order[i]];
    }
    ThresholdCounts out{};
    for (int k = 0; k < 256; ++k) {
        const double t = static_cast<double>(k) / 255.0;
        // First index whose value is <= t in the descending array.
        auto it = std::lower_bound(sorted.begin(), sorted.end(), t,
                                   [](double v, double thr) { return v > thr; });
        const int64_t idx = it - sorted.begin();
        out.npos[k] = idx;
        out.ntp[k] = tp_prefix[idx];
    }
    return out;
}

double mean_of(const Gridd& g) {
    double s = 0.0;
    for (double x : g.v) s += x;
    return s / static_cast<double>(g.v.size());
}

// ---- S-measure helpers (structure measure reference semantics) -------------

double object_score(const Gridd& pred, const BinaryMask& gt, bool fg) {
    // mean/std of pred restricted to the (fg ? foreground : background) region.
    double sum = 0.0;
    int64_t cnt = 0;
    for (size_t i = 0; i < pred.v.size(); ++i)
        if ((gt.data.v[i] != 0) == fg) {
            sum += pred.v[i];
            ++cnt;
        }
    if (cnt == 0) return 0.0;
    const double x = sum / static_cast<double>(cnt);
    double ss = 0.0;
    for (size_t i = 0; i < pred.v.size(); ++i)
        if ((gt.data.v[i] != 0) == fg) {
            const double d = pred.v[i] - x;
            ss += d * d;
        }
    const double sigma = cnt > 1 ? std::sqrt(ss / static_cast<double>(cnt - 1)) : 0.0;
    return 2.0 * x / (x * x + 1.0 + sigma + kEps);
}

double s_object(const Gridd& pred, const BinaryMask& gt) {
    Gridd fg_pred = pred;
    for (size_t i = 0; i < pred.v.size(); ++i)
        if (!gt.data.v[i]) fg_pred.v[i] = 0.0;
    Gridd bg_pred(pred.h, pred.w, 0.0);
    for (size_t i = 0; i < pred.v.size(); ++i)
        if (!gt.data.v[i]) bg_pred.v[i] = 1.0 - pred.v[i];
    const double u =
        static_cast<double>(gt.foreground_count()) / static_cast<double>(pred.v.size());
    return u * object_score(fg_pred, gt, true) + (1.0 - u) * object_score(bg_pred, gt, false);
}

// Region split at the foreground centroid (1-indexed, round-half-away like the
// reference), SSIM-style similarity per block.
double block_ssim(const Gridd& pred, const BinaryMask& gt, int r0, int r1, int c0, int c1) {
    const int64_t n = static_cast<int64_t>(r1 - r0) * (c1 - c0);
    if (n <= 0) return 0.0;
    double sx = 0.0, sy = 0.0;
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
            sx += pred.at(r, c);
            sy += gt.data.at(r, c);
        }
    const double x = sx / n, y = sy / n;
    double vx = 0.0, vy = 0.0, vxy = 0.0;
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
            const double dx = pred.at(r, c) - x;
            const double dy = gt.data.at(r, c) - y;
            vx += dx * dx;
            vy += dy * dy;
            vxy += dx * dy;
        }
    const double denom = static_cast<double>(n) - 1.0 + kEps;
    vx /= denom;
    vy /= denom;
    vxy /= denom;
    const double alpha = 4.0 * x * y * vxy;
    const double beta = (x * x + y * y) * (vx + vy);
    if (alpha != 0.0) return alpha / (beta + kEps);
    if (beta == 0.0) return 1.0;
    return 0.0;
}

double s_region(const Gridd& pred, const BinaryMask& gt) {
    const int rows = gt.h(), cols = gt.w();
    int64_t total = 0;
    double sum_c = 0.0, sum_r = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (gt.data.at(r, c)) {
                ++total;
                sum_c += c + 1;  // 1-indexed like the reference
                sum_r += r + 1;
            }
    int X, Y;
    if (total == 0) {
        X = static_cast<int>(std::round(cols / 2.0));
        Y = static_cast<int>(std::round(rows / 2.0));
    } else {
        X = static_cast<int>(std::round(sum_c / static_cast<double>(total)));
        Y = static_cast<int>(std::round(sum_r / static_cast<double>(total)));
    }
    const double area = static_cast<double>(rows) * cols;
    const double w1 = (static_cast<double>(X) * Y) / area;
    const double w2 = (static_cast<double>(cols - X) * Y) / area;
    const double w3 = (static_cast<double>(X) * (rows - Y)) / area;
    const double w4 = 1.0 - w1 - w2 - w3;
    const double q1 = block_ssim(pred, gt, 0, Y, 0, X);
    const double q2 = block_ssim(pred, gt, 0, Y, X, cols);
    const double q3 = block_ssim(pred, gt, Y, rows, 0, X);
    const double q4 = block_ssim(pred, gt, Y, rows, X, cols);
    return w1 * q1 + w2 * q2 + w3 * q3 + w4 * q4;
}

}  // namespace

double mae(const SoftMask& pred, const BinaryMask& gt) {
    check_shapes(pred, gt, "mae");
    double s = 0.0;
    for (size_t i = 0; i < pred.data.v.size(); ++i)
        s += std::abs(static_cast<double>(pred.data.v[i]) - static_cast<double>(gt.data.v[i]));
    return s / static_cast<double>(pred.data.v.size());
}

double max_f_measure(const SoftMask& pred, const BinaryMask& gt, bool normalize) {
    check_shapes(pred, gt, "max_f_measure");
    const int64_t n_fg = static_cast<int64_t>(gt.foreground_count());
    if (n_fg == 0)
        throw ValidationError("max_f_measure: ground truth has no foreground (recall undefined)");
    const Gridd p = normalized_pred(pred, normalize);
    const auto counts = threshold_counts(p, gt);
    constexpr double beta2 = 0.3;
    double best = 0.0;
    for (int k = 0; k < 256; ++k) {
        const int64_t npos = counts.npos[k], tp = counts.ntp[k];
        const double prec = npos > 0 ? static_cast<double>(tp) / static_cast<double>(npos) : 0.0;
        const double rec = static_cast<double>(tp) / static_cast<double>(n_fg);
        const double denom = beta2 * prec + rec;
        const double f = denom > 0.0 ? (1.0 + beta2) * prec * rec / denom : 0.0;
        best = std::max(best, f);
    }
    return best;
}

double s_measure(const SoftMask& pred, const BinaryMask& gt) {
    check_shapes(pred, gt, "s_measure");
    const Gridd p = pred.data.cast<double>();
    const double y = static_cast<double>(gt.foreground_count()) / static_cast<double>(p.v.size());
    if (y == 0.0) return 1.0 - mean_of(p);
    if (y == 1.0) return mean_of(p);
    const double alpha = 0.5;
    const double q = alpha * s_object(p, gt) + (1.0 - alpha) * s_region(p, gt);
    return std::clamp(q, 0.0, 1.0);
}

double max_e_measure(const SoftMask& pred, const BinaryMask& gt, bool normalize) {
    check_shapes(pred, gt, "max_e_measure");
    const Gridd p = normalized_pred(pred, normalize);
    const int64_t n = static_cast<int64_t>(p.v.size());
    const int64_t n_fg = static_cast<int64_t>(gt.foreground_count());
    const auto counts = threshold_counts(p, gt);
    const double denom = static_cast<double>(n) - 1.0 + kEps;
    double best = 0.0;
    for (int k = 0; k < 256; ++k) {
        const int64_t npos = counts.npos[k], tp = counts.ntp[k];
        double sum;
        if (n_fg == 0) {
            sum = static_cast<double>(n - npos);  // enhanced = 1 - FM
        } else if (n_fg == n) {
            sum = static_cast<double>(npos);  // enhanced = FM
        } else {
            // Binary maps make the alignment matrix piecewise constant over the
            // four (gt, pred) combinations; weight by their counts.
            const double mu_f = static_cast<double>(npos) / static_cast<double>(n);
            const double mu_g = static_cast<double>(n_fg) / static_cast<double>(n);
            const double phi_f[2] = {-mu_f, 1.0 - mu_f};
            const double phi_g[2] = {-mu_g, 1.0 - mu_g};
            const int64_t cnt[2][2] = {{n - n_fg - (npos - tp), npos - tp},
                                       {n_fg - tp, tp}};
            sum = 0.0;
            for (int gbit = 0; gbit < 2; ++gbit)
                for (int fbit = 0; fbit < 2; ++fbit) {
                    const double xi = 2.0 * phi_g[gbit] * phi_f[fbit] /
                                      (phi_g[gbit] * phi_g[gbit] + phi_f[fbit] * phi_f[fbit] +
                                       kEps);
                    const double enhanced = (xi + 1.0) * (xi + 1.0) / 4.0;
                    sum += enhanced * static_cast<double>(cnt[gbit][fbit]);
                }
        }
        best = std::max(best, sum / denom);
    }
    return std::clamp(best, 0.0, 1.0);
}

ImageMetrics compute_image_metrics(const SoftMask& pred, const BinaryMask& gt, bool normalize) {
    ImageMetrics m;
    m.mae = mae(pred, gt);
    m.max_f = max_f_measure(pred, gt, normalize);
    m.s_measure = s_measure(pred, gt);
    m.max_e = max_e_measure(pred, gt, normalize);
    return m;
}

MetricsReport evaluate_dataset(const std::string& pred_dir, const std::string& gt_dir,
                               bool normalize) {
    const auto pred_stems = list_png_stems(pred_dir);
    const auto gt_stems = list_png_stems(gt_dir);
    std::vector<std::string> common;
    std::set_intersection(pred_stems.begin(), pred_stems.end(), gt_stems.begin(),
                          gt_stems.end(), std::back_inserter(common));
    MetricsReport report;
    std::set_symmetric_difference(pred_stems.begin(), pred_stems.end(), gt_stems.begin(),
                                  gt_stems.end(), std::back_inserter(report.skipped));
    if (common.empty())
        throw DataError("evaluate_dataset: no matching stems between " + pred_dir + " and " +
                        gt_dir);

    report.per_image.resize(common.size());
    // Per-image work is independent; results land at fixed indices so the
    // reduction below is order independent.
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < static_cast<int64_t>(common.size()); ++i) {
        const auto& stem = common[i];
        const SoftMask pred = load_soft_mask_png(pred_dir + "/" + stem + ".png");
        const BinaryMask gt = load_mask_png(gt_dir + "/" + stem + ".png");
        report.per_image[i].stem = stem;
        report.per_image[i].m = compute_image_metrics(pred, gt, normalize);
    }
    double sm = 0, sf = 0, ss = 0, se = 0;
    for (const auto& e : report.per_image) {
        sm += e.m.mae;
        sf += e.m.max_f;
        ss += e.m.s_measure;
        se += e.m.max_e;
    }
    const double n = static_cast<double>(report.per_image.size());
    report.mean = {sm / n, sf / n, ss / n, se / n};
    return report;
}

}  // namespace popnet
