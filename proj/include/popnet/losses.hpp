#pragma once

// Supervision for the popping network and the separation module:
//   structure_loss        DSSIM between popped and source depth
//   local_smoothness_loss normal-consistency inside the object region
//   wtv_loss              weighted total variation, small weight on semantic edges
//   pop_loss              weighted sum of the three
//   pop_out_separation    sigmoid(sigma * (D_po - D_c))
//   separation_loss       BCE against the ground-truth mask
//   semantic_loss         BCE + soft-IoU for the segmentation head

#include "popnet/ad.hpp"
#include "popnet/ad_nn.hpp"
#include "popnet/gridops.hpp"

namespace popnet {

struct SsimConfig {
    int window = 3;
    double c1 = 1e-4;  // 0.01^2 on [0,1] data
    double c2 = 9e-4;  // 0.03^2

    void validate() const {
        if (window < 3 || window % 2 == 0)
            throw ValidationError("SsimConfig: window must be odd and >= 3");
        if (!(c1 > 0.0) || !(c2 > 0.0)) throw ValidationError("SsimConfig: c1, c2 must be > 0");
    }
};

enum class W0Mode { kBoundaryFraction };

struct WtvConfig {
    double gamma = 0.5;
    W0Mode w0_mode = W0Mode::kBoundaryFraction;

    void validate() const {
        if (!(gamma >= 0.0) || !std::isfinite(gamma))
            throw ValidationError("WtvConfig: gamma must be finite and >= 0");
    }
};

struct PopLossWeights {
    double lambda1 = 1.0;
    double lambda2 = 1.0;

    void validate() const {
        if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !std::isfinite(lambda1) ||
            !std::isfinite(lambda2))
            throw ValidationError("PopLossWeights: lambdas must be finite and >= 0");
    }
};

struct SeparationConfig {
    double sigma = 10.0;
    double eps = 1e-7;  // BCE log clamp

    void validate() const {
        if (!(sigma > 0.0)) throw ValidationError("SeparationConfig: sigma must be > 0");
        if (!(eps > 0.0 && eps < 0.5))
            throw ValidationError("SeparationConfig: eps must be in (0, 0.5)");
    }
};

struct TotalLossWeights {
    double alpha1 = 1.0;
    double alpha2 = 1.0;

    void validate() const {
        if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0) || !std::isfinite(alpha1) ||
            !std::isfinite(alpha2))
            throw ValidationError("TotalLossWeights: alphas must be finite and >= 0");
    }
};

namespace detail {

template <typename T>
ad::Tensor<T> mask_tensor(const BinaryMask& g) {
    ad::Tensor<T> t(1, 1, g.h(), g.w());
    for (size_t i = 0; i < g.data.v.size(); ++i) t.v[i] = static_cast<T>(g.data.v[i]);
    return t;
}

inline void check_same_hw(int ah, int aw, int bh, int bw, const char* op) {
    if (ah != bh || aw != bw) throw ValidationError(std::string(op) + ": shape mismatch");
}

}  // namespace detail

// Per-window SSIM map over `window` x `window` mean pooling (valid extent).
template <typename T>
ad::Var<T> ssim_index(ad::Var<T> a, ad::Var<T> b, const SsimConfig& cfg) {
    cfg.validate();
    if (!a.val().same_shape(b.val())) throw ValidationError("ssim_index: shape mismatch");
    if (a.val().h < cfg.window || a.val().w < cfg.window)
        throw ValidationError("ssim_index: input smaller than window");
    const T c1 = static_cast<T>(cfg.c1), c2 = static_cast<T>(cfg.c2);
    auto mu_a = ad::box_mean_valid(a, cfg.window);
    auto mu_b = ad::box_mean_valid(b, cfg.window);
    auto var_a = ad::sub(ad::box_mean_valid(ad::mul(a, a), cfg.window), ad::mul(mu_a, mu_a));
    auto var_b = ad::sub(ad::box_mean_valid(ad::mul(b, b), cfg.window), ad::mul(mu_b, mu_b));
    auto cov = ad::sub(ad::box_mean_valid(ad::mul(a, b), cfg.window), ad::mul(mu_a, mu_b));
    auto num = ad::mul(ad::add_const(ad::scale(ad::mul(mu_a, mu_b), T(2)), c1),
                       ad::add_const(ad::scale(cov, T(2)), c2));
    auto den = ad::mul(ad::add_const(ad::add(ad::mul(mu_a, mu_a), ad::mul(mu_b, mu_b)), c1),
                       ad::add_const(ad::add(var_a, var_b), c2));
    return ad::div(num, den);
}

// Mean DSSIM = mean((1 - SSIM) / 2), clamped to [0,1] per window.
template <typename T>
ad::Var<T> structure_loss(ad::Var<T> d_po, ad::Var<T> d_sf, const SsimConfig& cfg) {
    auto ssim = ssim_index(d_po, d_sf, cfg);
    auto dssim = ad::scale(ad::add_const(ad::scale(ssim, T(-1)), T(1)), T(0.5));
    return ad::mean_all(ad::clamp_op(dssim, T(0), T(1)));
}

// Per-pixel unnormalized surface normal (-gx, -gy, 1); 3 channels.
template <typename T>
ad::Var<T> normal_field(ad::Var<T> depth) {
    auto grad = ad::sobel_op(depth);
    auto neg = ad::scale(grad, T(-1));
    ad::Tensor<T> ones(depth.val().n, 1, depth.val().h, depth.val().w, T(1));
    auto onev = depth.graph()->constant(std::move(ones));
    return ad::concat_c<T>({neg, onev});
}

// Mean (1 - cos) over 4-connected pairs whose endpoints both carry a full
// in-mask Sobel stencil. Element-wise masking of the depth happens first, so
// the loss only sees the object region.
template <typename T>
ad::Var<T> local_smoothness_loss(ad::Var<T> d_po, const BinaryMask& g,
                                 double cos_eps = 1e-8) {
    detail::check_same_hw(d_po.val().h, d_po.val().w, g.h(), g.w(), "local_smoothness_loss");
    if (g.foreground_count() == 0)
        throw ValidationError("local_smoothness_loss: mask has no foreground");
    const int H = g.h(), W = g.w();
    const BinaryMask interior = interior_mask(g);

    ad::Tensor<T> wh(1, 1, H, W - 1), wv(1, 1, H - 1, W);
    int64_t count = 0;
    for (int r = 0; r < H; ++r)
        for (int c = 0; c + 1 < W; ++c)
            if (interior.data.at(r, c) && interior.data.at(r, c + 1)) {
                wh.at(0, 0, r, c) = T(1);
                ++count;
            }
    for (int r = 0; r + 1 < H; ++r)
        for (int c = 0; c < W; ++c)
            if (interior.data.at(r, c) && interior.data.at(r + 1, c)) {
                wv.at(0, 0, r, c) = T(1);
                ++count;
            }

    auto* gr = d_po.graph();
    if (count == 0) return gr->constant(ad::Tensor<T>(1, 1, 1, 1, T(0)));

    auto d_obj = ad::mul(d_po, gr->constant(detail::mask_tensor<T>(g)));
    auto n = normal_field(d_obj);
    auto nsq = ad::sum_c(ad::mul(n, n));  // >= 1 everywhere: third component is 1
    const T eps = static_cast<T>(cos_eps);

    auto pair_term = [&](ad::Var<T> na, ad::Var<T> nb, ad::Var<T> qa, ad::Var<T> qb,
                         ad::Tensor<T>& wmask) {
        auto dot = ad::sum_c(ad::mul(na, nb));
        auto den = ad::max_const(ad::sqrt_op(ad::mul(qa, qb)), eps);
        auto one_minus_cos = ad::relu(ad::add_const(ad::scale(ad::div(dot, den), T(-1)), T(1)));
        return ad::sum_all(ad::mul(one_minus_cos, gr->constant(std::move(wmask))));
    };

    auto h_term = pair_term(ad::crop_x(n, 0, W - 1), ad::crop_x(n, 1, W),
                            ad::crop_x(nsq, 0, W - 1), ad::crop_x(nsq, 1, W), wh);
    auto v_term = pair_term(ad::crop_y(n, 0, H - 1), ad::crop_y(n, 1, H),
                            ad::crop_y(nsq, 0, H - 1), ad::crop_y(nsq, 1, H), wv);
    return ad::scale(ad::add(h_term, v_term), T(1) / static_cast<T>(count));
}

// Edge-aware weights for the total-variation loss: w0 on mask boundaries,
// w0 + gamma elsewhere, with w0 the boundary-pixel fraction. A mask with no
// boundary (all 0 or all 1) degrades to w0 = 0 and only gamma acts.
inline Gridd wtv_weight_grid(const BinaryMask& g, const WtvConfig& cfg) {
    cfg.validate();
    const BinaryMask boundary = boundary_map(g);
    const double w0 =
        static_cast<double>(boundary.foreground_count()) / (double(g.h()) * double(g.w()));
    Gridd wg(g.h(), g.w());
    for (size_t i = 0; i < wg.v.size(); ++i)
        wg.v[i] = boundary.data.v[i] ? w0 : w0 + cfg.gamma;
    return wg;
}

// Mean over 4-connected ordered pairs of w(p) * |d(p) - d(q)|, expressed over
// unordered pairs with the endpoint weights averaged (identical value).
template <typename T>
ad::Var<T> wtv_loss(ad::Var<T> d_po, const BinaryMask& g, const WtvConfig& cfg) {
    detail::check_same_hw(d_po.val().h, d_po.val().w, g.h(), g.w(), "wtv_loss");
    const int H = g.h(), W = g.w();
    const Gridd wg = wtv_weight_grid(g, cfg);

    ad::Tensor<T> wh(1, 1, H, W - 1), wv(1, 1, H - 1, W);
    for (int r = 0; r < H; ++r)
        for (int c = 0; c + 1 < W; ++c)
            wh.at(0, 0, r, c) = static_cast<T>(0.5 * (wg.at(r, c) + wg.at(r, c + 1)));
    for (int r = 0; r + 1 < H; ++r)
        for (int c = 0; c < W; ++c)
            wv.at(0, 0, r, c) = static_cast<T>(0.5 * (wg.at(r, c) + wg.at(r + 1, c)));
    const int64_t count = static_cast<int64_t>(H) * (W - 1) + static_cast<int64_t>(H - 1) * W;

    auto* gr = d_po.graph();
    auto diff_h = ad::abs_op(ad::sub(ad::crop_x(d_po, 0, W - 1), ad::crop_x(d_po, 1, W)));
    auto diff_v = ad::abs_op(ad::sub(ad::crop_y(d_po, 0, H - 1), ad::crop_y(d_po, 1, H)));
    auto total = ad::add(ad::sum_all(ad::mul(diff_h, gr->constant(std::move(wh)))),
                         ad::sum_all(ad::mul(diff_v, gr->constant(std::move(wv)))));
    return ad::scale(total, T(1) / static_cast<T>(count));
}

template <typename T>
ad::Var<T> pop_loss(ad::Var<T> d_po, ad::Var<T> d_sf, const BinaryMask& g,
                    const PopLossWeights& weights, const SsimConfig& ssim_cfg,
                    const WtvConfig& wtv_cfg) {
    weights.validate();
    auto dep = structure_loss(d_po, d_sf, ssim_cfg);
    auto loc = local_smoothness_loss(d_po, g);
    auto wtv = wtv_loss(d_po, g, wtv_cfg);
    return ad::add(ad::add(dep, ad::scale(loc, static_cast<T>(weights.lambda1))),
                   ad::scale(wtv, static_cast<T>(weights.lambda2)));
}

template <typename T>
ad::Var<T> pop_out_separation_op(ad::Var<T> d_po, ad::Var<T> d_c, const SeparationConfig& cfg) {
    cfg.validate();
    if (!d_po.val().same_shape(d_c.val()))
        throw ValidationError("pop_out_separation: shape mismatch");
    return ad::sigmoid(ad::scale(ad::sub(d_po, d_c), static_cast<T>(cfg.sigma)));
}

// Mean binary cross-entropy with the prediction clamped to [eps, 1-eps].
template <typename T>
ad::Var<T> bce_loss(ad::Var<T> s, const BinaryMask& g, double eps) {
    detail::check_same_hw(s.val().h, s.val().w, g.h(), g.w(), "bce_loss");
    auto* gr = s.graph();
    const T e = static_cast<T>(eps);
    auto s_cl = ad::clamp_op(s, e, T(1) - e);
    auto gv = gr->constant(detail::mask_tensor<T>(g));
    ad::Tensor<T> inv = detail::mask_tensor<T>(g);
    for (auto& x : inv.v) x = T(1) - x;
    auto pos = ad::mul(gv, ad::log_op(s_cl));
    auto neg = ad::mul(gr->constant(std::move(inv)),
                       ad::log_op(ad::add_const(ad::scale(s_cl, T(-1)), T(1))));
    return ad::scale(ad::sum_all(ad::add(pos, neg)),
                     T(-1) / static_cast<T>(s.val().size()));
}

template <typename T>
ad::Var<T> separation_loss(ad::Var<T> s_s, const BinaryMask& g, const SeparationConfig& cfg) {
    cfg.validate();
    return bce_loss(s_s, g, cfg.eps);
}

// BCE + (1 - soft IoU).
template <typename T>
ad::Var<T> semantic_loss(ad::Var<T> s_tilde, const BinaryMask& g, double eps = 1e-7) {
    detail::check_same_hw(s_tilde.val().h, s_tilde.val().w, g.h(), g.w(), "semantic_loss");
    auto* gr = s_tilde.graph();
    auto bce = bce_loss(s_tilde, g, eps);
    auto gv = gr->constant(detail::mask_tensor<T>(g));
    auto inter = ad::sum_all(ad::mul(s_tilde, gv));
    const T sum_g = static_cast<T>(g.foreground_count());
    auto uni = ad::sub(ad::add_const(ad::sum_all(s_tilde), sum_g), inter);
    auto iou = ad::div(inter, ad::add_const(uni, T(1e-8)));
    return ad::add(bce, ad::add_const(ad::scale(iou, T(-1)), T(1)));
}

inline double total_loss(double l_pop, double l_sep, double l_sem, const TotalLossWeights& w) {
    w.validate();
    for (double x : {l_pop, l_sep, l_sem})
        if (!std::isfinite(x) || x < 0.0)
            throw ValidationError("total_loss: components must be finite and >= 0");
    return l_pop + w.alpha1 * l_sep + w.alpha2 * l_sem;
}

// ---- plain (non-autodiff) entry points used by inference and the CLI -------

inline SoftMask pop_out_separation(const DepthMap& d_po, const ContactSurface& d_c,
                                   const SeparationConfig& cfg) {
    cfg.validate();
    if (!d_po.data.same_shape(d_c.data))
        throw ValidationError("pop_out_separation: shape mismatch");
    Gridf out(d_po.h(), d_po.w());
    const float s = static_cast<float>(cfg.sigma);
    for (size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = 1.0f / (1.0f + std::exp(-s * (d_po.data.v[i] - d_c.data.v[i])));
    return SoftMask(std::move(out));
}

// Strict threshold: exactly t maps to background.
inline BinaryMask hard_separation(const SoftMask& s, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ValidationError("hard_separation: threshold must be in (0,1)");
    Gridu8 out(s.h(), s.w());
    for (size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = s.data.v[i] > threshold ? 1 : 0;
    return BinaryMask(std::move(out));
}

// Scalar convenience wrappers (fresh double graph per call).
double structure_loss_value(const DepthMap& d_po, const DepthMap& d_sf, const SsimConfig& cfg);
double local_smoothness_loss_value(const DepthMap& d_po, const BinaryMask& g);
double wtv_loss_value(const DepthMap& d_po, const BinaryMask& g, const WtvConfig& cfg);
double separation_loss_value(const SoftMask& s_s, const BinaryMask& g,
                             const SeparationConfig& cfg);
double semantic_loss_value(const SoftMask& s_tilde, const BinaryMask& g);

}  // namespace popnet
