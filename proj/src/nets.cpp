#include "popnet/nets.hpp"

#include <cmath>

namespace popnet {

namespace {

void check_spatial(int h, int w) {
    if (h % 32 != 0 || w % 32 != 0)
        throw ValidationError("network input spatial dims must be divisible by 32");
}

int64_t count_params(std::vector<Param*>& ps) {
    int64_t n = 0;
    for (auto* p : ps) n += p->value.size();
    return n;
}

}  // namespace

Conv2d::Conv2d(const std::string& name, int in_c, int out_c, int k, int stride_, int pad_,
               Rng& rng, bool bias) {
    stride = stride_;
    pad = pad_;
    has_bias = bias;
    w.name = name + ".w";
    w.init_shape(out_c, in_c, k, k);
    const double stddev = std::sqrt(2.0 / (static_cast<double>(in_c) * k * k));
    for (auto& x : w.value.v) x = static_cast<float>(stddev * rng.normal());
    if (has_bias) {
        b.name = name + ".b";
        b.init_shape(1, out_c, 1, 1);
    }
}

BatchNorm2d::BatchNorm2d(const std::string& name_, int c) {
    name = name_;
    gamma.name = name + ".gamma";
    gamma.init_shape(1, c, 1, 1);
    beta.name = name + ".beta";
    beta.init_shape(1, c, 1, 1);
    for (auto& x : gamma.value.v) x = 1.0f;
    running_mean = ad::Tensor<float>(1, c, 1, 1);
    running_var = ad::Tensor<float>(1, c, 1, 1, 1.0f);
}

std::vector<int> channel_plan(double width_mult) {
    if (!(width_mult > 0.0)) throw ValidationError("width multiplier must be > 0");
    std::vector<int> plan;
    for (int base : {16, 32, 64, 128, 256})
        plan.push_back(std::max(2, static_cast<int>(std::lround(base * width_mult))));
    return plan;
}

PoppingNetwork::PoppingNetwork(double width_mult, Rng& rng) {
    const auto c = channel_plan(width_mult);
    stem_ = ConvBnRelu("pop.stem", 4, c[0], 3, 1, 1, rng);
    int in_c = c[0];
    for (int i = 0; i < 5; ++i) {
        enc_.emplace_back("pop.enc" + std::to_string(i), in_c, c[i], 3, 2, 1, rng);
        in_c = c[i];
    }
    for (int i = 4; i >= 1; --i)
        dec_.emplace_back("pop.dec" + std::to_string(i), c[i], c[i - 1], 3, 1, 1, rng);
    dec_.emplace_back("pop.dec0", c[0], c[0], 3, 1, 1, rng);
    head_ = Conv2d("pop.head", c[0], 1, 1, 1, 0, rng);
}

ad::Var<float> PoppingNetwork::forward(Tape& t, ad::Var<float> x) {
    if (x.val().c != 4) throw ValidationError("popping network expects 4 input channels");
    check_spatial(x.val().h, x.val().w);
    auto stem = stem_.forward(t, x);  // full-resolution features for the last skip
    std::vector<ad::Var<float>> feats;
    auto h = stem;
    for (auto& stage : enc_) {
        h = stage.forward(t, h);
        feats.push_back(h);
    }
    auto d = feats[4];
    for (int i = 0; i < 4; ++i) {
        d = ad::upsample_nearest2(dec_[i].forward(t, d));
        d = ad::add(d, feats[3 - i]);  // skip connection by addition
    }
    d = ad::add(ad::upsample_nearest2(dec_[4].forward(t, d)), stem);
    return ad::sigmoid(head_.forward(t, d));
}

void PoppingNetwork::collect(std::vector<Param*>& out) {
    stem_.collect(out);
    for (auto& e : enc_) e.collect(out);
    for (auto& d : dec_) d.collect(out);
    head_.collect(out);
}

void PoppingNetwork::collect_buffers(
    std::vector<std::pair<std::string, ad::Tensor<float>*>>& out) {
    stem_.collect_buffers(out);
    for (auto& e : enc_) e.collect_buffers(out);
    for (auto& d : dec_) d.collect_buffers(out);
}

int64_t PoppingNetwork::param_count() {
    std::vector<Param*> ps;
    collect(ps);
    return count_params(ps);
}

SegmentationNetwork::SegmentationNetwork(double width_mult, Rng& rng) {
    const auto c = channel_plan(width_mult);
    rgb_stem_ = ConvBnRelu("seg.rgb_stem", 3, c[0], 3, 1, 1, rng);
    dep_stem_ = ConvBnRelu("seg.dep_stem", 1, c[0], 3, 1, 1, rng);
    int rin = c[0], din = c[0];
    for (int i = 0; i < 5; ++i) {
        rgb_enc_.emplace_back("seg.rgb" + std::to_string(i), rin, c[i], 3, 2, 1, rng);
        dep_enc_.emplace_back("seg.dep" + std::to_string(i), din, c[i], 3, 2, 1, rng);
        rin = c[i];
        din = c[i];
    }
    // Fusion stream starts at scale 0 (rgb + depth) and carries its own
    // stride-2 convolutions; per-scale fusion is plain addition.
    for (int i = 1; i < 5; ++i)
        fus_enc_.emplace_back("seg.fus" + std::to_string(i), c[i - 1], c[i], 3, 2, 1, rng);
    for (int i = 4; i >= 1; --i)
        dec_.emplace_back("seg.dec" + std::to_string(i), c[i], c[i - 1], 3, 1, 1, rng);
    dec_.emplace_back("seg.dec0", c[0], c[0], 3, 1, 1, rng);
    sem_head_ = Conv2d("seg.sem_head", c[0], 1, 1, 1, 0, rng);
    surf_block_ = ConvBnRelu("seg.surf_block", c[0], c[0], 3, 1, 1, rng);
    surf_head_ = Conv2d("seg.surf_head", c[0], 1, 1, 1, 0, rng);
}

SegmentationNetwork::Outputs SegmentationNetwork::forward(Tape& t, ad::Var<float> rgb,
                                                          ad::Var<float> d_po) {
    if (rgb.val().c != 3 || d_po.val().c != 1)
        throw ValidationError("segmentation network expects 3-channel rgb and 1-channel depth");
    if (rgb.val().h != d_po.val().h || rgb.val().w != d_po.val().w)
        throw ValidationError("segmentation network inputs must share spatial dims");
    check_spatial(rgb.val().h, rgb.val().w);

    std::vector<ad::Var<float>> rfeat, dfeat, fus;
    auto r = rgb_stem_.forward(t, rgb);
    auto d = dep_stem_.forward(t, d_po);
    auto fus_stem = ad::add(r, d);  // full-resolution fusion for the last skip
    for (int i = 0; i < 5; ++i) {
        r = rgb_enc_[i].forward(t, r);
        d = dep_enc_[i].forward(t, d);
        rfeat.push_back(r);
        dfeat.push_back(d);
    }
    fus.push_back(ad::add(rfeat[0], dfeat[0]));
    for (int i = 1; i < 5; ++i) {
        auto f = fus_enc_[i - 1].forward(t, fus.back());
        fus.push_back(ad::add(ad::add(f, rfeat[i]), dfeat[i]));
    }
    auto h = fus[4];
    for (int i = 0; i < 4; ++i) {
        h = ad::upsample_nearest2(dec_[i].forward(t, h));
        h = ad::add(h, fus[3 - i]);
    }
    h = ad::add(ad::upsample_nearest2(dec_[4].forward(t, h)), fus_stem);

    Outputs out;
    out.s_tilde = ad::sigmoid(sem_head_.forward(t, h));
    out.d_c = ad::sigmoid(surf_head_.forward(t, surf_block_.forward(t, h)));
    return out;
}

void SegmentationNetwork::collect(std::vector<Param*>& out) {
    rgb_stem_.collect(out);
    dep_stem_.collect(out);
    for (auto& e : rgb_enc_) e.collect(out);
    for (auto& e : dep_enc_) e.collect(out);
    for (auto& e : fus_enc_) e.collect(out);
    for (auto& d : dec_) d.collect(out);
    sem_head_.collect(out);
    surf_block_.collect(out);
    surf_head_.collect(out);
}

void SegmentationNetwork::collect_buffers(
    std::vector<std::pair<std::string, ad::Tensor<float>*>>& out) {
    rgb_stem_.collect_buffers(out);
    dep_stem_.collect_buffers(out);
    for (auto& e : rgb_enc_) e.collect_buffers(out);
    for (auto& e : dep_enc_) e.collect_buffers(out);
    for (auto& e : fus_enc_) e.collect_buffers(out);
    for (auto& d : dec_) d.collect_buffers(out);
    surf_block_.collect_buffers(out);
}

int64_t SegmentationNetwork::param_count() {
    std::vector<Param*> ps;
    collect(ps);
    return count_params(ps);
}

std::vector<Param*> PopNetModel::params() {
    std::vector<Param*> ps;
    pop.collect(ps);
    seg.collect(ps);
    return ps;
}

std::vector<std::pair<std::string, ad::Tensor<float>*>> PopNetModel::buffers() {
    std::vector<std::pair<std::string, ad::Tensor<float>*>> out;
    pop.collect_buffers(out);
    seg.collect_buffers(out);
    return out;
}

int64_t PopNetModel::param_count() {
    auto ps = params();
    return count_params(ps);
}

ad::Tensor<float> pack_rgbd(const std::vector<const SceneSample*>& batch) {
    const int n = static_cast<int>(batch.size());
    const int h = batch[0]->rgb.h(), w = batch[0]->rgb.w();
    ad::Tensor<float> t(n, 4, h, w);
    for (int i = 0; i < n; ++i) {
        const auto& s = *batch[i];
        std::copy(s.rgb.r.v.begin(), s.rgb.r.v.end(), &t.at(i, 0, 0, 0));
        std::copy(s.rgb.g.v.begin(), s.rgb.g.v.end(), &t.at(i, 1, 0, 0));
        std::copy(s.rgb.b.v.begin(), s.rgb.b.v.end(), &t.at(i, 2, 0, 0));
        std::copy(s.depth.data.v.begin(), s.depth.data.v.end(), &t.at(i, 3, 0, 0));
    }
    return t;
}

ad::Tensor<float> pack_rgb(const std::vector<const SceneSample*>& batch) {
    const int n = static_cast<int>(batch.size());
    const int h = batch[0]->rgb.h(), w = batch[0]->rgb.w();
    ad::Tensor<float> t(n, 3, h, w);
    for (int i = 0; i < n; ++i) {
        const auto& s = *batch[i];
        std::copy(s.rgb.r.v.begin(), s.rgb.r.v.end(), &t.at(i, 0, 0, 0));
        std::copy(s.rgb.g.v.begin(), s.rgb.g.v.end(), &t.at(i, 1, 0, 0));
        std::copy(s.rgb.b.v.begin(), s.rgb.b.v.end(), &t.at(i, 2, 0, 0));
    }
    return t;
}

ad::Tensor<float> pack_depth(const std::vector<const SceneSample*>& batch) {
    const int n = static_cast<int>(batch.size());
    const int h = batch[0]->depth.h(), w = batch[0]->depth.w();
    ad::Tensor<float> t(n, 1, h, w);
    for (int i = 0; i < n; ++i)
        std::copy(batch[i]->depth.data.v.begin(), batch[i]->depth.data.v.end(),
                  &t.at(i, 0, 0, 0));
    return t;
}

DepthMap popping_forward(PoppingNetwork& net, const RgbImage& rgb, const DepthMap& d_sf) {
    if (rgb.h() != d_sf.h() || rgb.w() != d_sf.w())
        throw ValidationError("popping_forward: rgb and depth shapes differ");
    SceneSample s;
    s.rgb = rgb;
    s.depth = d_sf;
    Tape t;
    t.training = false;
    auto x = t.graph.constant(pack_rgbd({&s}));
    auto y = net.forward(t, x);
    Gridf out(rgb.h(), rgb.w());
    out.v.assign(y.val().v.begin(), y.val().v.end());
    return DepthMap(std::move(out));
}

std::pair<SoftMask, ContactSurface> segmentation_forward(SegmentationNetwork& net,
                                                         const RgbImage& rgb,
                                                         const DepthMap& d_po) {
    if (rgb.h() != d_po.h() || rgb.w() != d_po.w())
        throw ValidationError("segmentation_forward: rgb and depth shapes differ");
    SceneSample s;
    s.rgb = rgb;
    s.depth = d_po;
    Tape t;
    t.training = false;
    auto out = net.forward(t, t.graph.constant(pack_rgb({&s})),
                           t.graph.constant(pack_depth({&s})));
    Gridf sm(rgb.h(), rgb.w()), dc(rgb.h(), rgb.w());
    sm.v.assign(out.s_tilde.val().v.begin(), out.s_tilde.val().v.end());
    dc.v.assign(out.d_c.val().v.begin(), out.d_c.val().v.end());
    return {SoftMask(std::move(sm)), ContactSurface(std::move(dc))};
}

}  // namespace popnet
