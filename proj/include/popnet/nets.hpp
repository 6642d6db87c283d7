#pragma once

// The two trainable components. The popping network maps the 4-channel
// RGB + source-depth stack to a popped-out depth in [0,1]; the segmentation
// network fuses RGB and popped depth in three streams and decodes a semantic
// mask plus a contact surface, both through logistic heads.

#include <memory>
#include <string>
#include <vector>

#include "popnet/ad_nn.hpp"
#include "popnet/grid.hpp"
#include "popnet/rng.hpp"

namespace popnet {

struct Param {
    std::string name;
    ad::Tensor<float> value;
    ad::Tensor<float> grad;  // accumulated by Tape::harvest
    ad::Tensor<float> m, v;  // Adam state

    void init_shape(int n, int c, int h, int w) {
        value = ad::Tensor<float>(n, c, h, w);
        grad = ad::Tensor<float>(n, c, h, w);
        m = ad::Tensor<float>(n, c, h, w);
        v = ad::Tensor<float>(n, c, h, w);
    }
};

// One forward pass: owns the graph and remembers which graph leaves belong to
// which parameter so gradients can be pulled back after backward().
struct Tape {
    ad::Graph<float> graph;
    bool training = false;
    std::vector<std::pair<Param*, ad::Node<float>*>> bindings;

    ad::Var<float> bind(Param& p) {
        auto v = graph.leaf(p.value, true);
        bindings.emplace_back(&p, v.node());
        return v;
    }
    void backward(ad::Var<float> loss) { graph.backward(loss.node()); }
    void harvest() {
        for (auto& [param, node] : bindings) {
            if (!node->has_grad()) continue;
            for (int64_t i = 0; i < param->grad.size(); ++i)
                param->grad.v[i] += node->grad.v[i];
        }
    }
};

struct Conv2d {
    Param w, b;
    int stride = 1, pad = 1;
    bool has_bias = true;  // convs feeding BatchNorm drop the redundant bias

    Conv2d() = default;
    Conv2d(const std::string& name, int in_c, int out_c, int k, int stride, int pad, Rng& rng,
           bool bias = true);
    ad::Var<float> forward(Tape& t, ad::Var<float> x) {
        return ad::conv2d(x, t.bind(w), has_bias ? t.bind(b) : ad::Var<float>(), stride, pad);
    }
    void collect(std::vector<Param*>& out) {
        out.push_back(&w);
        if (has_bias) out.push_back(&b);
    }
};

struct BatchNorm2d {
    std::string name;
    Param gamma, beta;
    ad::Tensor<float> running_mean, running_var;
    float momentum = 0.1f, eps = 1e-5f;

    BatchNorm2d() = default;
    BatchNorm2d(const std::string& name, int c);
    ad::Var<float> forward(Tape& t, ad::Var<float> x) {
        return ad::batchnorm(x, t.bind(gamma), t.bind(beta), &running_mean, &running_var,
                             t.training, momentum, eps);
    }
    void collect(std::vector<Param*>& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }
    void collect_buffers(std::vector<std::pair<std::string, ad::Tensor<float>*>>& out) {
        out.emplace_back(name + ".running_mean", &running_mean);
        out.emplace_back(name + ".running_var", &running_var);
    }
};

// Conv2D + BN + ReLU, the building block of both networks.
struct ConvBnRelu {
    Conv2d conv;
    BatchNorm2d bn;

    ConvBnRelu() = default;
    ConvBnRelu(const std::string& name, int in_c, int out_c, int k, int stride, int pad,
               Rng& rng)
        : conv(name + ".conv", in_c, out_c, k, stride, pad, rng, /*bias=*/false),
          bn(name + ".bn", out_c) {}
    ad::Var<float> forward(Tape& t, ad::Var<float> x) {
        return ad::relu(bn.forward(t, conv.forward(t, x)));
    }
    void collect(std::vector<Param*>& out) {
        conv.collect(out);
        bn.collect(out);
    }
    void collect_buffers(std::vector<std::pair<std::string, ad::Tensor<float>*>>& out) {
        bn.collect_buffers(out);
    }
};

// Five-scale channel plan 16/32/64/128/256 scaled by a width multiplier.
std::vector<int> channel_plan(double width_mult);

class PoppingNetwork {
public:
    explicit PoppingNetwork(double width_mult, Rng& rng);

    // x: N x 4 x H x W with H, W divisible by 32 -> N x 1 x H x W in [0,1].
    ad::Var<float> forward(Tape& t, ad::Var<float> x);

    void collect(std::vector<Param*>& out);
    void collect_buffers(std::vector<std::pair<std::string, ad::Tensor<float>*>>& out);
    int64_t param_count();

private:
    ConvBnRelu stem_;              // full-resolution features, final skip
    std::vector<ConvBnRelu> enc_;  // 5 stride-2 stages
    std::vector<ConvBnRelu> dec_;  // 4 skip stages + top stage
    Conv2d head_;
};

class SegmentationNetwork {
public:
    explicit SegmentationNetwork(double width_mult, Rng& rng);

    struct Outputs {
        ad::Var<float> s_tilde;  // semantic prediction, [0,1]
        ad::Var<float> d_c;      // contact surface, [0,1]
    };
    // rgb: N x 3, d_po: N x 1, spatial dims divisible by 32.
    Outputs forward(Tape& t, ad::Var<float> rgb, ad::Var<float> d_po);

    void collect(std::vector<Param*>& out);
    void collect_buffers(std::vector<std::pair<std::string, ad::Tensor<float>*>>& out);
    int64_t param_count();

private:
    ConvBnRelu rgb_stem_, dep_stem_;  // full-resolution stems, final fusion skip
    std::vector<ConvBnRelu> rgb_enc_, dep_enc_, fus_enc_;
    std::vector<ConvBnRelu> dec_;
    Conv2d sem_head_;
    ConvBnRelu surf_block_;
    Conv2d surf_head_;
};

// Both trainable components behind one parameter registry.
class PopNetModel {
    Rng init_rng_;  // declared first: members initialize in declaration order

public:
    PopNetModel(double width_mult, uint64_t seed)
        : init_rng_(seed), pop(width_mult, init_rng_), seg(width_mult, init_rng_) {}

    PoppingNetwork pop;
    SegmentationNetwork seg;

    std::vector<Param*> params();
    // Named non-parameter state (BN running stats), pointer-stable.
    std::vector<std::pair<std::string, ad::Tensor<float>*>> buffers();
    int64_t param_count();
};

// ---- tensor packing helpers -------------------------------------------------

ad::Tensor<float> pack_rgbd(const std::vector<const SceneSample*>& batch);
ad::Tensor<float> pack_rgb(const std::vector<const SceneSample*>& batch);
ad::Tensor<float> pack_depth(const std::vector<const SceneSample*>& batch);

// ---- single-image eval-mode entry points ------------------------------------

DepthMap popping_forward(PoppingNetwork& net, const RgbImage& rgb, const DepthMap& d_sf);

std::pair<SoftMask, ContactSurface> segmentation_forward(SegmentationNetwork& net,
                                                         const RgbImage& rgb,
                                                         const DepthMap& d_po);

}  // namespace popnet
