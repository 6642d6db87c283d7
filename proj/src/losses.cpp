#include "popnet/losses.hpp"

namespace popnet {

namespace {
ad::Tensor<double> grid_tensor(const Gridf& g) {
    ad::Tensor<double> t(1, 1, g.h, g.w);
    for (size_t i = 0; i < g.v.size(); ++i) t.v[i] = static_cast<double>(g.v[i]);
    return t;
}
}  // namespace

double structure_loss_value(const DepthMap& d_po, const DepthMap& d_sf, const SsimConfig& cfg) {
    ad::Graph<double> g;
    auto a = g.constant(grid_tensor(d_po.data));
    auto b = g.constant(grid_tensor(d_sf.data));
    return structure_loss(a, b, cfg).scalar();
}

double local_smoothness_loss_value(const DepthMap& d_po, const BinaryMask& g) {
    ad::Graph<double> gr;
    auto d = gr.constant(grid_tensor(d_po.data));
    return local_smoothness_loss(d, g).scalar();
}

double wtv_loss_value(const DepthMap& d_po, const BinaryMask& g, const WtvConfig& cfg) {
    ad::Graph<double> gr;
    auto d = gr.constant(grid_tensor(d_po.data));
    return wtv_loss(d, g, cfg).scalar();
}

double separation_loss_value(const SoftMask& s_s, const BinaryMask& g,
                             const SeparationConfig& cfg) {
    ad::Graph<double> gr;
    auto s = gr.constant(grid_tensor(s_s.data));
    return separation_loss(s, g, cfg).scalar();
}

double semantic_loss_value(const SoftMask& s_tilde, const BinaryMask& g) {
    ad::Graph<double> gr;
    auto s = gr.constant(grid_tensor(s_tilde.data));
    return semantic_loss(s, g).scalar();
}

}  // namespace popnet
