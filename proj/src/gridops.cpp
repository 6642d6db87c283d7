#include "popnet/gridops.hpp"

#include <algorithm>

namespace popnet {

BinaryMask boundary_map(const BinaryMask& mask) {
    // Integer-valued input keeps the Sobel sums exact, so != 0 is a safe test.
    const Gridf g = mask.data.cast<float>();
    const auto grad = sobel_gradients(g);
    Gridu8 out(mask.data.h, mask.data.w, 0);
    for (size_t i = 0; i < out.v.size(); ++i) {
        const float m2 = grad.gx.v[i] * grad.gx.v[i] + grad.gy.v[i] * grad.gy.v[i];
        out.v[i] = m2 != 0.0f ? 1 : 0;
    }
    return BinaryMask(std::move(out));
}

BinaryMask interior_mask(const BinaryMask& mask) {
    const auto& m = mask.data;
    Gridu8 out(m.h, m.w, 0);
    for (int r = 1; r + 1 < m.h; ++r) {
        for (int c = 1; c + 1 < m.w; ++c) {
            bool inside = true;
            for (int dr = -1; dr <= 1 && inside; ++dr)
                for (int dc = -1; dc <= 1; ++dc)
                    if (!m.at(r + dr, c + dc)) {
                        inside = false;
                        break;
                    }
            out.at(r, c) = inside ? 1 : 0;
        }
    }
    return BinaryMask(std::move(out));
}

DepthMap normalize_depth(const Gridf& raw, DepthConvention convention) {
    if (raw.v.empty()) throw ValidationError("normalize_depth: empty grid");
    if (!all_finite(raw)) throw ValidationError("normalize_depth: non-finite input");
    const auto [mn_it, mx_it] = std::minmax_element(raw.v.begin(), raw.v.end());
    const float mn = *mn_it, mx = *mx_it;
    if (!(mx > mn)) throw ValidationError("normalize_depth: constant grid has no scale");
    const float span = mx - mn;
    Gridf out(raw.h, raw.w);
    for (size_t i = 0; i < raw.v.size(); ++i) {
        float x = (raw.v[i] - mn) / span;  // division so the max lands on 1 exactly
        if (convention == DepthConvention::kMetricDepth) x = 1.0f - x;
        out.v[i] = std::clamp(x, 0.0f, 1.0f);
    }
    return DepthMap(std::move(out));
}

}  // namespace popnet
