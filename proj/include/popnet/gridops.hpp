#pragma once

#include "popnet/grid.hpp"

namespace popnet {

enum class DepthConvention {
    kNearness,     // raw already has larger = closer
    kMetricDepth,  // raw has larger = farther; output gets flipped
};

// Correlation with the classical unnormalized 3x3 Sobel kernels, replicate
// padding at the borders:
//   gx kernel [[-1,0,1],[-2,0,2],[-1,0,1]], gy its transpose.
template <typename T>
GradientField<T> sobel_gradients(const Grid<T>& g) {
    if (g.h < 3 || g.w < 3) throw ValidationError("sobel_gradients: grid must be at least 3x3");
    if (!all_finite(g)) throw ValidationError("sobel_gradients: non-finite input");
    GradientField<T> out{Grid<T>(g.h, g.w), Grid<T>(g.h, g.w)};
    auto clampi = [](int x, int lo, int hi) { return x < lo ? lo : (x > hi ? hi : x); };
    for (int r = 0; r < g.h; ++r) {
        for (int c = 0; c < g.w; ++c) {
            T gx = T(0), gy = T(0);
            for (int dr = -1; dr <= 1; ++dr) {
                const int rr = clampi(r + dr, 0, g.h - 1);
                const T wy = dr == 0 ? T(2) : T(1);
                const T left = g.at(rr, clampi(c - 1, 0, g.w - 1));
                const T right = g.at(rr, clampi(c + 1, 0, g.w - 1));
                gx += wy * (right - left);
            }
            for (int dc = -1; dc <= 1; ++dc) {
                const int cc = clampi(c + dc, 0, g.w - 1);
                const T wx = dc == 0 ? T(2) : T(1);
                const T top = g.at(clampi(r - 1, 0, g.h - 1), cc);
                const T bot = g.at(clampi(r + 1, 0, g.h - 1), cc);
                gy += wx * (bot - top);
            }
            out.gx.at(r, c) = gx;
            out.gy.at(r, c) = gy;
        }
    }
    return out;
}

// 1 exactly where the squared Sobel gradient magnitude of the mask is nonzero.
BinaryMask boundary_map(const BinaryMask& mask);

// 1 at pixels whose full 3x3 stencil lies inside the image bounds and inside
// the mask foreground. Border pixels never qualify.
BinaryMask interior_mask(const BinaryMask& mask);

// Min-max rescale to [0,1]; metric-depth raw data is flipped so the stored
// convention is always nearness. Constant input has no scale and is rejected.
DepthMap normalize_depth(const Gridf& raw, DepthConvention convention);

}  // namespace popnet
