#pragma once

// Plain-grid geometry helpers used by augmentation, ingestion resize and the
// noise models. Bilinear sampling uses half-pixel centers and replicate
// borders; scale-1 resampling and 0-degree rotation are exact identities.

#include "popnet/grid.hpp"

namespace popnet {

Gridf resize_bilinear(const Gridf& in, int oh, int ow);
Gridu8 resize_nearest(const Gridu8& in, int oh, int ow);

Gridf rotate_bilinear(const Gridf& in, double degrees);
Gridu8 rotate_nearest(const Gridu8& in, double degrees);

template <typename T>
Grid<T> hflip_grid(const Grid<T>& g) {
    Grid<T> out(g.h, g.w);
    for (int r = 0; r < g.h; ++r)
        for (int c = 0; c < g.w; ++c) out.at(r, c) = g.at(r, g.w - 1 - c);
    return out;
}

// Crop `frac` of the extent from every border, then resize back.
Gridf border_clip_bilinear(const Gridf& in, double frac);
Gridu8 border_clip_nearest(const Gridu8& in, double frac);

// Separable box blur, window 2*radius+1.
Gridf box_blur(const Gridf& in, int radius);

// Resample through a smooth sinusoidal displacement field (amplitude in
// pixels); deterministic in the provided phases.
struct WarpField {
    double amplitude = 0.0;
    double freq_x = 1.0, freq_y = 1.0;
    double phase_x = 0.0, phase_y = 0.0;
};
Gridf warp_bilinear(const Gridf& in, const WarpField& field);

}  // namespace popnet
