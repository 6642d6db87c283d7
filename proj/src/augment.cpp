#include "popnet/augment.hpp"

#include "popnet/imgproc.hpp"

namespace popnet {

SceneSample augment(const SceneSample& sample, const AugmentationPolicy& policy, Rng& rng) {
    policy.validate();
    const bool flip = rng.uniform() < policy.flip_prob;
    const double angle = rng.uniform(-policy.rotation_deg, policy.rotation_deg);
    const double clip = rng.uniform(policy.clip_lo, policy.clip_hi);

    SceneSample out = sample;
    auto apply_f = [&](Gridf g) {
        if (flip) g = hflip_grid(g);
        g = rotate_bilinear(g, angle);
        g = border_clip_bilinear(g, clip);
        for (auto& x : g.v) x = std::clamp(x, 0.0f, 1.0f);
        return g;
    };
    auto apply_m = [&](Gridu8 g) {
        if (flip) g = hflip_grid(g);
        g = rotate_nearest(g, angle);
        g = border_clip_nearest(g, clip);
        return g;
    };

    out.rgb = RgbImage(apply_f(sample.rgb.r), apply_f(sample.rgb.g), apply_f(sample.rgb.b));
    out.depth = DepthMap(apply_f(sample.depth.data));
    out.mask = BinaryMask(apply_m(sample.mask.data));
    if (sample.has_surface) out.surface = ContactSurface(apply_f(sample.surface.data));
    return out;
}

}  // namespace popnet
