#pragma once

#include "popnet/config.hpp"
#include "popnet/grid.hpp"
#include "popnet/rng.hpp"

namespace popnet {

// Joint geometric augmentation: one flip/rotation/border-clip decision applied
// identically to RGB, depth, mask and (when present) the contact surface.
// RGB/depth resample bilinearly, masks by nearest neighbor so they stay binary.
// All three random draws happen on every call, so the RNG stream advances the
// same way regardless of the policy.
SceneSample augment(const SceneSample& sample, const AugmentationPolicy& policy, Rng& rng);

}  // namespace popnet
