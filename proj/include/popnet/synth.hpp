#pragma once

// Synthetic desk-scale RGB-D scenes obeying the pop-out composition: a planar
// background surface with objects raised a fixed nearness delta above it.
// Ground-truth masks and the true contact surface (the plane itself) come for
// free, which gives the separation module an exact oracle.

#include <string>
#include <vector>

#include "popnet/grid.hpp"
#include "popnet/rng.hpp"

namespace popnet {

struct SceneObject {
    enum class Shape { kRectangle, kEllipse, kBlob };
    Shape shape = Shape::kRectangle;
    double cy = 0.5, cx = 0.5;  // center, normalized [0,1]
    double ry = 0.2, rx = 0.2;  // half extents, normalized
    double angle_deg = 0.0;
    double delta = 0.2;  // pop height in nearness units, (0, 0.4]
    // blob shape: radial wobble r(theta) = 1 + amp * sum of low harmonics
    double blob_amp = 0.35;
    uint64_t blob_seed = 0;
};

struct NoiseModel {
    double gaussian_sigma = 0.0;
    int blur_radius = 0;
    double warp_amplitude = 0.0;  // pixels
    double dropout_rate = 0.0;    // expected dropped-area fraction

    void validate() const {
        if (gaussian_sigma < 0 || blur_radius < 0 || warp_amplitude < 0 || dropout_rate < 0)
            throw ValidationError("NoiseModel: fields must be >= 0");
    }
};

struct SceneSpec {
    int h = 64, w = 64;
    // background nearness = slope_x * xn + slope_y * yn + offset, clipped to [0, 0.6]
    double plane_sx = 0.0, plane_sy = 0.0, plane_offset = 0.3;
    std::vector<SceneObject> objects;
    uint64_t texture_seed = 0;
    double camouflage = 0.0;  // 0 = distinct textures, 1 = object matches background
    NoiseModel noise;

    void validate() const;
};

struct SyntheticScene {
    SceneSample sample;     // rgb, corrupted depth, mask, surface = true plane
    DepthMap ideal_depth;   // plane + delta inside objects, before corruption
    ContactSurface plane;   // the true contact surface
};

SyntheticScene make_scene(const SceneSpec& spec, uint64_t seed);

DepthMap corrupt_depth(const DepthMap& d, const NoiseModel& noise, uint64_t seed);

// Random spec with 1..3 objects sized and placed to keep clear separation
// margins (delta >= 0.12).
SceneSpec random_scene_spec(int h, int w, Rng& rng, double camouflage,
                            const NoiseModel& noise);

// Writes images/, depths/ (corrupted), masks/, surfaces/ plus manifest.json.
// Refuses a non-empty directory unless force is set. Returns the manifest path.
std::string export_dataset(const std::vector<SceneSpec>& specs, const std::string& out_dir,
                           uint64_t seed, bool force);

}  // namespace popnet
