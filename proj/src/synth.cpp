#include "popnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "popnet/dataset.hpp"
#include "popnet/imgproc.hpp"

namespace fs = std::filesystem;

namespace popnet {

namespace {

// Smooth pseudo-texture from a handful of random sinusoids.
struct Texture {
    struct Wave {
        double fy, fx, phase, amp;
    };
    std::vector<Wave> waves;
    double base;

    static Texture random(Rng& rng, double roughness) {
        Texture t;
        t.base = rng.uniform(0.35, 0.65);
        const int n = 4;
        for (int i = 0; i < n; ++i)
            t.waves.push_back({rng.uniform(1.0, 6.0), rng.uniform(1.0, 6.0),
                               rng.uniform(0.0, 1.0), roughness * rng.uniform(0.03, 0.12)});
        return t;
    }
    double at(double yn, double xn) const {
        double v = base;
        for (const auto& w : waves)
            v += w.amp * std::sin(2.0 * M_PI * (w.fy * yn + w.fx * xn + w.phase));
        return std::clamp(v, 0.0, 1.0);
    }
};

struct Rgb {
    double r, g, b;
};

Rgb random_color(Rng& rng) {
    return {rng.uniform(0.15, 0.9), rng.uniform(0.15, 0.9), rng.uniform(0.15, 0.9)};
}

bool inside_object(const SceneObject& o, int h, int w, int r, int c) {
    const double yn = (r + 0.5) / h, xn = (c + 0.5) / w;
    const double a = o.angle_deg * M_PI / 180.0;
    const double ca = std::cos(a), sa = std::sin(a);
    const double dy0 = yn - o.cy, dx0 = xn - o.cx;
    const double dx = ca * dx0 + sa * dy0;
    const double dy = -sa * dx0 + ca * dy0;
    switch (o.shape) {
        case SceneObject::Shape::kRectangle:
            return std::abs(dx) <= o.rx && std::abs(dy) <= o.ry;
        case SceneObject::Shape::kEllipse: {
            const double u = dx / o.rx, v = dy / o.ry;
            return u * u + v * v <= 1.0;
        }
        case SceneObject::Shape::kBlob: {
            const double u = dx / o.rx, v = dy / o.ry;
            const double rr = std::sqrt(u * u + v * v);
            if (rr > 1.0 + o.blob_amp) return false;
            const double theta = std::atan2(v, u);
            Rng brng(o.blob_seed);
            double wobble = 0.0;
            for (int k = 2; k <= 4; ++k)
                wobble += (o.blob_amp / 3.0) *
                          std::sin(k * theta + 2.0 * M_PI * brng.uniform());
            return rr <= 1.0 + wobble - o.blob_amp / 3.0;
        }
    }
    return false;
}

}  // namespace

void SceneSpec::validate() const {
    if (h < 8 || w < 8) throw ValidationError("SceneSpec: canvas must be at least 8x8");
    if (!(camouflage >= 0.0 && camouflage <= 1.0))
        throw ValidationError("SceneSpec: camouflage must be in [0,1]");
    noise.validate();
    for (const auto& o : objects) {
        if (!(o.delta > 0.0 && o.delta <= 0.4))
            throw ValidationError("SceneSpec: object delta must be in (0, 0.4]");
        if (o.cx - o.rx < 0.0 || o.cx + o.rx > 1.0 || o.cy - o.ry < 0.0 || o.cy + o.ry > 1.0)
            throw ValidationError("SceneSpec: object does not fit the canvas");
    }
}

SyntheticScene make_scene(const SceneSpec& spec, uint64_t seed) {
    spec.validate();
    const int H = spec.h, W = spec.w;

    Gridf plane(H, W);
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            const double yn = static_cast<double>(r) / std::max(1, H - 1);
            const double xn = static_cast<double>(c) / std::max(1, W - 1);
            plane.at(r, c) = static_cast<float>(std::clamp(
                spec.plane_sx * xn + spec.plane_sy * yn + spec.plane_offset, 0.0, 0.6));
        }

    Gridu8 mask(H, W, 0);
    Gridf depth = plane;
    std::vector<int> owner(static_cast<size_t>(H) * W, -1);
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            double best_delta = 0.0;
            int best = -1;
            for (size_t k = 0; k < spec.objects.size(); ++k)
                if (inside_object(spec.objects[k], H, W, r, c) &&
                    spec.objects[k].delta > best_delta) {
                    best_delta = spec.objects[k].delta;  // overlapping: highest delta wins
                    best = static_cast<int>(k);
                }
            if (best >= 0) {
                mask.at(r, c) = 1;
                owner[static_cast<size_t>(r) * W + c] = best;
                depth.at(r, c) =
                    static_cast<float>(std::min(1.0, plane.at(r, c) + best_delta));
            }
        }

    // Textures: one for the background, one per object, blended toward the
    // local background texture by the camouflage factor.
    Rng trng(spec.texture_seed ^ 0x9e3779b97f4a7c15ull);
    Texture bg_tex = Texture::random(trng, 1.0);
    Rgb bg_color = random_color(trng);
    std::vector<Texture> obj_tex;
    std::vector<Rgb> obj_color;
    for (size_t k = 0; k < spec.objects.size(); ++k) {
        obj_tex.push_back(Texture::random(trng, 1.0));
        obj_color.push_back(random_color(trng));
    }
    Rng prng(seed ^ 0xc2b2ae3d27d4eb4full);
    Gridf rch(H, W), gch(H, W), bch(H, W);
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            const double yn = (r + 0.5) / H, xn = (c + 0.5) / W;
            const double bt = bg_tex.at(yn, xn);
            Rgb col{bg_color.r * bt, bg_color.g * bt, bg_color.b * bt};
            const int k = owner[static_cast<size_t>(r) * W + c];
            if (k >= 0) {
                const double ot = obj_tex[k].at(yn, xn);
                Rgb oc{obj_color[k].r * ot, obj_color[k].g * ot, obj_color[k].b * ot};
                const double m = spec.camouflage;
                col = {(1 - m) * oc.r + m * col.r, (1 - m) * oc.g + m * col.g,
                       (1 - m) * oc.b + m * col.b};
            }
            const double pn = 0.015;
            rch.at(r, c) = static_cast<float>(std::clamp(col.r + pn * prng.normal(), 0.0, 1.0));
            gch.at(r, c) = static_cast<float>(std::clamp(col.g + pn * prng.normal(), 0.0, 1.0));
            bch.at(r, c) = static_cast<float>(std::clamp(col.b + pn * prng.normal(), 0.0, 1.0));
        }

    SyntheticScene scene;
    scene.plane = ContactSurface(plane);
    scene.ideal_depth = DepthMap(depth);
    scene.sample.rgb = RgbImage(std::move(rch), std::move(gch), std::move(bch));
    scene.sample.mask = BinaryMask(std::move(mask));
    scene.sample.depth = corrupt_depth(scene.ideal_depth, spec.noise, seed);
    scene.sample.surface = scene.plane;
    scene.sample.has_surface = true;
    return scene;
}

DepthMap corrupt_depth(const DepthMap& d, const NoiseModel& noise, uint64_t seed) {
    noise.validate();
    Gridf out = d.data;
    Rng rng(seed ^ 0xa0761d6478bd642full);
    if (noise.warp_amplitude > 0.0) {
        WarpField f;
        f.amplitude = noise.warp_amplitude;
        f.freq_x = rng.uniform(0.5, 2.5);
        f.freq_y = rng.uniform(0.5, 2.5);
        f.phase_x = rng.uniform(0.0, 1.0);
        f.phase_y = rng.uniform(0.0, 1.0);
        out = warp_bilinear(out, f);
    }
    if (noise.blur_radius > 0) out = box_blur(out, noise.blur_radius);
    if (noise.gaussian_sigma > 0.0)
        for (auto& x : out.v)
            x = static_cast<float>(x + noise.gaussian_sigma * rng.normal());
    if (noise.dropout_rate > 0.0) {
        const int patch = 8;
        const int64_t n_patches = std::llround(
            noise.dropout_rate * d.data.size() / static_cast<double>(patch * patch));
        for (int64_t i = 0; i < n_patches; ++i) {
            const int r0 = static_cast<int>(rng.uniform_int(std::max(1, d.h() - patch)));
            const int c0 = static_cast<int>(rng.uniform_int(std::max(1, d.w() - patch)));
            for (int r = r0; r < std::min(d.h(), r0 + patch); ++r)
                for (int c = c0; c < std::min(d.w(), c0 + patch); ++c) out.at(r, c) = 0.0f;
        }
    }
    for (auto& x : out.v) x = std::clamp(x, 0.0f, 1.0f);
    return DepthMap(std::move(out));
}

SceneSpec random_scene_spec(int h, int w, Rng& rng, double camouflage,
                            const NoiseModel& noise) {
    SceneSpec spec;
    spec.h = h;
    spec.w = w;
    spec.camouflage = camouflage;
    spec.noise = noise;
    spec.texture_seed = rng.next_u64();
    // keep the pre-clip plane inside [0, 0.6] so the true surface stays planar
    spec.plane_sx = rng.uniform(-0.2, 0.2);
    spec.plane_sy = rng.uniform(-0.2, 0.2);
    const double lo = std::max(0.0, -spec.plane_sx) + std::max(0.0, -spec.plane_sy);
    const double hi = 0.6 - (std::max(0.0, spec.plane_sx) + std::max(0.0, spec.plane_sy));
    spec.plane_offset = rng.uniform(lo + 0.02, hi - 0.02);

    const int n_obj = 1 + static_cast<int>(rng.uniform_int(3));
    for (int i = 0; i < n_obj; ++i) {
        SceneObject o;
        const double pick = rng.uniform();
        o.shape = pick < 1.0 / 3 ? SceneObject::Shape::kRectangle
                  : pick < 2.0 / 3 ? SceneObject::Shape::kEllipse
                                   : SceneObject::Shape::kBlob;
        o.rx = rng.uniform(0.10, 0.22);
        o.ry = rng.uniform(0.10, 0.22);
        o.cx = rng.uniform(o.rx + 0.02, 1.0 - o.rx - 0.02);
        o.cy = rng.uniform(o.ry + 0.02, 1.0 - o.ry - 0.02);
        o.angle_deg = rng.uniform(0.0, 180.0);
        o.delta = rng.uniform(0.12, 0.35);
        o.blob_seed = rng.next_u64();
        spec.objects.push_back(o);
    }
    return spec;
}

std::string export_dataset(const std::vector<SceneSpec>& specs, const std::string& out_dir,
                           uint64_t seed, bool force) {
    const fs::path root(out_dir);
    if (fs::exists(root) && !fs::is_empty(root) && !force)
        throw DataError("output directory is not empty (use --force): " + out_dir);
    fs::create_directories(root);

    nlohmann::json manifest;
    manifest["version"] = 1;
    manifest["seed"] = seed;
    manifest["count"] = specs.size();
    manifest["entries"] = nlohmann::json::array();

    for (size_t i = 0; i < specs.size(); ++i) {
        char stem[32];
        snprintf(stem, sizeof(stem), "scene_%05zu", i);
        const uint64_t scene_seed = fnv1a64(&i, sizeof(i), seed ^ 0x2545f4914f6cdd1dull);
        const SyntheticScene scene = make_scene(specs[i], scene_seed);
        const std::string image = (root / "images" / (std::string(stem) + ".png")).string();
        const std::string depth = (root / "depths" / (std::string(stem) + ".png")).string();
        const std::string mask = (root / "masks" / (std::string(stem) + ".png")).string();
        const std::string surf = (root / "surfaces" / (std::string(stem) + ".png")).string();
        save_rgb_png(image, scene.sample.rgb);
        save_depth_png(depth, scene.sample.depth.data);
        save_mask_png(mask, scene.sample.mask);
        save_depth_png(surf, scene.plane.data);

        nlohmann::json entry;
        entry["stem"] = stem;
        entry["seed"] = scene_seed;
        entry["objects"] = specs[i].objects.size();
        entry["camouflage"] = specs[i].camouflage;
        entry["checksums"] = {{"image", hex64(file_checksum(image))},
                              {"depth", hex64(file_checksum(depth))},
                              {"mask", hex64(file_checksum(mask))},
                              {"surface", hex64(file_checksum(surf))}};
        manifest["entries"].push_back(entry);
    }
    const std::string manifest_path = (root / "manifest.json").string();
    std::ofstream f(manifest_path);
    f << manifest.dump(2) << "\n";
    return manifest_path;
}

}  // namespace popnet
