#include "popnet/synth.hpp"

#include <filesystem>

#include "doctest.h"
#include "popnet/dataset.hpp"
#include "popnet/losses.hpp"

using namespace popnet;
namespace fs = std::filesystem;

namespace {

SceneSpec flat_spec(int h = 64, int w = 64) {
    SceneSpec s;
    s.h = h;
    s.w = w;
    s.plane_sx = 0.1;
    s.plane_sy = -0.05;
    s.plane_offset = 0.3;
    return s;
}

}  // namespace

TEST_CASE("empty scene is the bare plane") {
    auto scene = make_scene(flat_spec(), 1);
    CHECK(scene.sample.mask.foreground_count() == 0);
    CHECK(scene.ideal_depth.data.v == scene.plane.data.v);
}

TEST_CASE("one 10x10 rectangle with delta 0.2") {
    SceneSpec spec = flat_spec();
    SceneObject o;
    o.shape = SceneObject::Shape::kRectangle;
    o.cx = o.cy = 0.5;
    o.rx = o.ry = 5.0 / 64.0;  // pixel centers 27..36 on a 64 canvas
    o.delta = 0.2;
    spec.objects.push_back(o);
    auto scene = make_scene(spec, 2);
    CHECK(scene.sample.mask.foreground_count() == 100);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) {
            if (scene.sample.mask.data.at(r, c))
                CHECK(scene.ideal_depth.data.at(r, c) ==
                      doctest::Approx(scene.plane.data.at(r, c) + 0.2f).epsilon(1e-6));
            else
                CHECK(scene.ideal_depth.data.at(r, c) == scene.plane.data.at(r, c));
        }
}

TEST_CASE("separation oracle recovers the ground truth exactly") {
    Rng rng(3);
    SeparationConfig cfg;  // sigma 10
    for (int it = 0; it < 20; ++it) {
        auto spec = random_scene_spec(64, 64, rng, rng.uniform(0.0, 1.0), NoiseModel{});
        auto scene = make_scene(spec, rng.next_u64());
        auto s_s = pop_out_separation(scene.ideal_depth, scene.plane, cfg);
        auto rec = hard_separation(s_s, 0.5);
        CHECK(rec.data.v == scene.sample.mask.data.v);
        // positive pop margin everywhere inside the mask
        float margin = 1.0f;
        for (size_t i = 0; i < rec.data.v.size(); ++i)
            if (scene.sample.mask.data.v[i])
                margin = std::min(margin,
                                  scene.ideal_depth.data.v[i] - scene.plane.data.v[i]);
        if (scene.sample.mask.foreground_count() > 0) CHECK(margin > 0.0f);
    }
}

TEST_CASE("generation is deterministic per (spec, seed)") {
    Rng rng(4);
    auto spec = random_scene_spec(64, 64, rng, 0.5, NoiseModel{0.05, 2, 1.5, 0.0});
    auto a = make_scene(spec, 42);
    auto b = make_scene(spec, 42);
    CHECK(a.sample.rgb.r.v == b.sample.rgb.r.v);
    CHECK(a.sample.depth.data.v == b.sample.depth.data.v);
    CHECK(a.sample.mask.data.v == b.sample.mask.data.v);
    auto c = make_scene(spec, 43);
    CHECK(a.sample.depth.data.v != c.sample.depth.data.v);
}

TEST_CASE("corrupt_depth") {
    auto scene = make_scene(flat_spec(), 5);
    SUBCASE("all-zero noise model is the identity") {
        auto d = corrupt_depth(scene.ideal_depth, NoiseModel{}, 7);
        CHECK(d.data.v == scene.ideal_depth.data.v);
    }
    SUBCASE("gaussian sigma 0.05 lands in the expected deviation band") {
        NoiseModel nm;
        nm.gaussian_sigma = 0.05;
        auto d = corrupt_depth(scene.ideal_depth, nm, 7);
        double mad = 0.0;
        for (size_t i = 0; i < d.data.v.size(); ++i)
            mad += std::abs(static_cast<double>(d.data.v[i]) -
                            static_cast<double>(scene.ideal_depth.data.v[i]));
        mad /= static_cast<double>(d.data.v.size());
        CHECK(mad > 0.03);  // E|N(0, 0.05)| = 0.0399
        CHECK(mad < 0.05);
    }
    SUBCASE("output stays in [0,1] under heavy noise") {
        NoiseModel nm;
        nm.gaussian_sigma = 0.5;
        nm.blur_radius = 2;
        nm.warp_amplitude = 3.0;
        nm.dropout_rate = 0.2;
        auto d = corrupt_depth(scene.ideal_depth, nm, 9);
        for (float x : d.data.v) {
            CHECK(x >= 0.0f);
            CHECK(x <= 1.0f);
        }
    }
}

TEST_CASE("export and re-import round trip") {
    Rng rng(6);
    const fs::path tmp = fs::temp_directory_path() / "popnet_synth_test";
    fs::remove_all(tmp);
    std::vector<SceneSpec> specs;
    NoiseModel nm;
    nm.gaussian_sigma = 0.03;
    for (int i = 0; i < 10; ++i) specs.push_back(random_scene_spec(64, 64, rng, 0.3, nm));

    const auto manifest_path = export_dataset(specs, tmp.string(), 99, false);
    CHECK(fs::exists(manifest_path));
    for (const auto* sub : {"images", "depths", "masks", "surfaces"})
        CHECK(list_png_stems((tmp / sub).string()).size() == 10);

    SUBCASE("re-export with the same seed gives identical checksums") {
        std::vector<uint64_t> sums1, sums2;
        for (const auto& stem : list_png_stems((tmp / "depths").string()))
            sums1.push_back(file_checksum((tmp / "depths" / (stem + ".png")).string()));
        export_dataset(specs, tmp.string(), 99, true);
        for (const auto& stem : list_png_stems((tmp / "depths").string()))
            sums2.push_back(file_checksum((tmp / "depths" / (stem + ".png")).string()));
        CHECK(sums1 == sums2);
    }
    SUBCASE("non-empty directory without force is rejected") {
        CHECK_THROWS_AS(export_dataset(specs, tmp.string(), 99, false), DataError);
    }
    SUBCASE("re-import matches up to 16-bit quantization") {
        const uint64_t scene_seed = [&] {
            size_t i = 0;
            return fnv1a64(&i, sizeof(i), 99ull ^ 0x2545f4914f6cdd1dull);
        }();
        auto scene = make_scene(specs[0], scene_seed);
        auto idx = index_dataset(tmp.string());
        CHECK(idx.has_surfaces);
        auto sample = load_sample(idx, "scene_00000");
        REQUIRE(sample.depth.data.v.size() == scene.sample.depth.data.v.size());
        for (size_t i = 0; i < sample.depth.data.v.size(); ++i)
            CHECK(std::abs(sample.depth.data.v[i] - scene.sample.depth.data.v[i]) <=
                  1.0f / 65535.0f);
        CHECK(sample.mask.data.v == scene.sample.mask.data.v);
    }
    fs::remove_all(tmp);
}
