#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "popnet/augment.hpp"
#include "popnet/dataset.hpp"
#include "popnet/report.hpp"
#include "popnet/svgplot.hpp"
#include "popnet/synth.hpp"
#include "popnet/trainer.hpp"

using namespace popnet;
namespace fs = std::filesystem;

namespace {

fs::path make_tiny_dataset(const std::string& name, int n, uint64_t seed,
                           double camouflage = 0.4) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    Rng rng(seed);
    NoiseModel nm;
    nm.gaussian_sigma = 0.05;
    nm.blur_radius = 1;
    std::vector<SceneSpec> specs;
    for (int i = 0; i < n; ++i) specs.push_back(random_scene_spec(64, 64, rng, camouflage, nm));
    export_dataset(specs, dir.string(), seed, false);
    return dir;
}

TrainConfig toy_config(int64_t steps) {
    TrainConfig cfg;
    cfg.resolution = 64;
    cfg.width_mult = 0.25;
    cfg.batch_size = 2;
    cfg.max_steps = steps;
    cfg.seed = 0;
    return cfg;
}

}  // namespace

TEST_CASE("config defaults, template and file parsing") {
    TrainConfig defaults;
    CHECK_NOTHROW(defaults.validate());
    SUBCASE("embedded template parses to the defaults") {
        const TrainConfig parsed = parse_config_toml(default_config_toml());
        CHECK(config_hash(parsed) == config_hash(defaults));
    }
    SUBCASE("docs template stays in sync with the defaults") {
        std::ifstream f(std::string(POPNET_SOURCE_DIR) + "/docs/popnet.toml");
        REQUIRE(f.good());
        std::stringstream ss;
        ss << f.rdbuf();
        CHECK(config_hash(parse_config_toml(ss.str())) == config_hash(defaults));
    }
    SUBCASE("unknown keys are rejected") {
        CHECK_THROWS_AS(parse_config_toml("resolutoin = 64\n"), ValidationError);
    }
    SUBCASE("bad values are rejected") {
        CHECK_THROWS_AS(parse_config_toml("lr = fast\n"), ValidationError);
        CHECK_THROWS_AS(parse_config_toml("resolution = 50\n"), ValidationError);
        CHECK_THROWS_AS(parse_config_toml("[loss]\nsigma = -1\n"), ValidationError);
    }
    SUBCASE("json round trip preserves the hash") {
        TrainConfig cfg;
        cfg.hp.lambda1 = 0.25;
        cfg.losses.wtv = false;
        cfg.seed = 123;
        const TrainConfig back = config_from_json(config_to_json(cfg));
        CHECK(config_hash(back) == config_hash(cfg));
    }
}

TEST_CASE("augmentation") {
    Rng srng(5);
    NoiseModel nm;
    auto spec = random_scene_spec(64, 64, srng, 0.2, nm);
    auto sample = make_scene(spec, 9).sample;

    SUBCASE("probability-zero policy is the identity") {
        AugmentationPolicy p;
        p.flip_prob = 0.0;
        p.rotation_deg = 0.0;
        p.clip_lo = p.clip_hi = 0.0;
        Rng rng(1);
        auto out = augment(sample, p, rng);
        CHECK(out.rgb.r.v == sample.rgb.r.v);
        CHECK(out.depth.data.v == sample.depth.data.v);
        CHECK(out.mask.data.v == sample.mask.data.v);
        CHECK(out.surface.data.v == sample.surface.data.v);
    }
    SUBCASE("forced flip twice is the identity") {
        AugmentationPolicy p;
        p.flip_prob = 1.0;
        p.rotation_deg = 0.0;
        p.clip_lo = p.clip_hi = 0.0;
        Rng rng(2);
        auto once = augment(sample, p, rng);
        auto twice = augment(once, p, rng);
        CHECK(twice.rgb.g.v == sample.rgb.g.v);
        CHECK(twice.depth.data.v == sample.depth.data.v);
        CHECK(twice.mask.data.v == sample.mask.data.v);
    }
    SUBCASE("mask stays binary under rotation and clipping") {
        AugmentationPolicy p;
        p.flip_prob = 0.5;
        p.rotation_deg = 25.0;
        p.clip_lo = 0.05;
        p.clip_hi = 0.15;
        Rng rng(3);
        for (int it = 0; it < 5; ++it) {
            auto out = augment(sample, p, rng);
            CHECK_NOTHROW(out.mask.validate());
            CHECK_NOTHROW(out.rgb.validate());
            CHECK_NOTHROW(out.depth.validate());
        }
    }
    SUBCASE("invalid policy rejected") {
        AugmentationPolicy p;
        p.clip_hi = 0.4;
        Rng rng(4);
        CHECK_THROWS_AS(augment(sample, p, rng), ValidationError);
    }
}

TEST_CASE("checkpoint round trip and config hash guard") {
    const auto cfg = toy_config(5);
    PopNetModel model(cfg.width_mult, 3);
    TrainerState st;
    st.step = 17;
    st.rng_state = Rng(99).serialize();
    st.permutation = {2, 0, 1};
    st.cursor = 1;
    // make the state distinctive
    model.params()[0]->value.v[0] = 0.777f;
    model.params()[0]->m.v[0] = -0.25f;
    (*model.buffers()[0].second).v[0] = 3.5f;

    const fs::path path = fs::temp_directory_path() / "popnet_ckpt_test.pnck";
    save_checkpoint(path.string(), model, cfg, st);

    PopNetModel loaded(cfg.width_mult, 4);  // different init seed
    TrainerState st2;
    load_checkpoint(path.string(), loaded, cfg, &st2);
    CHECK(loaded.params()[0]->value.v[0] == 0.777f);
    CHECK(loaded.params()[0]->m.v[0] == -0.25f);
    CHECK((*loaded.buffers()[0].second).v[0] == 3.5f);
    CHECK(st2.step == 17);
    CHECK(st2.permutation == std::vector<int>{2, 0, 1});
    CHECK(st2.cursor == 1);
    CHECK(st2.rng_state == st.rng_state);

    SUBCASE("embedded config is recoverable") {
        const TrainConfig peeked = peek_checkpoint_config(path.string());
        CHECK(config_hash(peeked) == config_hash(cfg));
    }
    SUBCASE("config hash mismatch is an error") {
        TrainConfig other = cfg;
        other.hp.sigma = 5.0;
        PopNetModel m2(other.width_mult, 4);
        CHECK_THROWS_AS(load_checkpoint(path.string(), m2, other, nullptr), DataError);
    }
    fs::remove(path);
}

TEST_CASE("training smoke run") {
    const auto dir = make_tiny_dataset("popnet_train_smoke", 2, 11);
    auto cfg = toy_config(5);
    const fs::path ckpt = fs::temp_directory_path() / "popnet_smoke.pnck";
    const auto result = train(cfg, dir.string(), ckpt.string());
    REQUIRE(result.logs.size() == 5);
    for (const auto& log : result.logs) {
        CHECK(std::isfinite(log.total));
        CHECK(log.total >= 0.0);
        // logged identity: total = pop + a1*sep + a2*sem in float arithmetic
        const float expected =
            static_cast<float>(log.pop) +
            static_cast<float>(cfg.hp.alpha1) * static_cast<float>(log.sep) +
            static_cast<float>(cfg.hp.alpha2) * static_cast<float>(log.sem);
        CHECK(static_cast<float>(log.total) == expected);
        const float pop_expected =
            static_cast<float>(log.dep) +
            static_cast<float>(cfg.hp.lambda1) * static_cast<float>(log.loc) +
            static_cast<float>(cfg.hp.lambda2) * static_cast<float>(log.wtv);
        CHECK(static_cast<float>(log.pop) == pop_expected);
    }
    CHECK(result.param_count > 0);
    fs::remove(ckpt);
    fs::remove_all(dir);
}

TEST_CASE("training is deterministic and resumable") {
    const auto dir = make_tiny_dataset("popnet_train_det", 4, 13);
    auto cfg = toy_config(8);
    cfg.checkpoint_every = 4;
    const fs::path a = fs::temp_directory_path() / "popnet_a.pnck";
    const fs::path b = fs::temp_directory_path() / "popnet_b.pnck";
    const auto run_a = train(cfg, dir.string(), a.string());
    const auto run_b = train(cfg, dir.string(), b.string());
    CHECK(file_checksum(a.string()) == file_checksum(b.string()));

    // resume from the midpoint checkpoint and compare the loss trace
    const fs::path c = fs::temp_directory_path() / "popnet_c.pnck";
    const auto resumed = train(cfg, dir.string(), c.string(), a.string() + ".step4");
    REQUIRE(resumed.logs.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(resumed.logs[i].step == run_a.logs[4 + i].step);
        CHECK(resumed.logs[i].total == run_a.logs[4 + i].total);
        CHECK(resumed.logs[i].pop == run_a.logs[4 + i].pop);
        CHECK(resumed.logs[i].sem == run_a.logs[4 + i].sem);
    }
    CHECK(file_checksum(c.string()) == file_checksum(a.string()));

    for (const auto& p : {a, b, c}) fs::remove(p);
    fs::remove(a.string() + ".step4");
    fs::remove(b.string() + ".step4");
    fs::remove(c.string() + ".step4");
    fs::remove_all(dir);
}

TEST_CASE("ablation flags silence their loss components") {
    const auto dir = make_tiny_dataset("popnet_train_flags", 2, 17);
    auto cfg = toy_config(2);
    cfg.losses.dep = cfg.losses.loc = cfg.losses.wtv = cfg.losses.sep = false;
    const fs::path ckpt = fs::temp_directory_path() / "popnet_flags.pnck";
    const auto result = train(cfg, dir.string(), ckpt.string());
    for (const auto& log : result.logs) {
        CHECK(log.pop == 0.0);
        CHECK(log.sep == 0.0);
        CHECK(log.sem > 0.0);
        CHECK(log.total == log.sem);
    }
    fs::remove(ckpt);
    fs::remove_all(dir);
}

TEST_CASE("missing modality files are reported at startup") {
    const auto dir = make_tiny_dataset("popnet_missing", 3, 19);
    fs::remove(dir / "masks" / "scene_00001.png");
    auto cfg = toy_config(1);
    try {
        train(cfg, dir.string(), (fs::temp_directory_path() / "nope.pnck").string());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("scene_00001") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("evaluation") {
    const auto dir = make_tiny_dataset("popnet_eval", 3, 23);
    auto cfg = toy_config(2);
    PopNetModel model(cfg.width_mult, cfg.seed);

    SUBCASE("identity oracle scores perfectly") {
        const auto out = evaluate_model(model, cfg, dir.string(), true, true);
        CHECK(out.mean_iou == 1.0);
        CHECK(out.semantic.mean.mae == 0.0);
        CHECK(out.semantic.mean.max_f == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(out.semantic.mean.s_measure == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(out.semantic.mean.max_e == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("evaluation is deterministic") {
        const auto a = evaluate_model(model, cfg, dir.string());
        const auto b = evaluate_model(model, cfg, dir.string());
        CHECK(a.mean_iou == b.mean_iou);
        CHECK(a.semantic.mean.max_f == b.semantic.mean.max_f);
    }
    SUBCASE("report JSON validates against the documented schema") {
        const auto out = evaluate_model(model, cfg, dir.string());
        const auto j = nlohmann::json::parse(report_to_json(out.semantic));
        std::ifstream f(std::string(POPNET_SOURCE_DIR) + "/docs/metrics_report.schema.json");
        REQUIRE(f.good());
        nlohmann::json schema;
        f >> schema;

        // Structural validation against the subset of JSON Schema the document
        // uses: type, required, properties, items, bounds, additionalProperties.
        std::function<void(const nlohmann::json&, const nlohmann::json&, std::string)> check =
            [&](const nlohmann::json& sch, const nlohmann::json& val, std::string where) {
                INFO("at ", where);
                const std::string type = sch.value("type", "");
                if (type == "object") {
                    REQUIRE(val.is_object());
                    for (const auto& req : sch.value("required", nlohmann::json::array()))
                        CHECK(val.contains(req.get<std::string>()));
                    if (sch.contains("properties")) {
                        for (const auto& [k, v] : val.items()) {
                            if (sch["properties"].contains(k))
                                check(sch["properties"][k], v, where + "." + k);
                            else if (sch.value("additionalProperties", true) == false)
                                FAIL_CHECK("unexpected key ", k, " at ", where);
                        }
                    }
                } else if (type == "array") {
                    REQUIRE(val.is_array());
                    if (sch.contains("items"))
                        for (size_t i = 0; i < val.size(); ++i)
                            check(sch["items"], val[i], where + "[" + std::to_string(i) + "]");
                } else if (type == "number") {
                    REQUIRE(val.is_number());
                    if (sch.contains("minimum")) CHECK(val.get<double>() >= sch["minimum"]);
                    if (sch.contains("maximum")) CHECK(val.get<double>() <= sch["maximum"]);
                } else if (type == "string") {
                    REQUIRE(val.is_string());
                }
            };
        check(schema, j, "$");
    }
    fs::remove_all(dir);
}

TEST_CASE("report json/csv round trip") {
    MetricsReport r;
    r.per_image.push_back({"img_0", {0.125, 0.75, 0.8, 0.9}});
    r.per_image.push_back({"img_1", {0.0, 1.0, 1.0, 1.0}});
    r.mean = {0.0625, 0.875, 0.9, 0.95};
    r.skipped = {"orphan"};
    const fs::path path = fs::temp_directory_path() / "popnet_report_test.json";
    write_report(path.string(), r);
    const auto back = read_report_json(path.string());
    REQUIRE(back.per_image.size() == 2);
    CHECK(back.per_image[0].stem == "img_0");
    CHECK(back.per_image[0].m.mae == 0.125);
    CHECK(back.mean.max_f == 0.875);
    CHECK(back.skipped == std::vector<std::string>{"orphan"});
    fs::path csv = path;
    csv.replace_extension(".csv");
    CHECK(fs::exists(csv));
    fs::remove(path);
    fs::remove(csv);
}

TEST_CASE("svg plot rendering") {
    std::vector<std::pair<std::string, ImageMetrics>> series{
        {"run_a", {0.05, 0.9, 0.88, 0.93}}};
    const auto svg1 = render_metrics_svg(series);
    CHECK(svg1.find("<svg") == 0);
    CHECK(svg1.find("run_a") != std::string::npos);
    // one polyline per series
    size_t count = 0;
    for (size_t pos = 0; (pos = svg1.find("<polyline", pos)) != std::string::npos; ++pos)
        ++count;
    CHECK(count == 1);
    CHECK(render_metrics_svg(series) == svg1);  // deterministic bytes
    CHECK_THROWS_AS(render_metrics_svg({}), ValidationError);
}
