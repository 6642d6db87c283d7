// popnet command-line interface.
//
// Subcommands: train, eval, infer, gradcheck, synth, metrics, plot.
// Exit codes: 0 success, 1 usage/validation, 2 data error, 3 numeric failure.
// POPNET_SEED overrides the configured seed everywhere a seed is used.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "popnet/augment.hpp"
#include "popnet/dataset.hpp"
#include "popnet/gradcheck_suite.hpp"
#include "popnet/report.hpp"
#include "popnet/svgplot.hpp"
#include "popnet/synth.hpp"
#include "popnet/trainer.hpp"

using namespace popnet;
namespace fs = std::filesystem;

namespace {

std::optional<uint64_t> env_seed() {
    const char* s = std::getenv("POPNET_SEED");
    if (!s || !*s) return std::nullopt;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end == s || *end != '\0')
        throw ValidationError("POPNET_SEED must be an unsigned integer");
    return static_cast<uint64_t>(v);
}

struct HpOverrides {
    std::optional<double> lambda1, lambda2, alpha1, alpha2, sigma, gamma, ssim_c1, ssim_c2,
        bce_eps, lr, width_mult, weight_decay;
    std::optional<int> ssim_window, resolution, epochs, batch_size;
    std::optional<int64_t> max_steps, checkpoint_every;
    std::optional<uint64_t> seed;

    void add_flags(CLI::App* cmd) {
        auto opt = [&](const char* flag, auto& target, const char* help) {
            cmd->add_option(flag, target, help);
        };
        opt("--lambda1", lambda1, "local smoothness weight");
        opt("--lambda2", lambda2, "weighted TV weight");
        opt("--alpha1", alpha1, "separation loss weight");
        opt("--alpha2", alpha2, "semantic loss weight");
        opt("--sigma", sigma, "separation sigmoid slope");
        opt("--gamma", gamma, "off-boundary TV weight increment");
        opt("--ssim-window", ssim_window, "SSIM window (odd, >=3)");
        opt("--ssim-c1", ssim_c1, "SSIM c1");
        opt("--ssim-c2", ssim_c2, "SSIM c2");
        opt("--bce-eps", bce_eps, "BCE clamp epsilon");
        opt("--lr", lr, "initial learning rate");
        opt("--width-mult", width_mult, "channel width multiplier");
        opt("--weight-decay", weight_decay, "L2 weight decay");
        opt("--resolution", resolution, "input resolution (multiple of 32)");
        opt("--epochs", epochs, "training epochs");
        opt("--batch-size", batch_size, "batch size");
        opt("--max-steps", max_steps, "cap on optimizer steps (0 = full epochs)");
        opt("--checkpoint-every", checkpoint_every, "intermediate checkpoint period");
        opt("--seed", seed, "RNG seed");
    }
    void apply(TrainConfig& cfg) const {
        auto set = [](auto& dst, const auto& src) {
            if (src) dst = *src;
        };
        set(cfg.hp.lambda1, lambda1);
        set(cfg.hp.lambda2, lambda2);
        set(cfg.hp.alpha1, alpha1);
        set(cfg.hp.alpha2, alpha2);
        set(cfg.hp.sigma, sigma);
        set(cfg.hp.gamma, gamma);
        set(cfg.hp.ssim_window, ssim_window);
        set(cfg.hp.ssim_c1, ssim_c1);
        set(cfg.hp.ssim_c2, ssim_c2);
        set(cfg.hp.bce_eps, bce_eps);
        set(cfg.lr, lr);
        set(cfg.width_mult, width_mult);
        set(cfg.weight_decay, weight_decay);
        set(cfg.resolution, resolution);
        set(cfg.epochs, epochs);
        set(cfg.batch_size, batch_size);
        set(cfg.max_steps, max_steps);
        set(cfg.checkpoint_every, checkpoint_every);
        set(cfg.seed, seed);
    }
};

int run(int argc, char** argv) {
    CLI::App app{"popnet: depth pop-out object segmentation"};
    app.require_subcommand(1);

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train on a dataset directory");
    std::string config_path, data_dir, out_ckpt, resume_path, log_path;
    std::vector<std::string> disabled;
    HpOverrides hp;
    train_cmd->add_option("--config", config_path, "TOML config file (defaults if omitted)");
    train_cmd->add_option("--data", data_dir, "dataset root")->required();
    train_cmd->add_option("--out", out_ckpt, "output checkpoint path")->required();
    train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");
    train_cmd->add_option("--log", log_path, "JSON-lines training log");
    train_cmd->add_option("--disable-loss", disabled, "disable dep|loc|wtv|sep")
        ->check(CLI::IsMember({"dep", "loc", "wtv", "sep"}));
    hp.add_flags(train_cmd);

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    std::string eval_ckpt, eval_data, eval_report;
    bool with_separation = false, identity_oracle = false;
    eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint")->required();
    eval_cmd->add_option("--data", eval_data, "dataset root")->required();
    eval_cmd->add_option("--report", eval_report, "output report JSON")->required();
    eval_cmd->add_flag("--with-separation", with_separation,
                       "also report metrics for the separation mask S_s");
    eval_cmd->add_flag("--identity-oracle", identity_oracle,
                       "use ground truth as the prediction (plumbing check)");

    // ---- infer ----
    auto* infer_cmd = app.add_subcommand("infer", "run the full pipeline on one image");
    std::string infer_ckpt, infer_image, infer_depth, infer_out;
    bool metric_depth = false;
    infer_cmd->add_option("--ckpt", infer_ckpt)->required();
    infer_cmd->add_option("--image", infer_image, "8-bit RGB png")->required();
    infer_cmd->add_option("--depth", infer_depth, "16-bit nearness png")->required();
    infer_cmd->add_option("--out", infer_out, "output directory")->required();
    infer_cmd->add_flag("--metric-depth", metric_depth,
                        "input depth has larger = farther; re-normalize and flip");

    // ---- gradcheck ----
    auto* grad_cmd = app.add_subcommand("gradcheck", "verify loss gradients against "
                                                     "finite differences");
    std::string loss_name = "all";
    bool use_f64 = false;
    uint64_t grad_seed = 0;
    grad_cmd->add_option("--loss", loss_name, "dep|loc|wtv|pop|sep|sem|separation|all");
    grad_cmd->add_flag("--f64", use_f64, "check in double precision (tolerance 1e-6)");
    grad_cmd->add_option("--seed", grad_seed, "instance seed");

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    int synth_n = 10, synth_size = 64, synth_blur = 0;
    uint64_t synth_seed = 0;
    double camouflage = 0.0, noise_sigma = 0.0, warp = 0.0, dropout = 0.0;
    bool force = false;
    std::string synth_out;
    synth_cmd->add_option("--n", synth_n, "number of scenes")->required();
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--seed", synth_seed, "generator seed");
    synth_cmd->add_option("--camouflage", camouflage, "0 = distinct, 1 = matched textures");
    synth_cmd->add_option("--size", synth_size, "canvas side length");
    synth_cmd->add_option("--noise-sigma", noise_sigma, "gaussian depth noise");
    synth_cmd->add_option("--blur", synth_blur, "depth blur radius");
    synth_cmd->add_option("--warp", warp, "depth warp amplitude (pixels)");
    synth_cmd->add_option("--dropout", dropout, "depth dropout area fraction");
    synth_cmd->add_flag("--force", force, "overwrite a non-empty directory");

    // ---- metrics ----
    auto* metrics_cmd = app.add_subcommand("metrics", "score a prediction directory");
    std::string pred_dir, gt_dir, metrics_report;
    bool no_normalize = false;
    metrics_cmd->add_option("--pred", pred_dir)->required();
    metrics_cmd->add_option("--gt", gt_dir)->required();
    metrics_cmd->add_option("--report", metrics_report)->required();
    metrics_cmd->add_flag("--no-normalize", no_normalize,
                          "skip per-image min-max normalization before thresholding");

    // ---- plot ----
    auto* plot_cmd = app.add_subcommand("plot", "render mean metrics of reports as SVG");
    std::vector<std::string> plot_reports;
    std::string plot_out;
    plot_cmd->add_option("reports", plot_reports, "report JSON files")->required();
    plot_cmd->add_option("--out", plot_out, "output SVG")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*train_cmd) {
        TrainConfig cfg =
            config_path.empty() ? TrainConfig{} : load_config_file(config_path);
        hp.apply(cfg);
        if (auto s = env_seed()) cfg.seed = *s;
        for (const auto& d : disabled) {
            if (d == "dep") cfg.losses.dep = false;
            if (d == "loc") cfg.losses.loc = false;
            if (d == "wtv") cfg.losses.wtv = false;
            if (d == "sep") cfg.losses.sep = false;
        }
        cfg.validate();
        const auto result = train(cfg, data_dir, out_ckpt, resume_path, log_path);
        std::printf("trained %lld steps (%lld parameters) -> %s\n",
                    static_cast<long long>(result.steps_run),
                    static_cast<long long>(result.param_count),
                    result.checkpoint_path.c_str());
        if (!result.logs.empty()) {
            const auto& last = result.logs.back();
            std::printf("final losses: total=%.6f pop=%.6f sep=%.6f sem=%.6f\n", last.total,
                        last.pop, last.sep, last.sem);
        }
        return 0;
    }

    if (*eval_cmd) {
        TrainConfig cfg = peek_checkpoint_config(eval_ckpt);
        PopNetModel model(cfg.width_mult, cfg.seed);
        load_checkpoint(eval_ckpt, model, cfg, nullptr);
        const auto out = evaluate_model(model, cfg, eval_data, with_separation,
                                        identity_oracle);
        write_report(eval_report, out.semantic);
        if (with_separation) {
            fs::path sep_path(eval_report);
            sep_path.replace_extension(".separation.json");
            write_report(sep_path.string(), out.separation);
        }
        std::printf("mean: M=%.4f Fm=%.4f Sm=%.4f Em=%.4f IoU(S~)=%.4f  (%zu images)\n",
                    out.semantic.mean.mae, out.semantic.mean.max_f,
                    out.semantic.mean.s_measure, out.semantic.mean.max_e, out.mean_iou,
                    out.semantic.per_image.size());
        return 0;
    }

    if (*infer_cmd) {
        TrainConfig cfg = peek_checkpoint_config(infer_ckpt);
        PopNetModel model(cfg.width_mult, cfg.seed);
        load_checkpoint(infer_ckpt, model, cfg, nullptr);
        const RgbImage rgb = load_rgb_png(infer_image);
        DepthMap d_sf = load_depth_png(infer_depth);
        if (metric_depth)
            d_sf = normalize_depth(d_sf.data, DepthConvention::kMetricDepth);
        const auto out = run_inference(model, cfg, rgb, d_sf);
        fs::create_directories(infer_out);
        save_depth_png(infer_out + "/d_po.png", out.d_po.data);
        save_depth_png(infer_out + "/d_c.png", out.d_c.data);
        save_gray8_png(infer_out + "/s_tilde.png", out.s_tilde.data);
        save_gray8_png(infer_out + "/s_s.png", out.s_s.data);
        save_mask_png(infer_out + "/mask.png", out.hard_mask);
        std::printf("wrote 5 files to %s\n", infer_out.c_str());
        return 0;
    }

    if (*grad_cmd) {
        if (!known_gradcheck_loss(loss_name)) {
            std::fprintf(stderr, "unknown loss '%s'\n", loss_name.c_str());
            return 1;
        }
        if (auto s = env_seed()) grad_seed = *s;
        const auto results = run_gradcheck_suite(loss_name, use_f64, grad_seed);
        bool all_pass = true;
        std::printf("%-18s %14s %10s  %s\n", "loss", "max_rel_err", "tol", "status");
        for (const auto& r : results) {
            std::printf("%-18s %14.3e %10.0e  %s\n", r.name.c_str(), r.max_rel_err,
                        r.tolerance, r.pass ? "pass" : "FAIL");
            all_pass = all_pass && r.pass;
        }
        return all_pass ? 0 : 3;
    }

    if (*synth_cmd) {
        if (auto s = env_seed()) synth_seed = *s;
        NoiseModel nm;
        nm.gaussian_sigma = noise_sigma;
        nm.blur_radius = synth_blur;
        nm.warp_amplitude = warp;
        nm.dropout_rate = dropout;
        Rng rng(synth_seed);
        std::vector<SceneSpec> specs;
        for (int i = 0; i < synth_n; ++i)
            specs.push_back(random_scene_spec(synth_size, synth_size, rng, camouflage, nm));
        const auto manifest = export_dataset(specs, synth_out, synth_seed, force);
        std::printf("wrote %d scenes; manifest: %s\n", synth_n, manifest.c_str());
        return 0;
    }

    if (*metrics_cmd) {
        const auto report = evaluate_dataset(pred_dir, gt_dir, !no_normalize);
        write_report(metrics_report, report);
        std::printf("mean: M=%.4f Fm=%.4f Sm=%.4f Em=%.4f  (%zu images, %zu skipped)\n",
                    report.mean.mae, report.mean.max_f, report.mean.s_measure,
                    report.mean.max_e, report.per_image.size(), report.skipped.size());
        return 0;
    }

    if (*plot_cmd) {
        std::vector<std::pair<std::string, ImageMetrics>> series;
        for (const auto& path : plot_reports) {
            const auto report = read_report_json(path);
            series.emplace_back(fs::path(path).stem().string(), report.mean);
        }
        const std::string svg = render_metrics_svg(series);
        fs::path outp(plot_out);
        if (!outp.parent_path().empty()) fs::create_directories(outp.parent_path());
        std::ofstream f(plot_out, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot write svg: " + plot_out);
        f << svg;
        std::printf("wrote %s (%zu series)\n", plot_out.c_str(), series.size());
        return 0;
    }

    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
