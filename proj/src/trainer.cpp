#include "popnet/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "popnet/augment.hpp"
#include "popnet/dataset.hpp"
#include "popnet/imgproc.hpp"

namespace popnet {

namespace {

SceneSample resize_sample(const SceneSample& s, int res) {
    if (s.rgb.h() == res && s.rgb.w() == res) return s;
    SceneSample out = s;
    out.rgb = RgbImage(resize_bilinear(s.rgb.r, res, res), resize_bilinear(s.rgb.g, res, res),
                       resize_bilinear(s.rgb.b, res, res));
    out.depth = DepthMap(resize_bilinear(s.depth.data, res, res));
    out.mask = BinaryMask(resize_nearest(s.mask.data, res, res));
    if (s.has_surface)
        out.surface = ContactSurface(resize_bilinear(s.surface.data, res, res));
    return out;
}

struct Adam {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    void step(std::vector<Param*>& params, double lr, int64_t t, double weight_decay) {
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (Param* p : params) {
            for (int64_t i = 0; i < p->value.size(); ++i) {
                double g = p->grad.v[i];
                if (weight_decay > 0.0) g += weight_decay * p->value.v[i];
                const double m = beta1 * p->m.v[i] + (1.0 - beta1) * g;
                const double v = beta2 * p->v.v[i] + (1.0 - beta2) * g * g;
                p->m.v[i] = static_cast<float>(m);
                p->v.v[i] = static_cast<float>(v);
                const double mhat = m / bc1;
                const double vhat = v / bc2;
                p->value.v[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps));
            }
            std::fill(p->grad.v.begin(), p->grad.v.end(), 0.0f);
        }
    }
};

ad::Var<float> zero_var(ad::Graph<float>& g) {
    return g.constant(ad::Tensor<float>(1, 1, 1, 1, 0.0f));
}

void fisher_yates(std::vector<int>& perm, Rng& rng) {
    for (size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.uniform_int(i)]);
}

}  // namespace

double binary_iou(const BinaryMask& a, const BinaryMask& b) {
    if (a.h() != b.h() || a.w() != b.w()) throw ValidationError("binary_iou: shape mismatch");
    int64_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.data.v.size(); ++i) {
        const bool pa = a.data.v[i] != 0, pb = b.data.v[i] != 0;
        inter += pa && pb;
        uni += pa || pb;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

TrainResult train(const TrainConfig& cfg, const std::string& data_dir,
                  const std::string& out_ckpt, const std::string& resume_path,
                  const std::string& log_path) {
    cfg.validate();
    const auto index = index_dataset(data_dir);
    std::vector<SceneSample> samples;
    samples.reserve(index.stems.size());
    for (const auto& stem : index.stems)
        samples.push_back(resize_sample(load_sample(index, stem), cfg.resolution));
    const int n = static_cast<int>(samples.size());
    const int batch = std::min<int>(cfg.batch_size, n);
    const int64_t steps_per_epoch = (n + batch - 1) / batch;
    const int64_t total_steps =
        cfg.max_steps > 0 ? cfg.max_steps
                          : steps_per_epoch * static_cast<int64_t>(cfg.epochs);

    PopNetModel model(cfg.width_mult, cfg.seed);
    auto params = model.params();
    TrainerState st;
    Rng rng(cfg.seed ^ 0x7261696e6572ull);
    if (!resume_path.empty()) {
        load_checkpoint(resume_path, model, cfg, &st);
        rng.deserialize(st.rng_state);
    } else {
        st.permutation.resize(n);
        for (int i = 0; i < n; ++i) st.permutation[i] = i;
        st.cursor = n;  // force a shuffle on the first step
    }
    if (static_cast<int>(st.permutation.size()) != n)
        throw DataError("checkpoint was trained on a different dataset size");

    std::ofstream log_file;
    if (!log_path.empty()) {
        std::filesystem::create_directories(
            std::filesystem::path(log_path).parent_path().empty()
                ? "."
                : std::filesystem::path(log_path).parent_path().string());
        log_file.open(log_path, st.step > 0 ? std::ios::app : std::ios::trunc);
        if (!log_file) throw DataError("cannot open log file: " + log_path);
    }

    const SsimConfig ssim_cfg = cfg.hp.ssim();
    const WtvConfig wtv_cfg = cfg.hp.wtv();
    const SeparationConfig sep_cfg = cfg.hp.separation();
    Adam adam;
    TrainResult result;
    result.param_count = model.param_count();

    const int res = cfg.resolution;
    for (int64_t step = st.step; step < total_steps; ++step) {
        if (st.cursor + batch > n) {
            fisher_yates(st.permutation, rng);
            st.cursor = 0;
        }
        std::vector<SceneSample> batch_samples;
        std::vector<std::string> batch_stems;
        batch_samples.reserve(batch);
        for (int i = 0; i < batch; ++i) {
            const auto& src = samples[st.permutation[st.cursor + i]];
            batch_samples.push_back(augment(src, cfg.aug, rng));
            batch_stems.push_back(src.stem);
        }
        st.cursor += batch;

        std::vector<const SceneSample*> ptrs;
        for (const auto& s : batch_samples) ptrs.push_back(&s);

        Tape t;
        t.training = true;
        auto rgbd = t.graph.constant(pack_rgbd(ptrs));
        auto rgb = t.graph.constant(pack_rgb(ptrs));
        auto d_sf = t.graph.constant(pack_depth(ptrs));
        auto d_po = model.pop.forward(t, rgbd);
        auto outs = model.seg.forward(t, rgb, d_po);

        ad::Var<float> dep_sum, loc_sum, wtv_sum, sep_sum, sem_sum;
        for (int i = 0; i < batch; ++i) {
            const BinaryMask& mask = batch_samples[i].mask;
            auto dpo_i = ad::crop(d_po, i, i + 1, 0, 1, 0, res, 0, res);
            auto dsf_i = ad::crop(d_sf, i, i + 1, 0, 1, 0, res, 0, res);
            auto sm_i = ad::crop(outs.s_tilde, i, i + 1, 0, 1, 0, res, 0, res);
            auto dc_i = ad::crop(outs.d_c, i, i + 1, 0, 1, 0, res, 0, res);

            auto dep = cfg.losses.dep ? structure_loss(dpo_i, dsf_i, ssim_cfg) : zero_var(t.graph);
            // Augmentation can clip a mask empty; the smoothness term has no
            // valid pairs then and contributes nothing.
            auto loc = cfg.losses.loc && mask.foreground_count() > 0
                           ? local_smoothness_loss(dpo_i, mask)
                           : zero_var(t.graph);
            auto wtv = cfg.losses.wtv ? wtv_loss(dpo_i, mask, wtv_cfg) : zero_var(t.graph);
            auto sep = cfg.losses.sep
                           ? separation_loss(pop_out_separation_op(dpo_i, dc_i, sep_cfg), mask,
                                             sep_cfg)
                           : zero_var(t.graph);
            auto sem = semantic_loss(sm_i, mask, cfg.hp.bce_eps);
            dep_sum = i == 0 ? dep : ad::add(dep_sum, dep);
            loc_sum = i == 0 ? loc : ad::add(loc_sum, loc);
            wtv_sum = i == 0 ? wtv : ad::add(wtv_sum, wtv);
            sep_sum = i == 0 ? sep : ad::add(sep_sum, sep);
            sem_sum = i == 0 ? sem : ad::add(sem_sum, sem);
        }
        const float inv_b = 1.0f / static_cast<float>(batch);
        auto dep_mean = ad::scale(dep_sum, inv_b);
        auto loc_mean = ad::scale(loc_sum, inv_b);
        auto wtv_mean = ad::scale(wtv_sum, inv_b);
        auto sep_mean = ad::scale(sep_sum, inv_b);
        auto sem_mean = ad::scale(sem_sum, inv_b);
        auto pop_mean =
            ad::add(ad::add(dep_mean, ad::scale(loc_mean, static_cast<float>(cfg.hp.lambda1))),
                    ad::scale(wtv_mean, static_cast<float>(cfg.hp.lambda2)));
        auto total =
            ad::add(ad::add(pop_mean, ad::scale(sep_mean, static_cast<float>(cfg.hp.alpha1))),
                    ad::scale(sem_mean, static_cast<float>(cfg.hp.alpha2)));

        if (!std::isfinite(total.scalar())) {
            std::string stems;
            for (const auto& s : batch_stems) stems += " " + s;
            throw NumericError("non-finite loss at step " + std::to_string(step + 1) +
                               "; batch stems:" + stems);
        }

        t.backward(total);
        t.harvest();

        const int64_t epoch = step / steps_per_epoch;
        const double lr =
            cfg.lr * std::pow(0.1, static_cast<double>(epoch / cfg.lr_step_epochs));
        adam.step(params, lr, step + 1, cfg.weight_decay);

        StepLog entry;
        entry.step = step + 1;
        entry.lr = lr;
        entry.total = total.scalar();
        entry.pop = pop_mean.scalar();
        entry.sep = sep_mean.scalar();
        entry.sem = sem_mean.scalar();
        entry.dep = dep_mean.scalar();
        entry.loc = loc_mean.scalar();
        entry.wtv = wtv_mean.scalar();
        result.logs.push_back(entry);
        ++result.steps_run;
        if (log_file) {
            nlohmann::json j{{"step", entry.step}, {"lr", entry.lr},
                             {"total", entry.total}, {"pop", entry.pop},
                             {"sep", entry.sep},     {"sem", entry.sem},
                             {"dep", entry.dep},     {"loc", entry.loc},
                             {"wtv", entry.wtv}};
            log_file << j.dump() << "\n";
        }

        st.step = step + 1;
        st.rng_state = rng.serialize();
        if (cfg.checkpoint_every > 0 && st.step % cfg.checkpoint_every == 0 &&
            st.step < total_steps)
            save_checkpoint(out_ckpt + ".step" + std::to_string(st.step), model, cfg, st);
    }

    st.rng_state = rng.serialize();
    save_checkpoint(out_ckpt, model, cfg, st);
    result.checkpoint_path = out_ckpt;
    return result;
}

InferenceOutputs run_inference(PopNetModel& model, const TrainConfig& cfg,
                               const RgbImage& rgb, const DepthMap& d_sf) {
    if (rgb.h() != d_sf.h() || rgb.w() != d_sf.w())
        throw ValidationError("inference: rgb and depth shapes differ");
    const int oh = rgb.h(), ow = rgb.w();
    const int res = cfg.resolution;
    RgbImage rgb_r(resize_bilinear(rgb.r, res, res), resize_bilinear(rgb.g, res, res),
                   resize_bilinear(rgb.b, res, res));
    DepthMap dsf_r(resize_bilinear(d_sf.data, res, res));

    InferenceOutputs out;
    DepthMap d_po = popping_forward(model.pop, rgb_r, dsf_r);
    auto [s_tilde, d_c] = segmentation_forward(model.seg, rgb_r, d_po);
    SoftMask s_s = pop_out_separation(d_po, ContactSurface(d_c.data), cfg.hp.separation());

    out.d_po = DepthMap(resize_bilinear(d_po.data, oh, ow));
    out.d_c = ContactSurface(resize_bilinear(d_c.data, oh, ow));
    out.s_tilde = SoftMask(resize_bilinear(s_tilde.data, oh, ow));
    out.s_s = SoftMask(resize_bilinear(s_s.data, oh, ow));
    out.hard_mask = hard_separation(out.s_tilde, 0.5);
    return out;
}

EvalOutputs evaluate_model(PopNetModel& model, const TrainConfig& cfg,
                           const std::string& data_dir, bool with_separation,
                           bool identity_oracle) {
    const auto index = index_dataset(data_dir);
    const size_t n = index.stems.size();
    EvalOutputs out;
    out.has_separation = with_separation;
    out.semantic.per_image.resize(n);
    if (with_separation) out.separation.per_image.resize(n);
    std::vector<double> ious(n, 0.0);
    std::vector<uint8_t> degenerate(n, 0);

    // Eval-mode forwards only read model state, so images fan out in parallel
    // and land at fixed indices.
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
        const auto sample = load_sample(index, index.stems[i]);
        SoftMask s_tilde(Gridf(sample.mask.h(), sample.mask.w(), 0.0f));
        SoftMask s_s = s_tilde;
        if (identity_oracle) {
            Gridf g(sample.mask.h(), sample.mask.w());
            for (size_t k = 0; k < g.v.size(); ++k) g.v[k] = sample.mask.data.v[k];
            s_tilde = SoftMask(g);
            s_s = SoftMask(std::move(g));
        } else {
            auto inf = run_inference(model, cfg, sample.rgb, sample.depth);
            s_tilde = inf.s_tilde;
            s_s = inf.s_s;
        }
        out.semantic.per_image[i].stem = index.stems[i];
        if (sample.mask.foreground_count() == 0) {
            degenerate[i] = 1;  // F-measure undefined; skipped from the report
        } else {
            out.semantic.per_image[i].m = compute_image_metrics(s_tilde, sample.mask);
            if (with_separation) {
                out.separation.per_image[i].stem = index.stems[i];
                out.separation.per_image[i].m = compute_image_metrics(s_s, sample.mask);
            }
        }
        ious[i] = binary_iou(hard_separation(s_tilde, 0.5), sample.mask);
    }

    auto finalize = [&](MetricsReport& r) {
        std::vector<MetricsReport::Entry> kept;
        for (size_t i = 0; i < r.per_image.size(); ++i) {
            if (degenerate[i])
                r.skipped.push_back(index.stems[i]);
            else
                kept.push_back(r.per_image[i]);
        }
        r.per_image = std::move(kept);
        if (r.per_image.empty()) throw DataError("evaluation found no usable ground truth");
        double sm = 0, sf = 0, ss = 0, se = 0;
        for (const auto& e : r.per_image) {
            sm += e.m.mae;
            sf += e.m.max_f;
            ss += e.m.s_measure;
            se += e.m.max_e;
        }
        const double cnt = static_cast<double>(r.per_image.size());
        r.mean = {sm / cnt, sf / cnt, ss / cnt, se / cnt};
    };
    finalize(out.semantic);
    if (with_separation) finalize(out.separation);
    double iou_sum = 0.0;
    for (double v : ious) iou_sum += v;
    out.mean_iou = iou_sum / static_cast<double>(n);
    return out;
}

}  // namespace popnet
