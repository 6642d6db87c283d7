#include "popnet/gradcheck_suite.hpp"

#include <set>

#include "popnet/losses.hpp"
#include "popnet/rng.hpp"

namespace popnet {

namespace {

constexpr double kStep = 1e-4;

Gridd uniform_grid(int h, int w, Rng& rng, double lo, double hi) {
    Gridd g(h, w);
    for (auto& x : g.v) x = rng.uniform(lo, hi);
    return g;
}

// Adjacent differences stay away from the |.| kink so central differences
// remain valid for the TV loss.
Gridd kink_free_grid(int h, int w, Rng& rng, double margin = 1e-3) {
    for (int attempt = 0; attempt < 500; ++attempt) {
        Gridd g = uniform_grid(h, w, rng, 0.0, 1.0);
        bool ok = true;
        for (int r = 0; r < h && ok; ++r)
            for (int c = 0; c < w && ok; ++c) {
                if (c + 1 < w && std::abs(g.at(r, c) - g.at(r, c + 1)) < margin) ok = false;
                if (r + 1 < h && std::abs(g.at(r, c) - g.at(r + 1, c)) < margin) ok = false;
            }
        if (ok) return g;
    }
    throw NumericError("gradcheck: could not sample a kink-free grid");
}

BinaryMask random_mask(int h, int w, Rng& rng) {
    for (;;) {
        Gridu8 m(h, w);
        for (auto& x : m.v) x = rng.bernoulli(0.6) ? 1 : 0;
        BinaryMask mask(std::move(m));
        if (mask.foreground_count() > 0) return mask;
    }
}

template <typename T>
ad::Var<T> grid_const(ad::Graph<T>& g, const Gridd& gd) {
    ad::Tensor<T> t(1, 1, gd.h, gd.w);
    for (size_t i = 0; i < gd.v.size(); ++i) t.v[i] = static_cast<T>(gd.v[i]);
    return g.leaf(std::move(t), false);
}

template <typename T>
ad::Var<T> projection(ad::Graph<T>& g, ad::Var<T> map, uint64_t seed) {
    Rng r(seed);
    ad::Tensor<T> w(map.val().n, map.val().c, map.val().h, map.val().w);
    for (auto& x : w.v) x = static_cast<T>(r.uniform(-1.0, 1.0));
    return ad::sum_all(ad::mul(map, g.constant(std::move(w))));
}

template <typename F>
GradCheckResult run_one(const std::string& name, bool use_f64, F&& fn, const Gridd& x0,
                        double tol) {
    return use_f64 ? gradcheck_scalar_fn<double>(name, fn, x0, kStep, tol)
                   : gradcheck_scalar_fn<float>(name, fn, x0, kStep, tol);
}

}  // namespace

bool known_gradcheck_loss(const std::string& name) {
    static const std::set<std::string> known{"dep", "loc", "wtv", "pop",
                                             "sep", "sem", "separation", "all"};
    return known.count(name) > 0;
}

std::vector<GradCheckResult> run_gradcheck_suite(const std::string& loss_name, bool use_f64,
                                                 uint64_t seed, int instances) {
    if (!known_gradcheck_loss(loss_name))
        throw ValidationError("gradcheck: unknown loss '" + loss_name + "'");
    const bool all = loss_name == "all";
    const double tol = use_f64 ? 1e-6 : 1e-3;
    Rng rng(seed);
    SsimConfig ssim_cfg;
    WtvConfig wtv_cfg;
    SeparationConfig sep_cfg;
    std::vector<GradCheckResult> results;

    auto want = [&](const char* n) { return all || loss_name == n; };
    auto merge = [&](const std::string& name, GradCheckResult r) {
        for (auto& existing : results)
            if (existing.name == name) {
                existing.max_rel_err = std::max(existing.max_rel_err, r.max_rel_err);
                existing.pass = existing.pass && r.pass;
                return;
            }
        r.name = name;
        results.push_back(r);
    };

    for (int it = 0; it < instances; ++it) {
        const Gridd dsf = uniform_grid(8, 8, rng, 0.0, 1.0);
        const Gridd depth0 = kink_free_grid(8, 8, rng);
        const Gridd soft0 = uniform_grid(8, 8, rng, 0.1, 0.9);
        const Gridd other = uniform_grid(8, 8, rng, 0.0, 1.0);
        const BinaryMask mask = random_mask(8, 8, rng);
        const uint64_t pseed = rng.next_u64();

        if (want("dep"))
            merge("dep", run_one("dep", use_f64,
                                 [&](auto& g, auto d) {
                                     return structure_loss(d, grid_const(g, dsf), ssim_cfg);
                                 },
                                 depth0, tol));
        if (want("loc"))
            merge("loc", run_one("loc", use_f64,
                                 [&](auto&, auto d) { return local_smoothness_loss(d, mask); },
                                 depth0, tol));
        if (want("wtv"))
            merge("wtv", run_one("wtv", use_f64,
                                 [&](auto&, auto d) { return wtv_loss(d, mask, wtv_cfg); },
                                 depth0, tol));
        if (want("pop"))
            merge("pop", run_one("pop", use_f64,
                                 [&](auto& g, auto d) {
                                     return pop_loss(d, grid_const(g, dsf), mask,
                                                     PopLossWeights{}, ssim_cfg, wtv_cfg);
                                 },
                                 depth0, tol));
        if (want("sep"))
            merge("sep", run_one("sep", use_f64,
                                 [&](auto&, auto s) {
                                     return separation_loss(s, mask, sep_cfg);
                                 },
                                 soft0, tol));
        if (want("sem"))
            merge("sem", run_one("sem", use_f64,
                                 [&](auto&, auto s) { return semantic_loss(s, mask); },
                                 soft0, tol));
        if (want("separation")) {
            merge("separation(d_po)",
                  run_one("separation(d_po)", use_f64,
                          [&](auto& g, auto d) {
                              auto s = pop_out_separation_op(d, grid_const(g, other), sep_cfg);
                              return projection(g, s, pseed);
                          },
                          depth0, tol));
            merge("separation(d_c)",
                  run_one("separation(d_c)", use_f64,
                          [&](auto& g, auto d) {
                              auto s = pop_out_separation_op(grid_const(g, other), d, sep_cfg);
                              return projection(g, s, pseed);
                          },
                          depth0, tol));
        }
    }
    for (auto& r : results) r.tolerance = tol;
    return results;
}

}  // namespace popnet
