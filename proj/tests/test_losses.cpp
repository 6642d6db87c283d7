#include "popnet/losses.hpp"

#include <cmath>

#include "doctest.h"
#include "popnet/gradcheck.hpp"
#include "popnet/rng.hpp"

using namespace popnet;
using ad::Graph;
using ad::Tensor;
using ad::Var;

namespace {

Gridd random_unit_grid(int h, int w, Rng& rng) {
    Gridd g(h, w);
    for (auto& x : g.v) x = rng.uniform();
    return g;
}

BinaryMask block_mask(int h, int w, int r0, int r1, int c0, int c1) {
    Gridu8 m(h, w, 0);
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) m.at(r, c) = 1;
    return BinaryMask(std::move(m));
}

BinaryMask full_mask(int h, int w) { return block_mask(h, w, 0, h, 0, w); }

BinaryMask random_mask(int h, int w, Rng& rng, double p = 0.5) {
    Gridu8 m(h, w);
    for (auto& x : m.v) x = rng.bernoulli(p) ? 1 : 0;
    return BinaryMask(std::move(m));
}

template <typename T>
Var<T> grid_var(Graph<T>& g, const Gridd& gd, bool req = false) {
    Tensor<T> t(1, 1, gd.h, gd.w);
    for (size_t i = 0; i < gd.v.size(); ++i) t.v[i] = static_cast<T>(gd.v[i]);
    return g.leaf(std::move(t), req);
}

double structure_value(const Gridd& a, const Gridd& b, const SsimConfig& cfg = {}) {
    Graph<double> g;
    return structure_loss(grid_var(g, a), grid_var(g, b), cfg).scalar();
}

double loc_value(const Gridd& d, const BinaryMask& m) {
    Graph<double> g;
    return local_smoothness_loss(grid_var(g, d), m).scalar();
}

double wtv_value(const Gridd& d, const BinaryMask& m, const WtvConfig& cfg = {}) {
    Graph<double> g;
    return wtv_loss(grid_var(g, d), m, cfg).scalar();
}

// Independent brute-force oracle for the local smoothness loss: own Sobel,
// own interior test, ordered 4-connected pair enumeration.
double loc_oracle(const Gridd& d, const BinaryMask& g) {
    const int H = d.h, W = d.w;
    Gridd dobj(H, W);
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) dobj.at(r, c) = d.at(r, c) * g.data.at(r, c);
    auto pix = [&](int r, int c) {
        r = std::min(std::max(r, 0), H - 1);
        c = std::min(std::max(c, 0), W - 1);
        return dobj.at(r, c);
    };
    auto normal = [&](int r, int c) {
        const double gx = (pix(r - 1, c + 1) - pix(r - 1, c - 1)) +
                          2 * (pix(r, c + 1) - pix(r, c - 1)) +
                          (pix(r + 1, c + 1) - pix(r + 1, c - 1));
        const double gy = (pix(r + 1, c - 1) - pix(r - 1, c - 1)) +
                          2 * (pix(r + 1, c) - pix(r - 1, c)) +
                          (pix(r + 1, c + 1) - pix(r - 1, c + 1));
        return std::array<double, 3>{-gx, -gy, 1.0};
    };
    auto interior = [&](int r, int c) {
        if (r < 1 || r >= H - 1 || c < 1 || c >= W - 1) return false;
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc)
                if (!g.data.at(r + dr, c + dc)) return false;
        return true;
    };
    const int dr4[4] = {0, 0, 1, -1}, dc4[4] = {1, -1, 0, 0};
    double sum = 0.0;
    int64_t count = 0;
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            if (!interior(r, c)) continue;
            for (int k = 0; k < 4; ++k) {
                const int rq = r + dr4[k], cq = c + dc4[k];
                if (rq < 0 || rq >= H || cq < 0 || cq >= W || !interior(rq, cq)) continue;
                const auto np = normal(r, c), nq = normal(rq, cq);
                const double dot = np[0] * nq[0] + np[1] * nq[1] + np[2] * nq[2];
                const double lp = std::sqrt(np[0] * np[0] + np[1] * np[1] + 1.0);
                const double lq = std::sqrt(nq[0] * nq[0] + nq[1] * nq[1] + 1.0);
                sum += 1.0 - dot / (lp * lq);
                ++count;
            }
        }
    return count ? sum / count : 0.0;
}

// Independent brute-force oracle for the weighted TV loss over ordered pairs.
double wtv_oracle(const Gridd& d, const BinaryMask& g, double gamma) {
    const int H = d.h, W = d.w;
    auto mask = [&](int r, int c) {
        r = std::min(std::max(r, 0), H - 1);
        c = std::min(std::max(c, 0), W - 1);
        return static_cast<double>(g.data.at(r, c));
    };
    Grid<uint8_t> boundary(H, W, 0);
    int64_t bcount = 0;
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            const double gx = (mask(r - 1, c + 1) - mask(r - 1, c - 1)) +
                              2 * (mask(r, c + 1) - mask(r, c - 1)) +
                              (mask(r + 1, c + 1) - mask(r + 1, c - 1));
            const double gy = (mask(r + 1, c - 1) - mask(r - 1, c - 1)) +
                              2 * (mask(r + 1, c) - mask(r - 1, c)) +
                              (mask(r + 1, c + 1) - mask(r - 1, c + 1));
            if (gx * gx + gy * gy != 0.0) {
                boundary.at(r, c) = 1;
                ++bcount;
            }
        }
    const double w0 = static_cast<double>(bcount) / (double(H) * double(W));
    auto wgt = [&](int r, int c) { return boundary.at(r, c) ? w0 : w0 + gamma; };
    const int dr4[4] = {0, 0, 1, -1}, dc4[4] = {1, -1, 0, 0};
    double sum = 0.0;
    int64_t count = 0;
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            for (int k = 0; k < 4; ++k) {
                const int rq = r + dr4[k], cq = c + dc4[k];
                if (rq < 0 || rq >= H || cq < 0 || cq >= W) continue;
                sum += wgt(r, c) * std::abs(d.at(r, c) - d.at(rq, cq));
                ++count;
            }
    return sum / static_cast<double>(count);
}

Gridd dyadic_plane(int h, int w, double sr, double sc, double off = 0.0) {
    Gridd g(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) g.at(r, c) = off + sr * r + sc * c;
    return g;
}

// Random grid whose 4-connected differences stay away from the |.| kink so
// central differences remain valid for the TV loss.
Gridd kink_free_grid(int h, int w, Rng& rng, double margin = 1e-3) {
    for (int attempt = 0; attempt < 200; ++attempt) {
        Gridd g = random_unit_grid(h, w, rng);
        bool ok = true;
        for (int r = 0; r < h && ok; ++r)
            for (int c = 0; c < w && ok; ++c) {
                if (c + 1 < w && std::abs(g.at(r, c) - g.at(r, c + 1)) < margin) ok = false;
                if (r + 1 < h && std::abs(g.at(r, c) - g.at(r + 1, c)) < margin) ok = false;
            }
        if (ok) return g;
    }
    throw std::runtime_error("kink_free_grid: no sample found");
}

Gridd hflip(const Gridd& g) {
    Gridd out(g.h, g.w);
    for (int r = 0; r < g.h; ++r)
        for (int c = 0; c < g.w; ++c) out.at(r, c) = g.at(r, g.w - 1 - c);
    return out;
}

BinaryMask hflip(const BinaryMask& m) {
    Gridu8 out(m.h(), m.w());
    for (int r = 0; r < m.h(); ++r)
        for (int c = 0; c < m.w(); ++c) out.at(r, c) = m.data.at(r, m.w() - 1 - c);
    return BinaryMask(std::move(out));
}

}  // namespace

TEST_CASE("ssim_index examples") {
    Rng rng(1);
    Gridd a = random_unit_grid(8, 8, rng);
    SsimConfig cfg;

    SUBCASE("self similarity is exactly 1") {
        Graph<double> g;
        auto s = ssim_index(grid_var(g, a), grid_var(g, a), cfg);
        REQUIRE(s.val().h == 6);
        REQUIRE(s.val().w == 6);
        for (double v : s.val().v) CHECK(v == 1.0);
    }
    SUBCASE("closed form for two constants") {
        Gridd z(8, 8, 0.0), o(8, 8, 1.0);
        Graph<double> g;
        auto s = ssim_index(grid_var(g, z), grid_var(g, o), cfg);
        const double expect = (cfg.c1 * cfg.c2) / ((1.0 + cfg.c1) * cfg.c2);
        CHECK(expect == doctest::Approx(9.999000099990002e-05).epsilon(1e-12));
        for (double v : s.val().v) CHECK(v == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("symmetric in the two inputs") {
        Gridd b = random_unit_grid(8, 8, rng);
        Graph<double> g;
        auto s1 = ssim_index(grid_var(g, a), grid_var(g, b), cfg);
        auto s2 = ssim_index(grid_var(g, b), grid_var(g, a), cfg);
        for (size_t i = 0; i < s1.val().v.size(); ++i)
            CHECK(s1.val().v[i] == doctest::Approx(s2.val().v[i]).epsilon(1e-12));
    }
    SUBCASE("shape mismatch rejected") {
        Gridd b = random_unit_grid(8, 7, rng);
        Graph<double> g;
        CHECK_THROWS_AS(ssim_index(grid_var(g, a), grid_var(g, b), cfg), ValidationError);
    }
}

TEST_CASE("structure_loss examples") {
    Rng rng(2);
    SUBCASE("identity gives exactly zero") {
        Gridd a = random_unit_grid(8, 8, rng);
        CHECK(structure_value(a, a) == 0.0);
    }
    SUBCASE("constant 0 vs constant 1") {
        Gridd z(8, 8, 0.0), o(8, 8, 1.0);
        const double expect = 0.5 * (1.0 - 9.999000099990002e-05);
        CHECK(structure_value(z, o) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(structure_value(z, o) == doctest::Approx(0.49995).epsilon(1e-6));
    }
    SUBCASE("bounded in [0,1] on random pairs") {
        for (int it = 0; it < 100; ++it) {
            Gridd a = random_unit_grid(8, 8, rng), b = random_unit_grid(8, 8, rng);
            const double v = structure_value(a, b);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("normal_field examples") {
    SUBCASE("constant depth -> (0,0,1)") {
        Graph<double> g;
        auto n = normal_field(grid_var(g, Gridd(5, 5, 0.42)));
        for (int r = 0; r < 5; ++r)
            for (int c = 0; c < 5; ++c) {
                CHECK(n.val().at(0, 0, r, c) == 0.0);
                CHECK(n.val().at(0, 1, r, c) == 0.0);
                CHECK(n.val().at(0, 2, r, c) == 1.0);
            }
    }
    SUBCASE("column ramp 0,0.5,1 -> center normal (-4,0,1)") {
        Gridd ramp(3, 3);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) ramp.at(r, c) = 0.5 * c;
        Graph<double> g;
        auto n = normal_field(grid_var(g, ramp));
        CHECK(n.val().at(0, 0, 1, 1) == doctest::Approx(-4.0).epsilon(1e-12));
        CHECK(n.val().at(0, 1, 1, 1) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(n.val().at(0, 2, 1, 1) == 1.0);
    }
    SUBCASE("planar ramp has one interior normal") {
        Gridd plane = dyadic_plane(8, 8, 1.0 / 32, 1.0 / 64);
        Graph<double> g;
        auto n = normal_field(grid_var(g, plane));
        const double nx = n.val().at(0, 0, 3, 3), ny = n.val().at(0, 1, 3, 3);
        for (int r = 1; r < 7; ++r)
            for (int c = 1; c < 7; ++c) {
                CHECK(n.val().at(0, 0, r, c) == nx);
                CHECK(n.val().at(0, 1, r, c) == ny);
            }
    }
}

TEST_CASE("local_smoothness_loss examples and oracle") {
    Rng rng(3);
    SUBCASE("constant depth -> exactly 0") {
        CHECK(loc_value(Gridd(8, 8, 0.37), full_mask(8, 8)) == 0.0);
        CHECK(loc_value(Gridd(8, 8, 0.37), block_mask(8, 8, 1, 7, 1, 7)) == 0.0);
    }
    SUBCASE("planar depth in a 6x6 block -> exactly 0") {
        Gridd plane = dyadic_plane(8, 8, 1.0 / 32, 1.0 / 64);
        CHECK(loc_value(plane, block_mask(8, 8, 1, 7, 1, 7)) == 0.0);
    }
    SUBCASE("two half-planes match the brute-force oracle") {
        Gridd d(8, 8);
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 8; ++c) d.at(r, c) = c < 4 ? 0.2 : 0.2 + 0.5 * (c - 4) / 8.0;
        const auto m = full_mask(8, 8);
        const double v = loc_value(d, m);
        CHECK(v > 0.0);
        CHECK(v == doctest::Approx(loc_oracle(d, m)).epsilon(1e-9));
    }
    SUBCASE("random instances match the oracle") {
        for (int it = 0; it < 25; ++it) {
            Gridd d = random_unit_grid(10, 9, rng);
            BinaryMask m = random_mask(10, 9, rng, 0.7);
            if (m.foreground_count() == 0) continue;
            CHECK(loc_value(d, m) == doctest::Approx(loc_oracle(d, m)).epsilon(1e-9));
        }
    }
    SUBCASE("invariant to a constant shift of the depth") {
        Gridd d = random_unit_grid(8, 8, rng);
        for (auto& x : d.v) x *= 0.5;
        Gridd shifted = d;
        for (auto& x : shifted.v) x += 0.25;
        const auto m = block_mask(8, 8, 1, 7, 1, 7);
        CHECK(loc_value(d, m) == doctest::Approx(loc_value(shifted, m)).epsilon(1e-12));
    }
    SUBCASE("empty foreground rejected") {
        Graph<double> g;
        auto d = grid_var(g, Gridd(8, 8, 0.5));
        CHECK_THROWS_AS(local_smoothness_loss(d, block_mask(8, 8, 0, 0, 0, 0)),
                        ValidationError);
    }
    SUBCASE("no valid pair -> 0") {
        CHECK(loc_value(random_unit_grid(8, 8, rng), block_mask(8, 8, 3, 5, 3, 5)) == 0.0);
    }
}

TEST_CASE("wtv_loss examples and oracle") {
    Rng rng(4);
    WtvConfig cfg;  // gamma = 0.5
    SUBCASE("constant depth -> exactly 0") {
        CHECK(wtv_value(Gridd(8, 8, 0.61), random_mask(8, 8, rng), cfg) == 0.0);
    }
    SUBCASE("handcrafted 8x8 weights: w0 = 0.25, elsewhere 0.75") {
        const auto m = block_mask(8, 8, 3, 5, 3, 5);
        const Gridd wg = wtv_weight_grid(m, cfg);
        const auto boundary = boundary_map(m);
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 8; ++c)
                CHECK(wg.at(r, c) == (boundary.data.at(r, c) ? 0.25 : 0.75));
    }
    SUBCASE("zero-boundary mask falls back to w0 = 0") {
        const Gridd wg = wtv_weight_grid(full_mask(8, 8), cfg);
        for (double v : wg.v) CHECK(v == 0.5);
    }
    SUBCASE("degree-1 homogeneity") {
        Gridd d = random_unit_grid(8, 8, rng);
        const auto m = random_mask(8, 8, rng);
        const double base = wtv_value(d, m, cfg);
        for (double s : {0.0, 0.25, 0.5, 1.0}) {
            Gridd ds = d;
            for (auto& x : ds.v) x *= s;
            CHECK(wtv_value(ds, m, cfg) == doctest::Approx(s * base).epsilon(1e-12));
        }
    }
    SUBCASE("random instances match the ordered-pair oracle") {
        for (int it = 0; it < 25; ++it) {
            Gridd d = random_unit_grid(9, 11, rng);
            const auto m = random_mask(9, 11, rng);
            CHECK(wtv_value(d, m, cfg) ==
                  doctest::Approx(wtv_oracle(d, m, cfg.gamma)).epsilon(1e-9));
        }
    }
}

TEST_CASE("pop_loss composition") {
    Rng rng(5);
    Gridd dpo = random_unit_grid(8, 8, rng), dsf = random_unit_grid(8, 8, rng);
    const auto m = block_mask(8, 8, 2, 7, 1, 6);
    SsimConfig scfg;
    WtvConfig wcfg;

    SUBCASE("lambda = 0 reduces to structure loss") {
        Graph<double> g;
        PopLossWeights w{0.0, 0.0};
        const double v =
            pop_loss(grid_var(g, dpo), grid_var(g, dsf), m, w, scfg, wcfg).scalar();
        CHECK(v == structure_value(dpo, dsf, scfg));
    }
    SUBCASE("constant equal inputs give zero") {
        Graph<double> g;
        PopLossWeights w{1.0, 1.0};
        Gridd flat(8, 8, 0.5);
        CHECK(pop_loss(grid_var(g, flat), grid_var(g, flat), m, w, scfg, wcfg).scalar() == 0.0);
    }
    SUBCASE("matches the sum of individually computed components") {
        PopLossWeights w{1.0, 1.0};
        Graph<double> g;
        const double total =
            pop_loss(grid_var(g, dpo), grid_var(g, dsf), m, w, scfg, wcfg).scalar();
        const double parts = structure_value(dpo, dsf, scfg) + w.lambda1 * loc_value(dpo, m) +
                             w.lambda2 * wtv_value(dpo, m, wcfg);
        CHECK(total == doctest::Approx(parts).epsilon(1e-15));
    }
    SUBCASE("linear in the lambdas") {
        const double dep = structure_value(dpo, dsf, scfg);
        const double loc = loc_value(dpo, m);
        const double wtv = wtv_value(dpo, m, wcfg);
        for (double l1 : {0.0, 0.3, 2.0})
            for (double l2 : {0.0, 0.7, 1.5}) {
                Graph<double> g;
                PopLossWeights w{l1, l2};
                const double v =
                    pop_loss(grid_var(g, dpo), grid_var(g, dsf), m, w, scfg, wcfg).scalar();
                CHECK(v == doctest::Approx(dep + l1 * loc + l2 * wtv).epsilon(1e-12));
            }
    }
    SUBCASE("all losses are nonnegative on random inputs") {
        for (int it = 0; it < 50; ++it) {
            Gridd a = random_unit_grid(8, 8, rng), b = random_unit_grid(8, 8, rng);
            const auto mm = random_mask(8, 8, rng, 0.6);
            CHECK(structure_value(a, b, scfg) >= 0.0);
            if (mm.foreground_count() > 0) CHECK(loc_value(a, mm) >= 0.0);
            CHECK(wtv_value(a, mm, wcfg) >= 0.0);
        }
    }
}

TEST_CASE("joint horizontal flip leaves the pop losses unchanged") {
    Rng rng(6);
    SsimConfig scfg;
    WtvConfig wcfg;
    for (int it = 0; it < 10; ++it) {
        Gridd dpo = random_unit_grid(8, 10, rng), dsf = random_unit_grid(8, 10, rng);
        const auto m = random_mask(8, 10, rng, 0.6);
        if (m.foreground_count() == 0) continue;
        CHECK(structure_value(dpo, dsf, scfg) ==
              doctest::Approx(structure_value(hflip(dpo), hflip(dsf), scfg)).epsilon(1e-12));
        CHECK(loc_value(dpo, m) == doctest::Approx(loc_value(hflip(dpo), hflip(m))).epsilon(1e-12));
        CHECK(wtv_value(dpo, m, wcfg) ==
              doctest::Approx(wtv_value(hflip(dpo), hflip(m), wcfg)).epsilon(1e-12));
    }
}

TEST_CASE("semantic_loss examples") {
    Rng rng(7);
    SUBCASE("perfect prediction is approximately zero") {
        const auto g = random_mask(8, 8, rng);
        Gridd s(8, 8);
        for (size_t i = 0; i < s.v.size(); ++i) s.v[i] = g.data.v[i];
        Graph<double> gr;
        CHECK(semantic_loss(grid_var(gr, s), g).scalar() <= 1e-5);
    }
    SUBCASE("uniform 0.5 on half-ones mask") {
        Gridu8 m(8, 8, 0);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 8; ++c) m.at(r, c) = 1;
        BinaryMask g(m);
        Graph<double> gr;
        const double v = semantic_loss(grid_var(gr, Gridd(8, 8, 0.5)), g).scalar();
        CHECK(v == doctest::Approx(std::log(2.0) + (1.0 - 1.0 / 3.0)).epsilon(1e-7));
    }
    SUBCASE("loss decreases monotonically toward the target") {
        const auto g = random_mask(8, 8, rng);
        double prev = std::numeric_limits<double>::infinity();
        for (double t : {0.0, 0.2, 0.4, 0.6, 0.8, 0.99}) {
            Gridd s(8, 8);
            for (size_t i = 0; i < s.v.size(); ++i)
                s.v[i] = 0.5 + t * (static_cast<double>(g.data.v[i]) - 0.5);
            Graph<double> gr;
            const double v = semantic_loss(grid_var(gr, s), g).scalar();
            CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("gradient checks for the pop losses") {
    Rng rng(8);
    SsimConfig scfg;
    WtvConfig wcfg;
    const double f64_tol = 1e-6, f32_tol = 1e-3, step = 1e-4;

    for (int it = 0; it < 10; ++it) {
        const Gridd dsf = random_unit_grid(8, 8, rng);
        const Gridd x0 = kink_free_grid(8, 8, rng);
        const BinaryMask m = random_mask(8, 8, rng, 0.7);
        if (m.foreground_count() == 0) continue;

        auto dep_fn = [&](auto& g, auto d) {
            return structure_loss(d, grid_var(g, dsf), scfg);
        };
        auto loc_fn = [&](auto& g, auto d) {
            (void)g;
            return local_smoothness_loss(d, m);
        };
        auto wtv_fn = [&](auto& g, auto d) {
            (void)g;
            return wtv_loss(d, m, wcfg);
        };
        auto pop_fn = [&](auto& g, auto d) {
            return pop_loss(d, grid_var(g, dsf), m, PopLossWeights{1.0, 1.0}, scfg, wcfg);
        };

        CHECK(gradcheck_scalar_fn<double>("dep", dep_fn, x0, step, f64_tol).pass);
        CHECK(gradcheck_scalar_fn<double>("loc", loc_fn, x0, step, f64_tol).pass);
        CHECK(gradcheck_scalar_fn<double>("wtv", wtv_fn, x0, step, f64_tol).pass);
        CHECK(gradcheck_scalar_fn<double>("pop", pop_fn, x0, step, f64_tol).pass);
        CHECK(gradcheck_scalar_fn<float>("dep32", dep_fn, x0, step, f32_tol).pass);
        CHECK(gradcheck_scalar_fn<float>("loc32", loc_fn, x0, step, f32_tol).pass);
        CHECK(gradcheck_scalar_fn<float>("wtv32", wtv_fn, x0, step, f32_tol).pass);
    }
}

TEST_CASE("structure_loss gradient vanishes at the minimum") {
    Rng rng(9);
    Gridd a = random_unit_grid(8, 8, rng);
    Graph<double> g;
    auto d = grid_var(g, a, true);
    auto loss = structure_loss(d, grid_var(g, a), SsimConfig{});
    g.backward(loss.node());
    // Clamped DSSIM has zero slope at the self-similarity point.
    if (!d.grad().v.empty())
        for (double x : d.grad().v) CHECK(x == 0.0);
}

TEST_CASE("total_loss arithmetic and validation") {
    CHECK(total_loss(0.0, 0.0, 0.0, TotalLossWeights{1, 1}) == 0.0);
    CHECK(total_loss(0.7, 123.0, 9.0, TotalLossWeights{0, 0}) == 0.7);
    CHECK(total_loss(0.1, 0.2, 0.3, TotalLossWeights{1, 1}) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK_THROWS_AS(total_loss(-0.1, 0.0, 0.0, TotalLossWeights{1, 1}), ValidationError);
}
