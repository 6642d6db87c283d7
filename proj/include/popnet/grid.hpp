#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "popnet/errors.hpp"

namespace popnet {

// Dense row-major H x W grid.
template <typename T>
struct Grid {
    int h = 0;
    int w = 0;
    std::vector<T> v;

    Grid() = default;
    Grid(int h_, int w_, T fill = T(0)) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

    T& at(int r, int c) { return v[static_cast<size_t>(r) * w + c]; }
    const T& at(int r, int c) const { return v[static_cast<size_t>(r) * w + c]; }
    size_t size() const { return v.size(); }
    bool same_shape(const Grid& o) const { return h == o.h && w == o.w; }

    template <typename U>
    Grid<U> cast() const {
        Grid<U> g(h, w);
        for (size_t i = 0; i < v.size(); ++i) g.v[i] = static_cast<U>(v[i]);
        return g;
    }
};

using Gridf = Grid<float>;
using Gridd = Grid<double>;
using Gridu8 = Grid<uint8_t>;

template <typename T>
bool all_finite(const Grid<T>& g) {
    for (T x : g.v)
        if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
}

template <typename T>
bool in_unit_range(const Grid<T>& g) {
    for (T x : g.v)
        if (!(x >= T(0) && x <= T(1))) return false;
    return true;
}

// H x W relative nearness in [0,1]; larger values are closer to the camera.
struct DepthMap {
    Gridf data;

    DepthMap() = default;
    explicit DepthMap(Gridf g) : data(std::move(g)) { validate(); }

    void validate() const {
        if (!all_finite(data) || !in_unit_range(data))
            throw ValidationError("DepthMap: entries must be finite and in [0,1]");
    }
    int h() const { return data.h; }
    int w() const { return data.w; }
};

// H x W values in {0,1}.
struct BinaryMask {
    Gridu8 data;

    BinaryMask() = default;
    explicit BinaryMask(Gridu8 g) : data(std::move(g)) { validate(); }

    void validate() const {
        for (uint8_t x : data.v)
            if (x > 1) throw ValidationError("BinaryMask: entries must be 0 or 1");
    }
    int h() const { return data.h; }
    int w() const { return data.w; }
    size_t foreground_count() const {
        size_t n = 0;
        for (uint8_t x : data.v) n += x;
        return n;
    }
};

// H x W real values in [0,1].
struct SoftMask {
    Gridf data;

    SoftMask() = default;
    explicit SoftMask(Gridf g) : data(std::move(g)) { validate(); }

    void validate() const {
        if (!all_finite(data) || !in_unit_range(data))
            throw ValidationError("SoftMask: entries must be finite and in [0,1]");
    }
    int h() const { return data.h; }
    int w() const { return data.w; }
};

// Contact surface shares the nearness convention of DepthMap.
struct ContactSurface {
    Gridf data;

    ContactSurface() = default;
    explicit ContactSurface(Gridf g) : data(std::move(g)) { validate(); }

    void validate() const {
        if (!all_finite(data) || !in_unit_range(data))
            throw ValidationError("ContactSurface: entries must be finite and in [0,1]");
    }
    int h() const { return data.h; }
    int w() const { return data.w; }
};

// Planar RGB in [0,1].
struct RgbImage {
    Gridf r, g, b;

    RgbImage() = default;
    RgbImage(Gridf r_, Gridf g_, Gridf b_) : r(std::move(r_)), g(std::move(g_)), b(std::move(b_)) {
        validate();
    }

    void validate() const {
        if (!r.same_shape(g) || !r.same_shape(b))
            throw ValidationError("RgbImage: channel shapes differ");
        if (r.h < 8 || r.w < 8) throw ValidationError("RgbImage: spatial size must be >= 8");
        for (const Gridf* ch : {&r, &g, &b})
            if (!all_finite(*ch) || !in_unit_range(*ch))
                throw ValidationError("RgbImage: entries must be finite and in [0,1]");
    }
    int h() const { return r.h; }
    int w() const { return r.w; }
};

// Pair of Sobel responses.
template <typename T>
struct GradientField {
    Grid<T> gx, gy;
};

// One training record. Surface ground truth only exists for synthetic scenes.
struct SceneSample {
    std::string stem;
    RgbImage rgb;
    DepthMap depth;      // source depth fed to the popping network
    BinaryMask mask;     // ground-truth objects
    bool has_surface = false;
    ContactSurface surface;
};

}  // namespace popnet
