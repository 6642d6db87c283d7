#include "popnet/imgproc.hpp"

#include <cmath>

namespace popnet {

namespace {

inline float sample_bilinear(const Gridf& g, double y, double x) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    auto cl = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
    const float v00 = g.at(cl(y0, g.h - 1), cl(x0, g.w - 1));
    const float v01 = g.at(cl(y0, g.h - 1), cl(x0 + 1, g.w - 1));
    const float v10 = g.at(cl(y0 + 1, g.h - 1), cl(x0, g.w - 1));
    const float v11 = g.at(cl(y0 + 1, g.h - 1), cl(x0 + 1, g.w - 1));
    const double top = v00 + fx * (v01 - v00);
    const double bot = v10 + fx * (v11 - v10);
    return static_cast<float>(top + fy * (bot - top));
}

inline uint8_t sample_nearest(const Gridu8& g, double y, double x) {
    auto cl = [](long v, int hi) { return v < 0 ? 0 : (v > hi ? hi : static_cast<int>(v)); };
    return g.at(cl(std::lround(y), g.h - 1), cl(std::lround(x), g.w - 1));
}

}  // namespace

Gridf resize_bilinear(const Gridf& in, int oh, int ow) {
    if (oh == in.h && ow == in.w) return in;
    Gridf out(oh, ow);
    const double sy = static_cast<double>(in.h) / oh;
    const double sx = static_cast<double>(in.w) / ow;
    for (int r = 0; r < oh; ++r)
        for (int c = 0; c < ow; ++c)
            out.at(r, c) = sample_bilinear(in, (r + 0.5) * sy - 0.5, (c + 0.5) * sx - 0.5);
    return out;
}

Gridu8 resize_nearest(const Gridu8& in, int oh, int ow) {
    if (oh == in.h && ow == in.w) return in;
    Gridu8 out(oh, ow);
    const double sy = static_cast<double>(in.h) / oh;
    const double sx = static_cast<double>(in.w) / ow;
    for (int r = 0; r < oh; ++r)
        for (int c = 0; c < ow; ++c)
            out.at(r, c) = sample_nearest(in, (r + 0.5) * sy - 0.5, (c + 0.5) * sx - 0.5);
    return out;
}

Gridf rotate_bilinear(const Gridf& in, double degrees) {
    if (degrees == 0.0) return in;
    Gridf out(in.h, in.w);
    const double a = degrees * M_PI / 180.0;
    const double ca = std::cos(a), sa = std::sin(a);
    const double cy = (in.h - 1) / 2.0, cx = (in.w - 1) / 2.0;
    for (int r = 0; r < in.h; ++r)
        for (int c = 0; c < in.w; ++c) {
            const double dy = r - cy, dx = c - cx;
            out.at(r, c) =
                sample_bilinear(in, cy + sa * dx + ca * dy, cx + ca * dx - sa * dy);
        }
    return out;
}

Gridu8 rotate_nearest(const Gridu8& in, double degrees) {
    if (degrees == 0.0) return in;
    Gridu8 out(in.h, in.w);
    const double a = degrees * M_PI / 180.0;
    const double ca = std::cos(a), sa = std::sin(a);
    const double cy = (in.h - 1) / 2.0, cx = (in.w - 1) / 2.0;
    for (int r = 0; r < in.h; ++r)
        for (int c = 0; c < in.w; ++c) {
            const double dy = r - cy, dx = c - cx;
            out.at(r, c) = sample_nearest(in, cy + sa * dx + ca * dy, cx + ca * dx - sa * dy);
        }
    return out;
}

Gridf border_clip_bilinear(const Gridf& in, double frac) {
    if (frac <= 0.0) return in;
    const int dy = static_cast<int>(std::floor(in.h * frac));
    const int dx = static_cast<int>(std::floor(in.w * frac));
    if (dy == 0 && dx == 0) return in;
    Gridf cropped(in.h - 2 * dy, in.w - 2 * dx);
    for (int r = 0; r < cropped.h; ++r)
        for (int c = 0; c < cropped.w; ++c) cropped.at(r, c) = in.at(r + dy, c + dx);
    return resize_bilinear(cropped, in.h, in.w);
}

Gridu8 border_clip_nearest(const Gridu8& in, double frac) {
    if (frac <= 0.0) return in;
    const int dy = static_cast<int>(std::floor(in.h * frac));
    const int dx = static_cast<int>(std::floor(in.w * frac));
    if (dy == 0 && dx == 0) return in;
    Gridu8 cropped(in.h - 2 * dy, in.w - 2 * dx);
    for (int r = 0; r < cropped.h; ++r)
        for (int c = 0; c < cropped.w; ++c) cropped.at(r, c) = in.at(r + dy, c + dx);
    return resize_nearest(cropped, in.h, in.w);
}

Gridf box_blur(const Gridf& in, int radius) {
    if (radius <= 0) return in;
    auto cl = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
    Gridf tmp(in.h, in.w), out(in.h, in.w);
    const float inv = 1.0f / static_cast<float>(2 * radius + 1);
    for (int r = 0; r < in.h; ++r)
        for (int c = 0; c < in.w; ++c) {
            float s = 0.0f;
            for (int d = -radius; d <= radius; ++d) s += in.at(r, cl(c + d, in.w - 1));
            tmp.at(r, c) = s * inv;
        }
    for (int r = 0; r < in.h; ++r)
        for (int c = 0; c < in.w; ++c) {
            float s = 0.0f;
            for (int d = -radius; d <= radius; ++d) s += tmp.at(cl(r + d, in.h - 1), c);
            out.at(r, c) = s * inv;
        }
    return out;
}

Gridf warp_bilinear(const Gridf& in, const WarpField& f) {
    if (f.amplitude == 0.0) return in;
    Gridf out(in.h, in.w);
    for (int r = 0; r < in.h; ++r)
        for (int c = 0; c < in.w; ++c) {
            const double yn = static_cast<double>(r) / in.h;
            const double xn = static_cast<double>(c) / in.w;
            const double dx = f.amplitude * std::sin(2.0 * M_PI * (f.freq_x * yn + f.phase_x));
            const double dy = f.amplitude * std::sin(2.0 * M_PI * (f.freq_y * xn + f.phase_y));
            out.at(r, c) = sample_bilinear(in, r + dy, c + dx);
        }
    return out;
}

}  // namespace popnet
