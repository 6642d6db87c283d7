#pragma once

// Small reverse-mode autodiff over dense NCHW tensors. Graphs are built per
// forward pass in an arena whose creation order is already topological, so
// backward() is a single reverse sweep. Templated on the scalar so losses can
// be checked in both float and double precision.

#include <omp.h>

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "popnet/errors.hpp"
#include "popnet/grid.hpp"

namespace popnet::ad {

template <typename T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_), v(static_cast<size_t>(n_) * c_ * h_ * w_, fill) {}

    static Tensor from_grid(const Grid<T>& g) {
        Tensor t(1, 1, g.h, g.w);
        t.v = g.v;
        return t;
    }
    Grid<T> to_grid() const {
        Grid<T> g(h, w);
        g.v = v;
        return g;
    }

    int64_t size() const { return static_cast<int64_t>(n) * c * h * w; }
    int64_t plane() const { return static_cast<int64_t>(h) * w; }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }
    T& at(int i, int j, int y, int x) {
        return v[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
    }
    const T& at(int i, int j, int y, int x) const {
        return v[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
    }
    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    T scalar() const { return v.at(0); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> t(n, c, h, w);
        for (int64_t i = 0; i < size(); ++i) t.v[i] = static_cast<U>(v[i]);
        return t;
    }
};

template <typename T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad;  // allocated on first accumulation during backward
    bool requires_grad = false;
    std::vector<Node*> parents;
    std::function<void(Node&)> backward;

    void accum(const T* g, int64_t len) {
        if (grad.v.empty()) grad = Tensor<T>(value.n, value.c, value.h, value.w);
        T* dst = grad.data();
        for (int64_t i = 0; i < len; ++i) dst[i] += g[i];
    }
    bool has_grad() const { return !grad.v.empty(); }
};

template <typename T>
class Var;

template <typename T>
class Graph {
public:
    Var<T> leaf(Tensor<T> value, bool requires_grad);
    Var<T> constant(Tensor<T> value) { return leaf(std::move(value), false); }

    Node<T>* make(Tensor<T> value, std::vector<Node<T>*> parents,
                  std::function<void(Node<T>&)> backward) {
        nodes_.emplace_back();
        Node<T>& nd = nodes_.back();
        nd.value = std::move(value);
        nd.parents = std::move(parents);
        nd.backward = std::move(backward);
        for (Node<T>* p : nd.parents)
            if (p && p->requires_grad) nd.requires_grad = true;
        return &nd;
    }

    // Reverse sweep from a scalar root. Arena order is topological.
    void backward(Node<T>* root) {
        if (root->value.size() != 1)
            throw ValidationError("backward: root must be a scalar");
        root->grad = Tensor<T>(1, 1, 1, 1, T(1));
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            Node<T>& nd = *it;
            if (!nd.requires_grad || !nd.has_grad() || !nd.backward) continue;
            nd.backward(nd);
        }
    }

    size_t num_nodes() const { return nodes_.size(); }

private:
    std::deque<Node<T>> nodes_;
};

template <typename T>
class Var {
public:
    Var() = default;
    Var(Graph<T>* g, Node<T>* n) : g_(g), n_(n) {}

    const Tensor<T>& val() const { return n_->value; }
    const Tensor<T>& grad() const { return n_->grad; }
    Node<T>* node() const { return n_; }
    Graph<T>* graph() const { return g_; }
    bool requires_grad() const { return n_->requires_grad; }
    T scalar() const { return n_->value.scalar(); }

private:
    Graph<T>* g_ = nullptr;
    Node<T>* n_ = nullptr;
};

template <typename T>
Var<T> Graph<T>::leaf(Tensor<T> value, bool requires_grad) {
    Node<T>* nd = make(std::move(value), {}, nullptr);
    nd->requires_grad = requires_grad;
    return Var<T>(this, nd);
}

namespace detail {
template <typename T>
void check_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
    if (!a.val().same_shape(b.val()))
        throw ValidationError(std::string(op) + ": shape mismatch");
}
}  // namespace detail

// ---- elementwise ----------------------------------------------------------

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
    detail::check_same_shape(a, b, "add");
    Tensor<T> out = a.val();
    const int64_t len = out.size();
    for (int64_t i = 0; i < len; ++i) out.v[i] += b.val().v[i];
    auto* nd = a.graph()->make(std::move(out), {a.node(), b.node()}, [len](Node<T>& nd) {
        for (Node<T>* p : nd.parents)
            if (p->requires_grad) p->accum(nd.grad.data(), len);
    });
    return Var<T>(a.graph(), nd);
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
    detail::check_same_shape(a, b, "sub");
    Tensor<T> out = a.val();
    const int64_t len = out.size();
    for (int64_t i = 0; i < len; ++i) out.v[i] -= b.val().v[i];
    auto* nd = a.graph()->make(std::move(out), {a.node(), b.node()}, [len](Node<T>& nd) {
        if (nd.parents[0]->requires_grad) nd.parents[0]->accum(nd.grad.data(), len);
        if (nd.parents[1]->requires_grad) {
            Node<T>* p = nd.parents[1];
            if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
            for (int64_t i = 0; i < len; ++i) p->grad.v[i] -= nd.grad.v[i];
        }
    });
    return Var<T>(a.graph(), nd);
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
    detail::check_same_shape(a, b, "mul");
    Tensor<T> out = a.val();
    const int64_t len = out.size();
    for (int64_t i = 0; i < len; ++i) out.v[i] *= b.val().v[i];
    auto* nd = a.graph()->make(std::move(out), {a.node(), b.node()}, [len](Node<T>& nd) {
        Node<T>*pa = nd.parents[0], *pb = nd.parents[1];
        if (pa->requires_grad) {
            if (pa->grad.v.empty()) pa->grad = Tensor<T>(pa->value.n, pa->value.c, pa->value.h, pa->value.w);
            for (int64_t i = 0; i < len; ++i) pa->grad.v[i] += nd.grad.v[i] * pb->value.v[i];
        }
        if (pb->requires_grad) {
            if (pb->grad.v.empty()) pb->grad = Tensor<T>(pb->value.n, pb->value.c, pb->value.h, pb->value.w);
            for (int64_t i = 0; i < len; ++i) pb->grad.v[i] += nd.grad.v[i] * pa->value.v[i];
        }
    });
    return Var<T>(a.graph(), nd);
}

template <typename T>
Var<T> div(Var<T> a, Var<T> b) {
    detail::check_same_shape(a, b, "div");
    Tensor<T> out = a.val();
    const int64_t len = out.size();
    for (int64_t i = 0; i < len; ++i) out.v[i] /= b.val().v[i];
    auto* nd = a.graph()->make(std::move(out), {a.node(), b.node()}, [len](Node<T>& nd) {
        Node<T>*pa = nd.parents[0], *pb = nd.parents[1];
        if (pa->requires_grad) {
            if (pa->grad.v.empty()) pa->grad = Tensor<T>(pa->value.n, pa->value.c, pa->value.h, pa->value.w);
            for (int64_t i = 0; i < len; ++i) pa->grad.v[i] += nd.grad.v[i] / pb->value.v[i];
        }
        if (pb->requires_grad) {
            if (pb->grad.v.empty()) pb->grad = Tensor<T>(pb->value.n, pb->value.c, pb->value.h, pb->value.w);
            for (int64_t i = 0; i < len; ++i) {
                const T bi = pb->value.v[i];
                pb->grad.v[i] -= nd.grad.v[i] * pa->value.v[i] / (bi * bi);
            }
        }
    });
    return Var<T>(a.graph(), nd);
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
    Tensor<T> out = a.val();
    const int64_t len = out.size();
    for (int64_t i = 0; i < len; ++i) out.v[i] *= s;
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [len, s](Node<T>& nd) {
        Node<T>* p = nd.parents[0];
        if (!p->requires_grad) return;
        if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
        for (int64_t i = 0; i < len; ++i) p->grad.v[i] += nd.grad.v[i] * s;
    });
    return Var<T>(a.graph(), nd);
}

template <typename T>
Var<T> add_const(Var<T> a, T s) {
    Tensor<T> out = a.val();
    const int64_t len = out.size();
    for (int64_t i = 0; i < len; ++i) out.v[i] += s;
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [len](Node<T>& nd) {
        if (nd.parents[0]->requires_grad) nd.parents[0]->accum(nd.grad.data(), len);
    });
    return Var<T>(a.graph(), nd);
}

template <typename T>
Var<T> relu(Var<T> a) {
    Tensor<T> out = a.val();
    const int64_t len = out.size();
    for (int64_t i = 0; i < len; ++i) out.v[i] = out.v[i] > T(0) ? out.v[i] : T(0);
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [len](Node<T>& nd) {
        Node<T>* p = nd.parents[0];
        if (!p->requires_grad) return;
        if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
        for (int64_t i = 0; i < len; ++i)
            if (p->value.v[i] > T(0)) p->grad.v[i] += nd.grad.v[i];
    });
    return Var<T>(a.graph(), nd);
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
    Tensor<T> out = a.val();
    const int64_t len = out.size();
    for (int64_t i = 0; i < len; ++i) out.v[i] = T(1) / (T(1) + std::exp(-out.v[i]));
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [len](Node<T>& nd) {
        Node<T>* p = nd.parents[0];
        if (!p->requires_grad) return;
        if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
        for (int64_t i = 0; i < len; ++i) {
            const T y = nd.value.v[i];
            p->grad.v[i] += nd.grad.v[i] * y * (T(1) - y);
        }
    });
    return Var<T>(a.graph(), nd);
}

template <typename T>
Var<T> log_op(Var<T> a) {
    Tensor<T> out = a.val();
    const int64_t len = out.size();
    for (int64_t i = 0; i < len; ++i) out.v[i] = std::log(out.v[i]);
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [len](Node<T>& nd) {
        Node<T>* p = nd.parents[0];
        if (!p->requires_grad) return;
        if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
        for (int64_t i = 0; i < len; ++i) p->grad.v[i] += nd.grad.v[i] / p->value.v[i];
    });
    return Var<T>(a.graph(), nd);
}

template <typename T>
Var<T> sqrt_op(Var<T> a) {
    Tensor<T> out = a.val();
    const int64_t len = out.size();
    for (int64_t i = 0; i < len; ++i) out.v[i] = std::sqrt(out.v[i]);
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [len](Node<T>& nd) {
        Node<T>* p = nd.parents[0];
        if (!p->requires_grad) return;
        if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
        for (int64_t i = 0; i < len; ++i)
            p->grad.v[i] += nd.grad.v[i] / (T(2) * nd.value.v[i]);
    });
    return Var<T>(a.graph(), nd);
}

template <typename T>
Var<T> abs_op(Var<T> a) {
    Tensor<T> out = a.val();
    const int64_t len = out.size();
    for (int64_t i = 0; i < len; ++i) out.v[i] = std::abs(out.v[i]);
    // Subgradient 0 at the kink.
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [len](Node<T>& nd) {
        Node<T>* p = nd.parents[0];
        if (!p->requires_grad) return;
        if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
        for (int64_t i = 0; i < len; ++i) {
            const T x = p->value.v[i];
            if (x > T(0))
                p->grad.v[i] += nd.grad.v[i];
            else if (x < T(0))
                p->grad.v[i] -= nd.grad.v[i];
        }
    });
    return Var<T>(a.graph(), nd);
}

// Gradient passes only strictly inside (lo, hi).
template <typename T>
Var<T> clamp_op(Var<T> a, T lo, T hi) {
    Tensor<T> out = a.val();
    const int64_t len = out.size();
    for (int64_t i = 0; i < len; ++i) out.v[i] = std::min(hi, std::max(lo, out.v[i]));
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [len, lo, hi](Node<T>& nd) {
        Node<T>* p = nd.parents[0];
        if (!p->requires_grad) return;
        if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
        for (int64_t i = 0; i < len; ++i) {
            const T x = p->value.v[i];
            if (x > lo && x < hi) p->grad.v[i] += nd.grad.v[i];
        }
    });
    return Var<T>(a.graph(), nd);
}

// max(x, floor); gradient passes where x > floor.
template <typename T>
Var<T> max_const(Var<T> a, T floor_v) {
    Tensor<T> out = a.val();
    const int64_t len = out.size();
    for (int64_t i = 0; i < len; ++i) out.v[i] = std::max(floor_v, out.v[i]);
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [len, floor_v](Node<T>& nd) {
        Node<T>* p = nd.parents[0];
        if (!p->requires_grad) return;
        if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
        for (int64_t i = 0; i < len; ++i)
            if (p->value.v[i] > floor_v) p->grad.v[i] += nd.grad.v[i];
    });
    return Var<T>(a.graph(), nd);
}

// ---- shape ops -------------------------------------------------------------

// Half-open ranges on every axis.
template <typename T>
Var<T> crop(Var<T> a, int n0, int n1, int c0, int c1, int y0, int y1, int x0, int x1) {
    const Tensor<T>& in = a.val();
    if (n0 < 0 || n1 > in.n || c0 < 0 || c1 > in.c || y0 < 0 || y1 > in.h || x0 < 0 ||
        x1 > in.w || n0 >= n1 || c0 >= c1 || y0 >= y1 || x0 >= x1)
        throw ValidationError("crop: range out of bounds");
    Tensor<T> out(n1 - n0, c1 - c0, y1 - y0, x1 - x0);
    for (int i = n0; i < n1; ++i)
        for (int j = c0; j < c1; ++j)
            for (int y = y0; y < y1; ++y) {
                const T* src = &in.at(i, j, y, x0);
                T* dst = &out.at(i - n0, j - c0, y - y0, 0);
                std::copy(src, src + (x1 - x0), dst);
            }
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [=](Node<T>& nd) {
        Node<T>* p = nd.parents[0];
        if (!p->requires_grad) return;
        if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
        for (int i = n0; i < n1; ++i)
            for (int j = c0; j < c1; ++j)
                for (int y = y0; y < y1; ++y) {
                    const T* src = &nd.grad.at(i - n0, j - c0, y - y0, 0);
                    T* dst = &p->grad.at(i, j, y, x0);
                    for (int x = 0; x < x1 - x0; ++x) dst[x] += src[x];
                }
    });
    return Var<T>(a.graph(), nd);
}

template <typename T>
Var<T> crop_x(Var<T> a, int x0, int x1) {
    const auto& t = a.val();
    return crop(a, 0, t.n, 0, t.c, 0, t.h, x0, x1);
}

template <typename T>
Var<T> crop_y(Var<T> a, int y0, int y1) {
    const auto& t = a.val();
    return crop(a, 0, t.n, 0, t.c, y0, y1, 0, t.w);
}

template <typename T>
Var<T> concat_c(const std::vector<Var<T>>& parts) {
    if (parts.empty()) throw ValidationError("concat_c: no inputs");
    const Tensor<T>& first = parts[0].val();
    int ctot = 0;
    for (const auto& p : parts) {
        const auto& t = p.val();
        if (t.n != first.n || t.h != first.h || t.w != first.w)
            throw ValidationError("concat_c: shape mismatch");
        ctot += t.c;
    }
    Tensor<T> out(first.n, ctot, first.h, first.w);
    std::vector<Node<T>*> parents;
    std::vector<int> csizes;
    int coff = 0;
    for (const auto& p : parts) {
        const auto& t = p.val();
        for (int i = 0; i < t.n; ++i)
            for (int j = 0; j < t.c; ++j)
                std::copy(&t.at(i, j, 0, 0), &t.at(i, j, 0, 0) + t.plane(),
                          &out.at(i, coff + j, 0, 0));
        parents.push_back(p.node());
        csizes.push_back(t.c);
        coff += t.c;
    }
    auto* nd = parts[0].graph()->make(std::move(out), std::move(parents),
                                      [csizes](Node<T>& nd) {
        int coff = 0;
        for (size_t k = 0; k < nd.parents.size(); ++k) {
            Node<T>* p = nd.parents[k];
            if (p->requires_grad) {
                if (p->grad.v.empty())
                    p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
                for (int i = 0; i < p->value.n; ++i)
                    for (int j = 0; j < csizes[k]; ++j) {
                        const T* src = &nd.grad.at(i, coff + j, 0, 0);
                        T* dst = &p->grad.at(i, j, 0, 0);
                        for (int64_t q = 0; q < p->value.plane(); ++q) dst[q] += src[q];
                    }
            }
            coff += csizes[k];
        }
    });
    return Var<T>(parts[0].graph(), nd);
}

template <typename T>
Var<T> pad_replicate(Var<T> a, int p) {
    const Tensor<T>& in = a.val();
    Tensor<T> out(in.n, in.c, in.h + 2 * p, in.w + 2 * p);
    auto clampi = [](int x, int lo, int hi) { return x < lo ? lo : (x > hi ? hi : x); };
    for (int i = 0; i < in.n; ++i)
        for (int j = 0; j < in.c; ++j)
            for (int y = 0; y < out.h; ++y)
                for (int x = 0; x < out.w; ++x)
                    out.at(i, j, y, x) =
                        in.at(i, j, clampi(y - p, 0, in.h - 1), clampi(x - p, 0, in.w - 1));
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [p, clampi](Node<T>& nd) {
        Node<T>* pa = nd.parents[0];
        if (!pa->requires_grad) return;
        if (pa->grad.v.empty()) pa->grad = Tensor<T>(pa->value.n, pa->value.c, pa->value.h, pa->value.w);
        const Tensor<T>& g = nd.grad;
        for (int i = 0; i < pa->value.n; ++i)
            for (int j = 0; j < pa->value.c; ++j)
                for (int y = 0; y < g.h; ++y)
                    for (int x = 0; x < g.w; ++x)
                        pa->grad.at(i, j, clampi(y - p, 0, pa->value.h - 1),
                                    clampi(x - p, 0, pa->value.w - 1)) += g.at(i, j, y, x);
    });
    return Var<T>(a.graph(), nd);
}

template <typename T>
Var<T> upsample_nearest2(Var<T> a) {
    const Tensor<T>& in = a.val();
    Tensor<T> out(in.n, in.c, in.h * 2, in.w * 2);
    for (int i = 0; i < in.n; ++i)
        for (int j = 0; j < in.c; ++j)
            for (int y = 0; y < out.h; ++y) {
                const T* src = &in.at(i, j, y / 2, 0);
                T* dst = &out.at(i, j, y, 0);
                for (int x = 0; x < out.w; ++x) dst[x] = src[x / 2];
            }
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [](Node<T>& nd) {
        Node<T>* p = nd.parents[0];
        if (!p->requires_grad) return;
        if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
        const Tensor<T>& g = nd.grad;
        for (int i = 0; i < p->value.n; ++i)
            for (int j = 0; j < p->value.c; ++j)
                for (int y = 0; y < g.h; ++y) {
                    const T* src = &g.at(i, j, y, 0);
                    T* dst = &p->grad.at(i, j, y / 2, 0);
                    for (int x = 0; x < g.w; ++x) dst[x / 2] += src[x];
                }
    });
    return Var<T>(a.graph(), nd);
}

// Mean over win x win windows, valid extent only.
template <typename T>
Var<T> box_mean_valid(Var<T> a, int win) {
    const Tensor<T>& in = a.val();
    if (win < 1 || in.h < win || in.w < win)
        throw ValidationError("box_mean_valid: window larger than input");
    const int oh = in.h - win + 1, ow = in.w - win + 1;
    const T inv = T(1) / (T(win) * T(win));
    Tensor<T> out(in.n, in.c, oh, ow);
    for (int i = 0; i < in.n; ++i)
        for (int j = 0; j < in.c; ++j)
            for (int y = 0; y < oh; ++y)
                for (int x = 0; x < ow; ++x) {
                    T s = T(0);
                    for (int dy = 0; dy < win; ++dy) {
                        const T* row = &in.at(i, j, y + dy, x);
                        for (int dx = 0; dx < win; ++dx) s += row[dx];
                    }
                    out.at(i, j, y, x) = s * inv;
                }
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [win, inv, oh, ow](Node<T>& nd) {
        Node<T>* p = nd.parents[0];
        if (!p->requires_grad) return;
        if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
        for (int i = 0; i < p->value.n; ++i)
            for (int j = 0; j < p->value.c; ++j)
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x) {
                        const T g = nd.grad.at(i, j, y, x) * inv;
                        for (int dy = 0; dy < win; ++dy) {
                            T* row = &p->grad.at(i, j, y + dy, x);
                            for (int dx = 0; dx < win; ++dx) row[dx] += g;
                        }
                    }
    });
    return Var<T>(a.graph(), nd);
}

// ---- reductions ------------------------------------------------------------

template <typename T>
Var<T> sum_all(Var<T> a) {
    const int64_t len = a.val().size();
    T s = T(0);
    for (int64_t i = 0; i < len; ++i) s += a.val().v[i];
    Tensor<T> out(1, 1, 1, 1, s);
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [len](Node<T>& nd) {
        Node<T>* p = nd.parents[0];
        if (!p->requires_grad) return;
        if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
        const T g = nd.grad.scalar();
        for (int64_t i = 0; i < len; ++i) p->grad.v[i] += g;
    });
    return Var<T>(a.graph(), nd);
}

template <typename T>
Var<T> mean_all(Var<T> a) {
    return scale(sum_all(a), T(1) / static_cast<T>(a.val().size()));
}

// Channel reduction keeping n,h,w.
template <typename T>
Var<T> sum_c(Var<T> a) {
    const Tensor<T>& in = a.val();
    Tensor<T> out(in.n, 1, in.h, in.w);
    for (int i = 0; i < in.n; ++i)
        for (int j = 0; j < in.c; ++j) {
            const T* src = &in.at(i, j, 0, 0);
            T* dst = &out.at(i, 0, 0, 0);
            for (int64_t q = 0; q < in.plane(); ++q) dst[q] += src[q];
        }
    auto* nd = a.graph()->make(std::move(out), {a.node()}, [](Node<T>& nd) {
        Node<T>* p = nd.parents[0];
        if (!p->requires_grad) return;
        if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, p->value.c, p->value.h, p->value.w);
        for (int i = 0; i < p->value.n; ++i)
            for (int j = 0; j < p->value.c; ++j) {
                const T* src = &nd.grad.at(i, 0, 0, 0);
                T* dst = &p->grad.at(i, j, 0, 0);
                for (int64_t q = 0; q < p->value.plane(); ++q) dst[q] += src[q];
            }
    });
    return Var<T>(a.graph(), nd);
}

}  // namespace popnet::ad
