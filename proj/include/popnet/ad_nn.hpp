#pragma once

// conv2d / batchnorm autodiff ops. Convolution is correlation (no kernel flip),
// im2col + Eigen GEMM per sample, parallel over the batch. Per-sample weight
// gradients are reduced in sample order so results do not depend on the
// thread count.

#include "popnet/ad.hpp"

namespace popnet::ad {

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// col buffer layout: K = c*kh*kw rows, oh*ow columns (row-major).
template <typename T>
void im2col(const Tensor<T>& in, int sample, int kh, int kw, int stride, int pad,
            int oh, int ow, T* col) {
    const int K = in.c * kh * kw;
    for (int k = 0; k < K; ++k) {
        const int j = k / (kh * kw);
        const int dy = (k / kw) % kh;
        const int dx = k % kw;
        T* dst = col + static_cast<int64_t>(k) * oh * ow;
        for (int y = 0; y < oh; ++y) {
            const int sy = y * stride + dy - pad;
            if (sy < 0 || sy >= in.h) {
                std::fill(dst, dst + ow, T(0));
                dst += ow;
                continue;
            }
            const T* src = &in.at(sample, j, sy, 0);
            for (int x = 0; x < ow; ++x) {
                const int sx = x * stride + dx - pad;
                dst[x] = (sx < 0 || sx >= in.w) ? T(0) : src[sx];
            }
            dst += ow;
        }
    }
}

template <typename T>
void col2im_add(const T* col, int c, int kh, int kw, int stride, int pad, int oh, int ow,
                Tensor<T>& out, int sample) {
    const int K = c * kh * kw;
    for (int k = 0; k < K; ++k) {
        const int j = k / (kh * kw);
        const int dy = (k / kw) % kh;
        const int dx = k % kw;
        const T* src = col + static_cast<int64_t>(k) * oh * ow;
        for (int y = 0; y < oh; ++y) {
            const int sy = y * stride + dy - pad;
            if (sy < 0 || sy >= out.h) {
                src += ow;
                continue;
            }
            T* dst = &out.at(sample, j, sy, 0);
            for (int x = 0; x < ow; ++x) {
                const int sx = x * stride + dx - pad;
                if (sx >= 0 && sx < out.w) dst[sx] += src[x];
            }
            src += ow;
        }
    }
}

}  // namespace detail

// x: N x C x H x W, weight: OC x (C*kh*kw) flattened as Tensor(oc, c, kh, kw),
// bias: Tensor(1, oc, 1, 1) or empty Var for none.
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> weight, Var<T> bias, int stride, int pad) {
    const Tensor<T>& in = x.val();
    const Tensor<T>& wt = weight.val();
    const bool has_bias = bias.node() != nullptr;
    if (wt.c != in.c) throw ValidationError("conv2d: channel mismatch");
    const int kh = wt.h, kw = wt.w, oc = wt.n;
    const int oh = (in.h + 2 * pad - kh) / stride + 1;
    const int ow = (in.w + 2 * pad - kw) / stride + 1;
    if (oh <= 0 || ow <= 0) throw ValidationError("conv2d: output would be empty");
    const int K = in.c * kh * kw;
    const int64_t ohw = static_cast<int64_t>(oh) * ow;

    Tensor<T> out(in.n, oc, oh, ow);
    {
        Eigen::Map<const detail::RowMat<T>> W(wt.data(), oc, K);
#pragma omp parallel
        {
            std::vector<T> col(static_cast<size_t>(K) * ohw);
#pragma omp for schedule(static)
            for (int i = 0; i < in.n; ++i) {
                detail::im2col(in, i, kh, kw, stride, pad, oh, ow, col.data());
                Eigen::Map<const detail::RowMat<T>> C(col.data(), K, ohw);
                Eigen::Map<detail::RowMat<T>> O(&out.at(i, 0, 0, 0), oc, ohw);
                O.noalias() = W * C;
            }
        }
        if (has_bias) {
            const T* b = bias.val().data();
            for (int i = 0; i < in.n; ++i)
                for (int j = 0; j < oc; ++j) {
                    T* dst = &out.at(i, j, 0, 0);
                    for (int64_t q = 0; q < ohw; ++q) dst[q] += b[j];
                }
        }
    }

    std::vector<Node<T>*> parents{x.node(), weight.node()};
    if (has_bias) parents.push_back(bias.node());
    auto* nd = x.graph()->make(
        std::move(out), std::move(parents),
        [kh, kw, stride, pad, oh, ow, oc, K, ohw, has_bias](Node<T>& nd) {
            Node<T>* px = nd.parents[0];
            Node<T>* pw = nd.parents[1];
            const Tensor<T>& in = px->value;
            const Tensor<T>& wt = pw->value;
            const Tensor<T>& go = nd.grad;

            if (px->requires_grad && px->grad.v.empty())
                px->grad = Tensor<T>(in.n, in.c, in.h, in.w);
            if (pw->requires_grad && pw->grad.v.empty())
                pw->grad = Tensor<T>(wt.n, wt.c, wt.h, wt.w);

            // dX: parallel over samples (disjoint writes).
            if (px->requires_grad) {
                Eigen::Map<const detail::RowMat<T>> W(wt.data(), oc, K);
#pragma omp parallel
                {
                    std::vector<T> dcol(static_cast<size_t>(K) * ohw);
#pragma omp for schedule(static)
                    for (int i = 0; i < in.n; ++i) {
                        Eigen::Map<const detail::RowMat<T>> G(&go.at(i, 0, 0, 0), oc, ohw);
                        Eigen::Map<detail::RowMat<T>> D(dcol.data(), K, ohw);
                        D.noalias() = W.transpose() * G;
                        detail::col2im_add(dcol.data(), in.c, kh, kw, stride, pad, oh, ow,
                                           px->grad, i);
                    }
                }
            }

            // dW: per-sample slabs reduced in index order for determinism.
            if (pw->requires_grad) {
                const int64_t wlen = wt.size();
                std::vector<T> slabs(static_cast<size_t>(in.n) * wlen);
#pragma omp parallel
                {
                    std::vector<T> col(static_cast<size_t>(K) * ohw);
#pragma omp for schedule(static)
                    for (int i = 0; i < in.n; ++i) {
                        detail::im2col(in, i, kh, kw, stride, pad, oh, ow, col.data());
                        Eigen::Map<const detail::RowMat<T>> C(col.data(), K, ohw);
                        Eigen::Map<const detail::RowMat<T>> G(&go.at(i, 0, 0, 0), oc, ohw);
                        Eigen::Map<detail::RowMat<T>> S(&slabs[static_cast<size_t>(i) * wlen],
                                                        oc, K);
                        S.noalias() = G * C.transpose();
                    }
                }
                for (int i = 0; i < in.n; ++i) {
                    const T* s = &slabs[static_cast<size_t>(i) * wlen];
                    for (int64_t q = 0; q < wlen; ++q) pw->grad.v[q] += s[q];
                }
            }

            if (has_bias) {
                Node<T>* pb = nd.parents[2];
                if (pb->requires_grad) {
                    if (pb->grad.v.empty()) pb->grad = Tensor<T>(1, oc, 1, 1);
                    for (int i = 0; i < in.n; ++i)
                        for (int j = 0; j < oc; ++j) {
                            const T* src = &go.at(i, j, 0, 0);
                            T s = T(0);
                            for (int64_t q = 0; q < ohw; ++q) s += src[q];
                            pb->grad.v[j] += s;
                        }
                }
            }
        });
    return Var<T>(x.graph(), nd);
}

template <typename T>
Var<T> conv2d_nobias(Var<T> x, Var<T> weight, int stride, int pad) {
    return conv2d(x, weight, Var<T>(), stride, pad);
}

// Batch normalization. Training mode uses batch statistics (biased variance
// for normalization, unbiased pushed into the running estimate, matching the
// usual convention); eval mode uses the provided running stats.
template <typename T>
Var<T> batchnorm(Var<T> x, Var<T> gamma, Var<T> beta, Tensor<T>* running_mean,
                 Tensor<T>* running_var, bool training, T momentum, T eps) {
    const Tensor<T>& in = x.val();
    const int C = in.c;
    const int64_t cnt = static_cast<int64_t>(in.n) * in.h * in.w;
    if (gamma.val().size() != C || beta.val().size() != C)
        throw ValidationError("batchnorm: parameter size mismatch");

    std::vector<T> mean(C), invstd(C);
    if (training) {
        if (cnt < 2) throw ValidationError("batchnorm: needs >= 2 values per channel");
        for (int j = 0; j < C; ++j) {
            T s = T(0);
            for (int i = 0; i < in.n; ++i) {
                const T* src = &in.at(i, j, 0, 0);
                for (int64_t q = 0; q < in.plane(); ++q) s += src[q];
            }
            const T mu = s / static_cast<T>(cnt);
            T v = T(0);
            for (int i = 0; i < in.n; ++i) {
                const T* src = &in.at(i, j, 0, 0);
                for (int64_t q = 0; q < in.plane(); ++q) {
                    const T d = src[q] - mu;
                    v += d * d;
                }
            }
            const T var_b = v / static_cast<T>(cnt);
            mean[j] = mu;
            invstd[j] = T(1) / std::sqrt(var_b + eps);
            if (running_mean && running_var) {
                const T var_u = v / static_cast<T>(cnt - 1);
                running_mean->v[j] += momentum * (mu - running_mean->v[j]);
                running_var->v[j] += momentum * (var_u - running_var->v[j]);
            }
        }
    } else {
        if (!running_mean || !running_var)
            throw ValidationError("batchnorm: eval mode needs running stats");
        for (int j = 0; j < C; ++j) {
            mean[j] = running_mean->v[j];
            invstd[j] = T(1) / std::sqrt(running_var->v[j] + eps);
        }
    }

    Tensor<T> out(in.n, in.c, in.h, in.w);
    const T* gm = gamma.val().data();
    const T* bt = beta.val().data();
    for (int i = 0; i < in.n; ++i)
        for (int j = 0; j < C; ++j) {
            const T* src = &in.at(i, j, 0, 0);
            T* dst = &out.at(i, j, 0, 0);
            const T mu = mean[j], is = invstd[j], g = gm[j], b = bt[j];
            for (int64_t q = 0; q < in.plane(); ++q) dst[q] = (src[q] - mu) * is * g + b;
        }

    auto* nd = x.graph()->make(
        std::move(out), {x.node(), gamma.node(), beta.node()},
        [mean, invstd, training, cnt](Node<T>& nd) {
            Node<T>* px = nd.parents[0];
            Node<T>* pg = nd.parents[1];
            Node<T>* pb = nd.parents[2];
            const Tensor<T>& in = px->value;
            const Tensor<T>& go = nd.grad;
            const int C = in.c;
            const T* gm = pg->value.data();

            std::vector<T> dgamma(C, T(0)), dbeta(C, T(0)), dxhat_sum(C, T(0)),
                dxhat_xhat_sum(C, T(0));
            for (int j = 0; j < C; ++j) {
                for (int i = 0; i < in.n; ++i) {
                    const T* xs = &in.at(i, j, 0, 0);
                    const T* gs = &go.at(i, j, 0, 0);
                    for (int64_t q = 0; q < in.plane(); ++q) {
                        const T xhat = (xs[q] - mean[j]) * invstd[j];
                        dgamma[j] += gs[q] * xhat;
                        dbeta[j] += gs[q];
                        dxhat_xhat_sum[j] += gs[q] * xhat;
                        dxhat_sum[j] += gs[q];
                    }
                }
            }
            if (pg->requires_grad) {
                if (pg->grad.v.empty()) pg->grad = Tensor<T>(1, C, 1, 1);
                for (int j = 0; j < C; ++j) pg->grad.v[j] += dgamma[j];
            }
            if (pb->requires_grad) {
                if (pb->grad.v.empty()) pb->grad = Tensor<T>(1, C, 1, 1);
                for (int j = 0; j < C; ++j) pb->grad.v[j] += dbeta[j];
            }
            if (px->requires_grad) {
                if (px->grad.v.empty()) px->grad = Tensor<T>(in.n, in.c, in.h, in.w);
                const T invn = T(1) / static_cast<T>(cnt);
                for (int j = 0; j < C; ++j) {
                    const T k = gm[j] * invstd[j];
                    for (int i = 0; i < in.n; ++i) {
                        const T* xs = &in.at(i, j, 0, 0);
                        const T* gs = &go.at(i, j, 0, 0);
                        T* dx = &px->grad.at(i, j, 0, 0);
                        for (int64_t q = 0; q < in.plane(); ++q) {
                            if (training) {
                                const T xhat = (xs[q] - mean[j]) * invstd[j];
                                dx[q] += k * (gs[q] - invn * dxhat_sum[j] -
                                              invn * xhat * dxhat_xhat_sum[j]);
                            } else {
                                dx[q] += k * gs[q];
                            }
                        }
                    }
                }
            }
        });
    return Var<T>(x.graph(), nd);
}

// Sobel responses with replicate padding. Input must be single-channel;
// output has 2 channels (gx, gy). Dedicated op rather than a GEMM conv so the
// (right - left) differences cancel exactly on constant and planar inputs,
// bitwise matching sobel_gradients on plain grids.
template <typename T>
Var<T> sobel_op(Var<T> x) {
    const Tensor<T>& in = x.val();
    if (in.c != 1) throw ValidationError("sobel_op: expects a single channel");
    if (in.h < 3 || in.w < 3) throw ValidationError("sobel_op: input must be at least 3x3");
    const int H = in.h, W = in.w;
    auto cl = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
    Tensor<T> out(in.n, 2, H, W);
    for (int i = 0; i < in.n; ++i)
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c) {
                T gx = T(0), gy = T(0);
                for (int d = -1; d <= 1; ++d) {
                    const T wgt = d == 0 ? T(2) : T(1);
                    gx += wgt * (in.at(i, 0, cl(r + d, H - 1), cl(c + 1, W - 1)) -
                                 in.at(i, 0, cl(r + d, H - 1), cl(c - 1, W - 1)));
                    gy += wgt * (in.at(i, 0, cl(r + 1, H - 1), cl(c + d, W - 1)) -
                                 in.at(i, 0, cl(r - 1, H - 1), cl(c + d, W - 1)));
                }
                out.at(i, 0, r, c) = gx;
                out.at(i, 1, r, c) = gy;
            }
    auto* nd = x.graph()->make(std::move(out), {x.node()}, [H, W, cl](Node<T>& nd) {
        Node<T>* p = nd.parents[0];
        if (!p->requires_grad) return;
        if (p->grad.v.empty()) p->grad = Tensor<T>(p->value.n, 1, H, W);
        for (int i = 0; i < p->value.n; ++i)
            for (int r = 0; r < H; ++r)
                for (int c = 0; c < W; ++c) {
                    const T ggx = nd.grad.at(i, 0, r, c);
                    const T ggy = nd.grad.at(i, 1, r, c);
                    for (int d = -1; d <= 1; ++d) {
                        const T wgt = d == 0 ? T(2) : T(1);
                        p->grad.at(i, 0, cl(r + d, H - 1), cl(c + 1, W - 1)) += wgt * ggx;
                        p->grad.at(i, 0, cl(r + d, H - 1), cl(c - 1, W - 1)) -= wgt * ggx;
                        p->grad.at(i, 0, cl(r + 1, H - 1), cl(c + d, W - 1)) += wgt * ggy;
                        p->grad.at(i, 0, cl(r - 1, H - 1), cl(c + d, W - 1)) -= wgt * ggy;
                    }
                }
    });
    return Var<T>(x.graph(), nd);
}

}  // namespace popnet::ad
