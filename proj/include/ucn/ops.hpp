#ifndef UCN_OPS_HPP
#define UCN_OPS_HPP

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "ucn/graph.hpp"
#include "ucn/tensor.hpp"

// Differentiable primitives. Each one computes the forward result and, when
// the graph is recording and some input requires a gradient, appends a node
// whose backward reads the output gradient and accumulates (+=) into the
// input gradients via Graph::sink.
namespace ucn {

namespace detail {

template <typename T>
inline bool want_node(const Graph<T>& g, bool any_req) {
    return g.recording && any_req;
}

// Zero-padded copy of one (H,W) plane into a (H+2p, W+2p) buffer.
template <typename T>
inline void pad_plane(const T* src, T* dst, int64_t H, int64_t W, int64_t p) {
    const int64_t Wp = W + 2 * p;
    std::memset(dst, 0, sizeof(T) * static_cast<size_t>((H + 2 * p) * Wp));
    for (int64_t y = 0; y < H; ++y)
        std::memcpy(dst + (y + p) * Wp + p, src + y * W, sizeof(T) * static_cast<size_t>(W));
}

}  // namespace detail

// --------------------------------------------------------------------------
// conv2d: cross-correlation (no kernel flip), square kernel, zero padding.
// weight (Co,Ci,K,K), bias (1,Co,1,1). Output H' = (H + 2p - K)/stride + 1.
// --------------------------------------------------------------------------
template <typename T>
Tensor<T> conv2d(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride, int padding) {
    const Shape& xs = x.shape();
    const Shape& ws = weight.shape();
    if (ws.h != ws.w)
        throw ShapeError("conv2d: non-square kernel " + ws.str());
    if (xs.c != ws.c)
        throw ShapeError("conv2d: input " + xs.str() + " has " + std::to_string(xs.c) +
                         " channels but weight " + ws.str() + " expects " + std::to_string(ws.c));
    if (bias.numel() != ws.n)
        throw ShapeError("conv2d: bias " + bias.shape().str() + " does not match " +
                         std::to_string(ws.n) + " output channels");
    if (stride < 1) throw ValueError("conv2d: stride must be >= 1");
    if (padding < 0) throw ValueError("conv2d: padding must be >= 0");

    const int64_t K = ws.h, p = padding, s = stride;
    const int64_t Hnum = xs.h + 2 * p - K, Wnum = xs.w + 2 * p - K;
    if (Hnum < 0 || Wnum < 0 || Hnum % s != 0 || Wnum % s != 0)
        throw ShapeError("conv2d: kernel " + std::to_string(K) + " stride " + std::to_string(s) +
                         " padding " + std::to_string(p) + " does not produce an integer output size for input " +
                         xs.str());
    const int64_t Ho = Hnum / s + 1, Wo = Wnum / s + 1;
    const int64_t N = xs.n, Ci = xs.c, Co = ws.n, H = xs.h, W = xs.w;
    const int64_t Hp = H + 2 * p, Wp = W + 2 * p;

    bool any_req = x.requires_grad() || weight.requires_grad() || bias.requires_grad();
    Tensor<T> out = Tensor<T>::zeros({N, Co, Ho, Wo}, detail::want_node(g, any_req));

    const T* xd = x.data().data();
    const T* wd = weight.data().data();
    const T* bd = bias.data().data();
    T* od = out.data().data();

    std::vector<T> xpad(static_cast<size_t>(Ci * Hp * Wp));
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t ci = 0; ci < Ci; ++ci)
            detail::pad_plane(xd + (n * Ci + ci) * H * W, xpad.data() + ci * Hp * Wp, H, W, p);
        for (int64_t co = 0; co < Co; ++co) {
            T* op = od + (n * Co + co) * Ho * Wo;
            std::fill(op, op + Ho * Wo, bd[co]);
            for (int64_t ci = 0; ci < Ci; ++ci) {
                const T* plane = xpad.data() + ci * Hp * Wp;
                for (int64_t kh = 0; kh < K; ++kh) {
                    for (int64_t kw = 0; kw < K; ++kw) {
                        const T wv = wd[((co * Ci + ci) * K + kh) * K + kw];
                        if (s == 1) {
                            for (int64_t oh = 0; oh < Ho; ++oh) {
                                const T* src = plane + (oh + kh) * Wp + kw;
                                T* dst = op + oh * Wo;
                                for (int64_t ow = 0; ow < Wo; ++ow) dst[ow] += wv * src[ow];
                            }
                        } else {
                            for (int64_t oh = 0; oh < Ho; ++oh) {
                                const T* src = plane + (oh * s + kh) * Wp + kw;
                                T* dst = op + oh * Wo;
                                for (int64_t ow = 0; ow < Wo; ++ow) dst[ow] += wv * src[ow * s];
                            }
                        }
                    }
                }
            }
        }
    }

    if (out.requires_grad()) {
        auto xs_p = x.storage();
        auto ws_p = weight.storage();
        auto bs_p = bias.storage();
        auto os_p = out.storage();
        g.push_node("conv2d", os_p, [xs_p, ws_p, bs_p, os_p, K, p, s, N, Ci, Co, H, W, Ho, Wo,
                                     Hp, Wp](Graph<T>& gr) {
            const T* dy = os_p->grad.data();
            const T* xd = xs_p->data.data();
            const T* wd = ws_p->data.data();
            T* dx = gr.sink(*xs_p);
            T* dw = gr.sink(*ws_p);
            T* db = gr.sink(*bs_p);
            std::vector<T> xpad, dxpad;
            if (dw) xpad.resize(static_cast<size_t>(Ci * Hp * Wp));
            if (dx) dxpad.resize(static_cast<size_t>(Ci * Hp * Wp));
            for (int64_t n = 0; n < N; ++n) {
                if (dw)
                    for (int64_t ci = 0; ci < Ci; ++ci)
                        detail::pad_plane(xd + (n * Ci + ci) * H * W, xpad.data() + ci * Hp * Wp,
                                          H, W, p);
                if (dx) std::fill(dxpad.begin(), dxpad.end(), T(0));
                for (int64_t co = 0; co < Co; ++co) {
                    const T* dyp = dy + (n * Co + co) * Ho * Wo;
                    if (db) {
                        T acc = 0;
                        for (int64_t i = 0; i < Ho * Wo; ++i) acc += dyp[i];
                        db[co] += acc;
                    }
                    for (int64_t ci = 0; ci < Ci; ++ci) {
                        for (int64_t kh = 0; kh < K; ++kh) {
                            for (int64_t kw = 0; kw < K; ++kw) {
                                const int64_t widx = ((co * Ci + ci) * K + kh) * K + kw;
                                if (dw) {
                                    const T* plane = xpad.data() + ci * Hp * Wp;
                                    T acc = 0;
                                    for (int64_t oh = 0; oh < Ho; ++oh) {
                                        const T* src = plane + (oh * s + kh) * Wp + kw;
                                        const T* dr = dyp + oh * Wo;
                                        for (int64_t ow = 0; ow < Wo; ++ow) acc += dr[ow] * src[ow * s];
                                    }
                                    dw[widx] += acc;
                                }
                                if (dx) {
                                    T* plane = dxpad.data() + ci * Hp * Wp;
                                    const T wv = wd[widx];
                                    for (int64_t oh = 0; oh < Ho; ++oh) {
                                        T* dst = plane + (oh * s + kh) * Wp + kw;
                                        const T* dr = dyp + oh * Wo;
                                        for (int64_t ow = 0; ow < Wo; ++ow) dst[ow * s] += wv * dr[ow];
                                    }
                                }
                            }
                        }
                    }
                }
                if (dx) {
                    for (int64_t ci = 0; ci < Ci; ++ci) {
                        const T* plane = dxpad.data() + ci * Hp * Wp;
                        T* dst = dx + (n * Ci + ci) * H * W;
                        for (int64_t y = 0; y < H; ++y) {
                            const T* src = plane + (y + p) * Wp + p;
                            for (int64_t xw = 0; xw < W; ++xw) dst[y * W + xw] += src[xw];
                        }
                    }
                }
            }
        });
    }
    return out;
}

// --------------------------------------------------------------------------
// maxpool2d: fixed 2x2 window, stride 2. Ties route the gradient to the
// first element of the window in row-major order.
// --------------------------------------------------------------------------
template <typename T>
Tensor<T> maxpool2d(Graph<T>& g, const Tensor<T>& x) {
    const Shape& xs = x.shape();
    if (xs.h % 2 != 0 || xs.w % 2 != 0)
        throw ShapeError("maxpool2d: spatial size must be even, got " + xs.str());
    const int64_t N = xs.n, C = xs.c, H = xs.h, W = xs.w, Ho = H / 2, Wo = W / 2;

    Tensor<T> out = Tensor<T>::zeros({N, C, Ho, Wo}, detail::want_node(g, x.requires_grad()));
    const T* xd = x.data().data();
    T* od = out.data().data();
    std::vector<int64_t> argmax(static_cast<size_t>(out.numel()));

    int64_t oi = 0;
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const T* plane = xd + nc * H * W;
        for (int64_t oh = 0; oh < Ho; ++oh) {
            for (int64_t ow = 0; ow < Wo; ++ow, ++oi) {
                int64_t base = (oh * 2) * W + ow * 2;
                T best = plane[base];
                int64_t besti = base;
                const int64_t cand[3] = {base + 1, base + W, base + W + 1};
                for (int64_t c2 : cand) {
                    if (plane[c2] > best) {
                        best = plane[c2];
                        besti = c2;
                    }
                }
                od[oi] = best;
                argmax[static_cast<size_t>(oi)] = nc * H * W + besti;
            }
        }
    }
    if (g.track_decisions)
        for (size_t i = 0; i < argmax.size(); ++i)
            g.note_decision(static_cast<uint64_t>(argmax[i]));

    if (out.requires_grad()) {
        auto xs_p = x.storage();
        auto os_p = out.storage();
        g.push_node("maxpool2d", os_p, [xs_p, os_p, argmax = std::move(argmax)](Graph<T>& gr) {
            T* dx = gr.sink(*xs_p);
            if (!dx) return;
            const T* dy = os_p->grad.data();
            for (size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += dy[i];
        });
    }
    return out;
}

// --------------------------------------------------------------------------
// upsample_nearest2x: out[i,j] = in[i/2, j/2]; backward sums each 2x2 block.
// --------------------------------------------------------------------------
template <typename T>
Tensor<T> upsample_nearest2x(Graph<T>& g, const Tensor<T>& x) {
    const Shape& xs = x.shape();
    const int64_t N = xs.n, C = xs.c, H = xs.h, W = xs.w;
    Tensor<T> out = Tensor<T>::zeros({N, C, 2 * H, 2 * W}, detail::want_node(g, x.requires_grad()));
    const T* xd = x.data().data();
    T* od = out.data().data();
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const T* ip = xd + nc * H * W;
        T* op = od + nc * 4 * H * W;
        for (int64_t y = 0; y < H; ++y) {
            T* r0 = op + (2 * y) * 2 * W;
            for (int64_t xw = 0; xw < W; ++xw) {
                r0[2 * xw] = r0[2 * xw + 1] = ip[y * W + xw];
            }
            std::memcpy(r0 + 2 * W, r0, sizeof(T) * static_cast<size_t>(2 * W));
        }
    }

    if (out.requires_grad()) {
        auto xs_p = x.storage();
        auto os_p = out.storage();
        g.push_node("upsample_nearest2x", os_p, [xs_p, os_p, N, C, H, W](Graph<T>& gr) {
            T* dx = gr.sink(*xs_p);
            if (!dx) return;
            const T* dy = os_p->grad.data();
            for (int64_t nc = 0; nc < N * C; ++nc) {
                const T* dp = dy + nc * 4 * H * W;
                T* ip = dx + nc * H * W;
                for (int64_t y = 0; y < H; ++y) {
                    const T* r0 = dp + (2 * y) * 2 * W;
                    const T* r1 = r0 + 2 * W;
                    for (int64_t xw = 0; xw < W; ++xw)
                        ip[y * W + xw] += r0[2 * xw] + r0[2 * xw + 1] + r1[2 * xw] + r1[2 * xw + 1];
                }
            }
        });
    }
    return out;
}

// --------------------------------------------------------------------------
// batchnorm2d. Training mode normalizes by per-channel batch statistics
// (biased variance) and updates running stats in place:
//   running = (1 - momentum) * running + momentum * batch.
// Eval mode uses the running stats. gamma/beta/running_* have shape (1,C,1,1).
// --------------------------------------------------------------------------
template <typename T>
Tensor<T> batchnorm2d(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& gamma,
                      const Tensor<T>& beta, Tensor<T>& running_mean, Tensor<T>& running_var,
                      bool training, T momentum, T eps) {
    const Shape& xs = x.shape();
    const int64_t N = xs.n, C = xs.c, H = xs.h, W = xs.w, M = N * H * W;
    if (gamma.numel() != C || beta.numel() != C || running_mean.numel() != C ||
        running_var.numel() != C)
        throw ShapeError("batchnorm2d: parameter length does not match " + std::to_string(C) +
                         " channels (input " + xs.str() + ")");
    if (training && M < 2)
        throw ValueError("batchnorm2d: training mode needs at least 2 elements per channel, got " +
                         std::to_string(M));

    bool any_req = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
    Tensor<T> out = Tensor<T>::zeros(xs, detail::want_node(g, any_req));
    const T* xd = x.data().data();
    const T* gd = gamma.data().data();
    const T* bd = beta.data().data();
    T* od = out.data().data();

    std::vector<T> mean(static_cast<size_t>(C)), invstd(static_cast<size_t>(C));
    if (training) {
        for (int64_t c = 0; c < C; ++c) {
            T sum = 0;
            for (int64_t n = 0; n < N; ++n) {
                const T* p = xd + (n * C + c) * H * W;
                for (int64_t i = 0; i < H * W; ++i) sum += p[i];
            }
            const T mu = sum / static_cast<T>(M);
            T sq = 0;
            for (int64_t n = 0; n < N; ++n) {
                const T* p = xd + (n * C + c) * H * W;
                for (int64_t i = 0; i < H * W; ++i) {
                    const T d = p[i] - mu;
                    sq += d * d;
                }
            }
            const T var = sq / static_cast<T>(M);
            mean[c] = mu;
            invstd[c] = T(1) / std::sqrt(var + eps);
            running_mean.data()[c] = (T(1) - momentum) * running_mean.data()[c] + momentum * mu;
            running_var.data()[c] = (T(1) - momentum) * running_var.data()[c] + momentum * var;
        }
    } else {
        for (int64_t c = 0; c < C; ++c) {
            mean[c] = running_mean.data()[c];
            invstd[c] = T(1) / std::sqrt(running_var.data()[c] + eps);
        }
    }

    for (int64_t n = 0; n < N; ++n) {
        for (int64_t c = 0; c < C; ++c) {
            const T* p = xd + (n * C + c) * H * W;
            T* o = od + (n * C + c) * H * W;
            const T mu = mean[c], is = invstd[c], ga = gd[c], be = bd[c];
            for (int64_t i = 0; i < H * W; ++i) o[i] = ga * (p[i] - mu) * is + be;
        }
    }

    if (out.requires_grad()) {
        auto xs_p = x.storage();
        auto gs_p = gamma.storage();
        auto bs_p = beta.storage();
        auto os_p = out.storage();
        g.push_node("batchnorm2d", os_p,
                    [xs_p, gs_p, bs_p, os_p, mean = std::move(mean), invstd = std::move(invstd),
                     training, N, C, H, W, M](Graph<T>& gr) {
            const T* dy = os_p->grad.data();
            const T* xd = xs_p->data.data();
            const T* gd = gs_p->data.data();
            T* dx = gr.sink(*xs_p);
            T* dg = gr.sink(*gs_p);
            T* db = gr.sink(*bs_p);
            for (int64_t c = 0; c < C; ++c) {
                const T mu = mean[c], is = invstd[c];
                T s1 = 0, s2 = 0;  // sum(dy), sum(dy * xhat)
                for (int64_t n = 0; n < N; ++n) {
                    const int64_t off = (n * C + c) * H * W;
                    for (int64_t i = 0; i < H * W; ++i) {
                        const T d = dy[off + i];
                        s1 += d;
                        s2 += d * (xd[off + i] - mu) * is;
                    }
                }
                if (db) db[c] += s1;
                if (dg) dg[c] += s2;
                if (dx) {
                    const T ga = gd[c];
                    if (training) {
                        const T im = T(1) / static_cast<T>(M);
                        for (int64_t n = 0; n < N; ++n) {
                            const int64_t off = (n * C + c) * H * W;
                            for (int64_t i = 0; i < H * W; ++i) {
                                const T xhat = (xd[off + i] - mu) * is;
                                dx[off + i] += ga * is * (dy[off + i] - s1 * im - xhat * s2 * im);
                            }
                        }
                    } else {
                        for (int64_t n = 0; n < N; ++n) {
                            const int64_t off = (n * C + c) * H * W;
                            for (int64_t i = 0; i < H * W; ++i)
                                dx[off + i] += ga * is * dy[off + i];
                        }
                    }
                }
            }
        });
    }
    return out;
}

// --------------------------------------------------------------------------
// relu6: min(max(x, 0), 6). Subgradient 0 at both kinks.
// --------------------------------------------------------------------------
template <typename T>
Tensor<T> relu6(Graph<T>& g, const Tensor<T>& x) {
    Tensor<T> out = Tensor<T>::zeros(x.shape(), detail::want_node(g, x.requires_grad()));
    const T* xd = x.data().data();
    T* od = out.data().data();
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) od[i] = std::min(std::max(xd[i], T(0)), T(6));
    if (g.track_decisions) {
        for (int64_t i = 0; i < n; ++i) {
            const uint64_t region = xd[i] <= T(0) ? 0u : (xd[i] >= T(6) ? 2u : 1u);
            g.note_decision(static_cast<uint64_t>(i) * 4u + region);
        }
    }

    if (out.requires_grad()) {
        auto xs_p = x.storage();
        auto os_p = out.storage();
        g.push_node("relu6", os_p, [xs_p, os_p, n](Graph<T>& gr) {
            T* dx = gr.sink(*xs_p);
            if (!dx) return;
            const T* dy = os_p->grad.data();
            const T* xd = xs_p->data.data();
            for (int64_t i = 0; i < n; ++i)
                if (xd[i] > T(0) && xd[i] < T(6)) dx[i] += dy[i];
        });
    }
    return out;
}

// --------------------------------------------------------------------------
// sigmoid, evaluated in the overflow-safe branch form.
// --------------------------------------------------------------------------
template <typename T>
Tensor<T> sigmoid(Graph<T>& g, const Tensor<T>& x) {
    Tensor<T> out = Tensor<T>::zeros(x.shape(), detail::want_node(g, x.requires_grad()));
    const T* xd = x.data().data();
    T* od = out.data().data();
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) {
        const T v = xd[i];
        if (v >= 0) {
            od[i] = T(1) / (T(1) + std::exp(-v));
        } else {
            const T e = std::exp(v);
            od[i] = e / (T(1) + e);
        }
    }

    if (out.requires_grad()) {
        auto xs_p = x.storage();
        auto os_p = out.storage();
        g.push_node("sigmoid", os_p, [xs_p, os_p, n](Graph<T>& gr) {
            T* dx = gr.sink(*xs_p);
            if (!dx) return;
            const T* dy = os_p->grad.data();
            const T* o = os_p->data.data();
            for (int64_t i = 0; i < n; ++i) dx[i] += dy[i] * o[i] * (T(1) - o[i]);
        });
    }
    return out;
}

// --------------------------------------------------------------------------
// concat_channels: a fills channels [0, Ca), b fills [Ca, Ca+Cb).
// --------------------------------------------------------------------------
template <typename T>
Tensor<T> concat_channels(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
    const Shape& as = a.shape();
    const Shape& bs = b.shape();
    if (as.n != bs.n || as.h != bs.h || as.w != bs.w)
        throw ShapeError("concat_channels: batch/spatial mismatch " + as.str() + " vs " + bs.str());
    const int64_t N = as.n, Ca = as.c, Cb = bs.c, HW = as.h * as.w;

    bool any_req = a.requires_grad() || b.requires_grad();
    Tensor<T> out = Tensor<T>::zeros({N, Ca + Cb, as.h, as.w}, detail::want_node(g, any_req));
    const T* ad = a.data().data();
    const T* bd = b.data().data();
    T* od = out.data().data();
    for (int64_t n = 0; n < N; ++n) {
        std::memcpy(od + n * (Ca + Cb) * HW, ad + n * Ca * HW,
                    sizeof(T) * static_cast<size_t>(Ca * HW));
        std::memcpy(od + (n * (Ca + Cb) + Ca) * HW, bd + n * Cb * HW,
                    sizeof(T) * static_cast<size_t>(Cb * HW));
    }

    if (out.requires_grad()) {
        auto as_p = a.storage();
        auto bs_p = b.storage();
        auto os_p = out.storage();
        g.push_node("concat_channels", os_p, [as_p, bs_p, os_p, N, Ca, Cb, HW](Graph<T>& gr) {
            const T* dy = os_p->grad.data();
            if (T* da = gr.sink(*as_p))
                for (int64_t n = 0; n < N; ++n) {
                    const T* src = dy + n * (Ca + Cb) * HW;
                    T* dst = da + n * Ca * HW;
                    for (int64_t i = 0; i < Ca * HW; ++i) dst[i] += src[i];
                }
            if (T* db = gr.sink(*bs_p))
                for (int64_t n = 0; n < N; ++n) {
                    const T* src = dy + (n * (Ca + Cb) + Ca) * HW;
                    T* dst = db + n * Cb * HW;
                    for (int64_t i = 0; i < Cb * HW; ++i) dst[i] += src[i];
                }
        });
    }
    return out;
}

// --------------------------------------------------------------------------
// Elementwise arithmetic.
// --------------------------------------------------------------------------
template <typename T>
Tensor<T> add(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
    if (!(a.shape() == b.shape()))
        throw ShapeError("add: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    bool any_req = a.requires_grad() || b.requires_grad();
    Tensor<T> out = Tensor<T>::zeros(a.shape(), detail::want_node(g, any_req));
    const T* ad = a.data().data();
    const T* bd = b.data().data();
    T* od = out.data().data();
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) od[i] = ad[i] + bd[i];

    if (out.requires_grad()) {
        auto as_p = a.storage();
        auto bs_p = b.storage();
        auto os_p = out.storage();
        g.push_node("add", os_p, [as_p, bs_p, os_p, n](Graph<T>& gr) {
            const T* dy = os_p->grad.data();
            if (T* da = gr.sink(*as_p))
                for (int64_t i = 0; i < n; ++i) da[i] += dy[i];
            if (T* db = gr.sink(*bs_p))
                for (int64_t i = 0; i < n; ++i) db[i] += dy[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> mul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
    if (!(a.shape() == b.shape()))
        throw ShapeError("mul: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    bool any_req = a.requires_grad() || b.requires_grad();
    Tensor<T> out = Tensor<T>::zeros(a.shape(), detail::want_node(g, any_req));
    const T* ad = a.data().data();
    const T* bd = b.data().data();
    T* od = out.data().data();
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) od[i] = ad[i] * bd[i];

    if (out.requires_grad()) {
        auto as_p = a.storage();
        auto bs_p = b.storage();
        auto os_p = out.storage();
        g.push_node("mul", os_p, [as_p, bs_p, os_p, n](Graph<T>& gr) {
            const T* dy = os_p->grad.data();
            if (T* da = gr.sink(*as_p)) {
                const T* bd = bs_p->data.data();
                for (int64_t i = 0; i < n; ++i) da[i] += dy[i] * bd[i];
            }
            if (T* db = gr.sink(*bs_p)) {
                const T* ad = as_p->data.data();
                for (int64_t i = 0; i < n; ++i) db[i] += dy[i] * ad[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> scale(Graph<T>& g, const Tensor<T>& x, T k) {
    Tensor<T> out = Tensor<T>::zeros(x.shape(), detail::want_node(g, x.requires_grad()));
    const T* xd = x.data().data();
    T* od = out.data().data();
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) od[i] = k * xd[i];

    if (out.requires_grad()) {
        auto xs_p = x.storage();
        auto os_p = out.storage();
        g.push_node("scale", os_p, [xs_p, os_p, k, n](Graph<T>& gr) {
            T* dx = gr.sink(*xs_p);
            if (!dx) return;
            const T* dy = os_p->grad.data();
            for (int64_t i = 0; i < n; ++i) dx[i] += k * dy[i];
        });
    }
    return out;
}

// Reduce to a (1,1,1,1) scalar.
template <typename T>
Tensor<T> sum(Graph<T>& g, const Tensor<T>& x) {
    bool req = detail::want_node(g, x.requires_grad());
    const T* xd = x.data().data();
    const int64_t n = x.numel();
    T acc = 0;
    for (int64_t i = 0; i < n; ++i) acc += xd[i];
    Tensor<T> out = Tensor<T>::from_data({1, 1, 1, 1}, {acc}, req);

    if (out.requires_grad()) {
        auto xs_p = x.storage();
        auto os_p = out.storage();
        g.push_node("sum", os_p, [xs_p, os_p, n](Graph<T>& gr) {
            T* dx = gr.sink(*xs_p);
            if (!dx) return;
            const T dy = os_p->grad[0];
            for (int64_t i = 0; i < n; ++i) dx[i] += dy;
        });
    }
    return out;
}

}  // namespace ucn

#endif  // UCN_OPS_HPP
