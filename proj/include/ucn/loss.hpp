#ifndef UCN_LOSS_HPP
#define UCN_LOSS_HPP

#include <cmath>

#include "ucn/ops.hpp"

namespace ucn {

struct LossConfig {
    bool aux_enabled = true;
    // Deep-supervision weights for the half- and quarter-resolution branches.
    double w_half = 0.4;
    double w_quarter = 0.2;
    // Probability floor before the logs; keeps saturated sigmoids finite.
    double clamp_eps = 1e-7;
};

// Mean binary cross-entropy over every element:
//   -(1/N) * sum[ y*log(p) + (1-y)*log(1-p) ]
// with p clamped into [eps, 1-eps] first. Differentiable w.r.t. p; the clamp
// zeroes the gradient outside the clamp interval.
template <typename T>
Tensor<T> bce(Graph<T>& g, const Tensor<T>& p, const Tensor<T>& y, T eps = T(1e-7)) {
    if (!(p.shape() == y.shape()))
        throw ShapeError("bce: prediction " + p.shape().str() + " vs target " + y.shape().str());
    const int64_t n = p.numel();
    if (n == 0) throw ValueError("bce: empty tensors");
    const T* pd = p.data().data();
    const T* yd = y.data().data();
    const T lo = eps, hi = T(1) - eps;
    T acc = 0;
    for (int64_t i = 0; i < n; ++i) {
        const T pc = std::min(std::max(pd[i], lo), hi);
        acc += yd[i] * std::log(pc) + (T(1) - yd[i]) * std::log(T(1) - pc);
    }
    Tensor<T> out = Tensor<T>::from_data({1, 1, 1, 1}, {-acc / static_cast<T>(n)},
                                         detail::want_node(g, p.requires_grad()));

    if (out.requires_grad()) {
        auto ps_p = p.storage();
        auto ys_p = y.storage();
        auto os_p = out.storage();
        g.push_node("bce", os_p, [ps_p, ys_p, os_p, n, lo, hi](Graph<T>& gr) {
            T* dp = gr.sink(*ps_p);
            if (!dp) return;
            const T dy = os_p->grad[0];
            const T* pd = ps_p->data.data();
            const T* yd = ys_p->data.data();
            const T scale = dy / static_cast<T>(n);
            for (int64_t i = 0; i < n; ++i) {
                if (pd[i] <= lo || pd[i] >= hi) continue;  // clamp region: flat
                dp[i] += scale * (-yd[i] / pd[i] + (T(1) - yd[i]) / (T(1) - pd[i]));
            }
        });
    }
    return out;
}

// Nearest-neighbor subsampling of a binary target map by an integer factor:
// each f x f cell contributes its top-left element, so values stay in {0,1}.
// Not differentiated; targets never carry gradients.
template <typename T>
Tensor<T> downsample_target(const Tensor<T>& y, int factor) {
    const Shape& s = y.shape();
    if (factor < 1) throw ValueError("downsample_target: factor must be >= 1");
    if (s.h % factor != 0 || s.w % factor != 0)
        throw ShapeError("downsample_target: " + s.str() + " not divisible by " +
                         std::to_string(factor));
    const int64_t N = s.n, C = s.c, H = s.h, W = s.w, Ho = H / factor, Wo = W / factor;
    Tensor<T> out = Tensor<T>::zeros({N, C, Ho, Wo});
    const T* yd = y.data().data();
    T* od = out.data().data();
    for (int64_t nc = 0; nc < N * C; ++nc)
        for (int64_t oh = 0; oh < Ho; ++oh)
            for (int64_t ow = 0; ow < Wo; ++ow)
                od[(nc * Ho + oh) * Wo + ow] = yd[(nc * H + oh * factor) * W + ow * factor];
    return out;
}

// Per-branch values alongside the combined loss, for logging.
template <typename T>
struct LossBreakdown {
    Tensor<T> total;
    Tensor<T> main;
    Tensor<T> aux2;  // undefined when aux is disabled
    Tensor<T> aux4;
    bool aux = false;
};

// Deep-supervision objective. With aux enabled:
//   total = L(main, y) + 0.4 * L(aux2, y_half) + 0.2 * L(aux4, y_quarter)
// with the targets downsampled to match. With aux disabled, total IS the
// main-branch loss tensor (no copy, bit-identical).
template <typename T>
LossBreakdown<T> total_loss(Graph<T>& g, const Tensor<T>& main, const Tensor<T>& aux2,
                            const Tensor<T>& aux4, const Tensor<T>& y, const LossConfig& cfg) {
    LossBreakdown<T> out;
    out.main = bce(g, main, y, T(cfg.clamp_eps));
    if (!cfg.aux_enabled) {
        out.total = out.main;
        return out;
    }
    Tensor<T> y2 = downsample_target(y, 2);
    Tensor<T> y4 = downsample_target(y, 4);
    out.aux2 = bce(g, aux2, y2, T(cfg.clamp_eps));
    out.aux4 = bce(g, aux4, y4, T(cfg.clamp_eps));
    Tensor<T> partial = add(g, out.main, scale(g, out.aux2, T(cfg.w_half)));
    out.total = add(g, partial, scale(g, out.aux4, T(cfg.w_quarter)));
    out.aux = true;
    return out;
}

}  // namespace ucn

#endif  // UCN_LOSS_HPP
