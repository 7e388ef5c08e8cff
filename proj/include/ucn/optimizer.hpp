#ifndef UCN_OPTIMIZER_HPP
#define UCN_OPTIMIZER_HPP

#include <cmath>
#include <vector>

#include "ucn/layers.hpp"

namespace ucn {

// Adam with bias correction. Moments are stored per trainable parameter in
// the same order as the parameter list; t counts optimizer steps.
template <typename T>
struct AdamState {
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    int64_t t = 0;
    std::vector<Tensor<T>> m, v;

    void init(const std::vector<NamedTensor<T>>& params) {
        t = 0;
        m.clear();
        v.clear();
        for (const NamedTensor<T>& p : params) {
            m.push_back(Tensor<T>::zeros(p.tensor.shape()));
            v.push_back(Tensor<T>::zeros(p.tensor.shape()));
        }
    }
};

// One optimizer step over all parameters; gradients are zeroed afterwards.
// Parameters whose gradient buffer was never touched (e.g. auxiliary heads
// when the auxiliary loss is off) are treated as zero-gradient. A non-finite
// gradient aborts before any parameter is modified, naming the tensor.
template <typename T>
void adam_step(std::vector<NamedTensor<T>>& params, AdamState<T>& state, double lr) {
    if (params.size() != state.m.size())
        throw ValueError("adam_step: state holds " + std::to_string(state.m.size()) +
                         " moments for " + std::to_string(params.size()) + " parameters");
    for (const NamedTensor<T>& p : params) {
        if (!p.tensor.has_grad()) continue;
        for (T gv : p.tensor.grad())
            if (!std::isfinite(static_cast<double>(gv)))
                throw NumericalError("non-finite gradient in parameter " + p.name);
    }

    state.t += 1;
    const double bc1 = 1.0 - std::pow(AdamState<T>::kBeta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(AdamState<T>::kBeta2, static_cast<double>(state.t));

    for (size_t i = 0; i < params.size(); ++i) {
        Tensor<T>& p = params[i].tensor;
        auto pd = p.data();
        auto md = state.m[i].data();
        auto vd = state.v[i].data();
        const bool has_grad = p.has_grad();
        auto gd = has_grad ? p.grad() : std::span<const T>{};
        for (int64_t j = 0; j < p.numel(); ++j) {
            const double g = has_grad ? static_cast<double>(gd[j]) : 0.0;
            const double mn = AdamState<T>::kBeta1 * static_cast<double>(md[j]) +
                              (1.0 - AdamState<T>::kBeta1) * g;
            const double vn = AdamState<T>::kBeta2 * static_cast<double>(vd[j]) +
                              (1.0 - AdamState<T>::kBeta2) * g * g;
            md[j] = static_cast<T>(mn);
            vd[j] = static_cast<T>(vn);
            const double mhat = mn / bc1;
            const double vhat = vn / bc2;
            pd[j] = static_cast<T>(static_cast<double>(pd[j]) -
                                   lr * mhat / (std::sqrt(vhat) + AdamState<T>::kEps));
        }
        params[i].tensor.zero_grad();
    }
}

}  // namespace ucn

#endif  // UCN_OPTIMIZER_HPP
