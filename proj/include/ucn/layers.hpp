#ifndef UCN_LAYERS_HPP
#define UCN_LAYERS_HPP

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ucn/ops.hpp"

namespace ucn {

template <typename T>
struct NamedTensor {
    std::string name;
    Tensor<T> tensor;
    bool trainable;
};

namespace init {

// Raw-draw mapping instead of std::uniform_real_distribution, whose output
// sequence differs across standard libraries. Draws happen in double and are
// narrowed at the end so 32-bit and 64-bit builds start from the same values.
inline double unit(std::mt19937& gen) {
    return gen() * (1.0 / 4294967296.0);  // [0, 1)
}

// Fan-in scaled uniform fill: every element in ±sqrt(6/fan_in).
template <typename T>
void fan_in_uniform(Tensor<T>& w, int64_t fan_in, std::mt19937& gen) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (T& v : w.data()) v = static_cast<T>((2.0 * unit(gen) - 1.0) * bound);
}

}  // namespace init

// Plain convolution layer (used for residual projections and prediction heads).
template <typename T>
struct Conv2dLayer {
    int cin = 0, cout = 0, ksize = 0, padding = 0;
    Tensor<T> weight, bias;

    Conv2dLayer() = default;
    Conv2dLayer(int cin_, int cout_, int k, std::mt19937& gen)
        : cin(cin_), cout(cout_), ksize(k), padding(k == 3 ? 1 : 0) {
        weight = Tensor<T>::zeros({cout, cin, k, k}, true);
        bias = Tensor<T>::zeros({1, cout, 1, 1}, true);
        init::fan_in_uniform(weight, static_cast<int64_t>(cin) * k * k, gen);
    }

    Tensor<T> forward(Graph<T>& g, const Tensor<T>& x) const {
        return conv2d(g, x, weight, bias, 1, padding);
    }

    void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
        out.push_back({prefix + ".weight", weight, true});
        out.push_back({prefix + ".bias", bias, true});
    }
};

// conv -> relu6 -> batchnorm, the repeated building block of the network.
template <typename T>
struct BasicConv2d {
    static constexpr double kBnMomentum = 0.1;
    static constexpr double kBnEps = 1e-5;

    int cin = 0, cout = 0, ksize = 0;
    Tensor<T> weight, bias, gamma, beta, running_mean, running_var;

    BasicConv2d() = default;
    BasicConv2d(int cin_, int cout_, int k, std::mt19937& gen) : cin(cin_), cout(cout_), ksize(k) {
        weight = Tensor<T>::zeros({cout, cin, k, k}, true);
        bias = Tensor<T>::zeros({1, cout, 1, 1}, true);
        gamma = Tensor<T>::filled({1, cout, 1, 1}, T(1), true);
        beta = Tensor<T>::zeros({1, cout, 1, 1}, true);
        running_mean = Tensor<T>::zeros({1, cout, 1, 1});
        running_var = Tensor<T>::filled({1, cout, 1, 1}, T(1));
        init::fan_in_uniform(weight, static_cast<int64_t>(cin) * k * k, gen);
    }

    Tensor<T> forward(Graph<T>& g, const Tensor<T>& x, bool training) {
        Tensor<T> c = conv2d(g, x, weight, bias, 1, ksize == 3 ? 1 : 0);
        Tensor<T> r = relu6(g, c);
        return batchnorm2d(g, r, gamma, beta, running_mean, running_var, training,
                           T(kBnMomentum), T(kBnEps));
    }

    void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
        out.push_back({prefix + ".conv.weight", weight, true});
        out.push_back({prefix + ".conv.bias", bias, true});
        out.push_back({prefix + ".bn.gamma", gamma, true});
        out.push_back({prefix + ".bn.beta", beta, true});
        out.push_back({prefix + ".bn.running_mean", running_mean, false});
        out.push_back({prefix + ".bn.running_var", running_var, false});
    }
};

}  // namespace ucn

#endif  // UCN_LAYERS_HPP
