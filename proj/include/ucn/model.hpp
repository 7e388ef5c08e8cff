#ifndef UCN_MODEL_HPP
#define UCN_MODEL_HPP

#include <random>
#include <string>
#include <vector>

#include "ucn/layers.hpp"

namespace ucn {

// Channel widths for every block as a function of the width multiplier k,
// stage index s in {0,1,2,3}.
struct ChannelPlan {
    int k = 1;

    int encoder_dcb(int s) const { return k << s; }        // k·2^s
    int decoder_dcb(int s) const { return k << (3 - s); }  // k·2^(3-s)
    int dsb(int s) const { return k << (s + 1); }          // k·2^(s+1)
    int upb(int s) const { return k << (4 - s); }          // k·2^(4-s)
};

// Encoder convolution block: two BasicConv2d plus a residual shortcut.
// The shortcut is the identity when channel counts agree, otherwise a plain
// 1x1 projection (no bn, no activation).
template <typename T>
struct EncoderDCB {
    int cin = 0, cout = 0;
    BasicConv2d<T> conv1, conv2;
    bool has_proj = false;
    Conv2dLayer<T> proj;

    EncoderDCB() = default;
    EncoderDCB(int cin_, int cout_, std::mt19937& gen)
        : cin(cin_), cout(cout_), conv1(cin_, cout_, 3, gen), conv2(cout_, cout_, 3, gen) {
        if (cin != cout) {
            has_proj = true;
            proj = Conv2dLayer<T>(cin, cout, 1, gen);
        }
    }

    Tensor<T> forward(Graph<T>& g, const Tensor<T>& x, bool training) {
        Tensor<T> y = conv2.forward(g, conv1.forward(g, x, training), training);
        Tensor<T> sc = has_proj ? proj.forward(g, x) : x;
        return add(g, y, sc);
    }

    void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
        conv1.collect(prefix + ".conv1", out);
        conv2.collect(prefix + ".conv2", out);
        if (has_proj) proj.collect(prefix + ".proj", out);
    }
};

// Decoder convolution block: two BasicConv2d, no residual.
template <typename T>
struct DecoderDCB {
    BasicConv2d<T> conv1, conv2;

    DecoderDCB() = default;
    DecoderDCB(int cin, int cout, std::mt19937& gen)
        : conv1(cin, cout, 3, gen), conv2(cout, cout, 3, gen) {}

    Tensor<T> forward(Graph<T>& g, const Tensor<T>& x, bool training) {
        return conv2.forward(g, conv1.forward(g, x, training), training);
    }

    void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
        conv1.collect(prefix + ".conv1", out);
        conv2.collect(prefix + ".conv2", out);
    }
};

// Down-sampling block: 2x2 maxpool, then BasicConv2d.
template <typename T>
struct DownBlock {
    BasicConv2d<T> conv;

    DownBlock() = default;
    DownBlock(int cin, int cout, std::mt19937& gen) : conv(cin, cout, 3, gen) {}

    Tensor<T> forward(Graph<T>& g, const Tensor<T>& x, bool training) {
        return conv.forward(g, maxpool2d(g, x), training);
    }
};

// Up-sampling block: 2x nearest upsample, then BasicConv2d.
template <typename T>
struct UpBlock {
    BasicConv2d<T> conv;

    UpBlock() = default;
    UpBlock(int cin, int cout, std::mt19937& gen) : conv(cin, cout, 3, gen) {}

    Tensor<T> forward(Graph<T>& g, const Tensor<T>& x, bool training) {
        return conv.forward(g, upsample_nearest2x(g, x), training);
    }
};

// The full U-shaped network. Width is controlled by k; input is (N,3,H,W)
// with H and W divisible by 16. Produces the main prediction at full
// resolution plus auxiliary predictions at 1/2 and 1/4 resolution.
template <typename T>
class UCloudNet {
public:
    struct Outputs {
        Tensor<T> main, aux2, aux4;
    };

    UCloudNet(int k, uint32_t seed) : plan_{k} {
        if (k < 1) throw ValueError("model: k must be >= 1, got " + std::to_string(k));
        std::mt19937 gen(seed);
        for (int s = 0; s < 4; ++s)
            enc_.emplace_back(s == 0 ? 3 : plan_.encoder_dcb(s), plan_.encoder_dcb(s), gen);
        for (int s = 0; s < 4; ++s) down_.emplace_back(plan_.encoder_dcb(s), plan_.dsb(s), gen);
        // Up block s consumes the previous decoder output (the bottleneck for s=0).
        for (int s = 0; s < 4; ++s)
            up_.emplace_back(s == 0 ? plan_.dsb(3) : plan_.decoder_dcb(s - 1), plan_.upb(s), gen);
        for (int s = 0; s < 4; ++s)
            dec_.emplace_back(plan_.upb(s) + plan_.encoder_dcb(3 - s), plan_.decoder_dcb(s), gen);
        head_main_ = Conv2dLayer<T>(plan_.decoder_dcb(3), 1, 1, gen);
        head_aux2_ = Conv2dLayer<T>(plan_.decoder_dcb(2), 1, 1, gen);
        head_aux4_ = Conv2dLayer<T>(plan_.decoder_dcb(1), 1, 1, gen);
    }

    int k() const { return plan_.k; }
    const ChannelPlan& plan() const { return plan_; }

    Outputs forward(Graph<T>& g, const Tensor<T>& x, bool training) {
        const Shape& s = x.shape();
        if (s.c != 3)
            throw ShapeError("model: expected 3 input channels, got " + s.str());
        if (s.h % 16 != 0 || s.w % 16 != 0)
            throw ShapeError("model: spatial size must be divisible by 16, got " + s.str());

        Tensor<T> e0 = enc_[0].forward(g, x, training);
        Tensor<T> e1 = enc_[1].forward(g, down_[0].forward(g, e0, training), training);
        Tensor<T> e2 = enc_[2].forward(g, down_[1].forward(g, e1, training), training);
        Tensor<T> e3 = enc_[3].forward(g, down_[2].forward(g, e2, training), training);
        Tensor<T> b = down_[3].forward(g, e3, training);

        Tensor<T> d0 = dec_[0].forward(g, concat_channels(g, up_[0].forward(g, b, training), e3), training);
        Tensor<T> d1 = dec_[1].forward(g, concat_channels(g, up_[1].forward(g, d0, training), e2), training);
        Tensor<T> d2 = dec_[2].forward(g, concat_channels(g, up_[2].forward(g, d1, training), e1), training);
        Tensor<T> d3 = dec_[3].forward(g, concat_channels(g, up_[3].forward(g, d2, training), e0), training);

        Outputs o;
        o.main = sigmoid(g, head_main_.forward(g, d3));
        o.aux2 = sigmoid(g, head_aux2_.forward(g, d2));
        o.aux4 = sigmoid(g, head_aux4_.forward(g, d1));
        return o;
    }

    // Every tensor the checkpoint stores, in the documented stable order:
    // encoder 0-3, down 0-3, up 0-3, decoder 0-3, heads main, aux2, aux4.
    // Running statistics are interleaved with their layer and flagged
    // non-trainable.
    std::vector<NamedTensor<T>> named_tensors() const {
        std::vector<NamedTensor<T>> out;
        for (int s = 0; s < 4; ++s) enc_[s].collect("encoder" + std::to_string(s), out);
        for (int s = 0; s < 4; ++s) down_[s].conv.collect("down" + std::to_string(s), out);
        for (int s = 0; s < 4; ++s) up_[s].conv.collect("up" + std::to_string(s), out);
        for (int s = 0; s < 4; ++s) dec_[s].collect("decoder" + std::to_string(s), out);
        head_main_.collect("head_main", out);
        head_aux2_.collect("head_aux2", out);
        head_aux4_.collect("head_aux4", out);
        return out;
    }

    std::vector<NamedTensor<T>> trainable_parameters() const {
        std::vector<NamedTensor<T>> all = named_tensors();
        std::vector<NamedTensor<T>> out;
        for (NamedTensor<T>& t : all)
            if (t.trainable) out.push_back(std::move(t));
        return out;
    }

    EncoderDCB<T>& encoder(int s) { return enc_[s]; }
    DecoderDCB<T>& decoder(int s) { return dec_[s]; }
    Conv2dLayer<T>& head_main() { return head_main_; }

private:
    ChannelPlan plan_;
    std::vector<EncoderDCB<T>> enc_;
    std::vector<DownBlock<T>> down_;
    std::vector<UpBlock<T>> up_;
    std::vector<DecoderDCB<T>> dec_;
    Conv2dLayer<T> head_main_, head_aux2_, head_aux4_;
};

}  // namespace ucn

#endif  // UCN_MODEL_HPP
