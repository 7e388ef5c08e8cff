#ifndef UCN_GRADCHECK_HPP
#define UCN_GRADCHECK_HPP

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ucn/loss.hpp"
#include "ucn/model.hpp"

// Central-difference verification of the analytic gradients, always in
// 64-bit. The forward is replayed with each probed element nudged by ±eps;
// probes whose discrete decisions (maxpool argmax, relu6 region) differ from
// the recorded pass are skipped, since the analytic subgradient is not the
// two-sided limit there.
namespace ucn {

struct GradCheckOptions {
    double eps = 1e-5;
    bool skip_kinks = true;
    // When > 0, probe at most this many elements per tensor.
    int max_probes = 0;
    uint32_t probe_seed = 0;
    // When > 0, only probe elements whose analytic gradient magnitude reaches
    // this floor. Used by the deep composites, where evaluation rounding puts
    // a few-ULP noise on the objective value and hence ulp(value)/(2*eps),
    // around 1e-9..1e-7, of absolute noise on the central difference.
    double min_analytic = 0.0;
    // Test fixture: shifts every analytic gradient to prove the checker
    // actually detects wrong derivatives.
    double analytic_offset = 0.0;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    int64_t probes = 0;
    int64_t skipped = 0;
    bool finite = true;

    bool pass(double tolerance) const { return finite && probes > 0 && max_rel_error < tolerance; }
};

using ScalarFn = std::function<Tensor<double>(Graph<double>&)>;

namespace detail {

struct EvalOut {
    double value;
    uint64_t hash;
    bool finite;
};

inline EvalOut eval_nograd(const ScalarFn& fn) {
    Graph<double> g;
    g.recording = false;
    g.track_decisions = true;
    Tensor<double> out = fn(g);
    double v = out.value();
    return {v, g.decision_hash(), std::isfinite(v)};
}

}  // namespace detail

inline GradCheckResult grad_check(const ScalarFn& fn, const std::vector<Tensor<double>>& inputs,
                                  const GradCheckOptions& opts = {}) {
    GradCheckResult res;

    // Recorded pass: analytic gradients plus the reference decision hash.
    Graph<double> g;
    g.track_decisions = opts.skip_kinks;
    Tensor<double> out = fn(g);
    if (out.numel() != 1)
        throw ShapeError("grad_check: fn must return a scalar, got " + out.shape().str());
    if (!std::isfinite(out.value())) res.finite = false;
    const uint64_t base_hash = g.decision_hash();
    for (const Tensor<double>& t : inputs) const_cast<Tensor<double>&>(t).zero_grad();
    g.backward(out);

    std::vector<std::vector<double>> analytic(inputs.size());
    for (size_t i = 0; i < inputs.size(); ++i) {
        const Tensor<double>& t = inputs[i];
        analytic[i].assign(static_cast<size_t>(t.numel()), 0.0);
        if (t.has_grad()) {
            auto gr = t.grad();
            for (int64_t j = 0; j < t.numel(); ++j) analytic[i][j] = gr[j] + opts.analytic_offset;
        } else {
            for (double& v : analytic[i]) v += opts.analytic_offset;
        }
        for (double v : analytic[i])
            if (!std::isfinite(v)) res.finite = false;
    }

    // Probe plan: (tensor, element) pairs, optionally magnitude-filtered and
    // subsampled with a deterministic shuffle.
    std::vector<std::pair<size_t, int64_t>> plan;
    for (size_t i = 0; i < inputs.size(); ++i)
        for (int64_t j = 0; j < inputs[i].numel(); ++j)
            if (opts.min_analytic <= 0.0 || std::fabs(analytic[i][j]) >= opts.min_analytic)
                plan.emplace_back(i, j);
    if (opts.max_probes > 0 && static_cast<int64_t>(plan.size()) > opts.max_probes) {
        std::mt19937 gen(opts.probe_seed);
        for (size_t i = plan.size() - 1; i > 0; --i) {
            size_t j = gen() % (i + 1);
            std::swap(plan[i], plan[j]);
        }
        plan.resize(static_cast<size_t>(opts.max_probes));
    }

    for (auto [ti, j] : plan) {
        Tensor<double>& t = const_cast<Tensor<double>&>(inputs[ti]);
        double* cell = &t.data()[static_cast<size_t>(j)];
        const double orig = *cell;
        *cell = orig + opts.eps;
        detail::EvalOut plus = detail::eval_nograd(fn);
        *cell = orig - opts.eps;
        detail::EvalOut minus = detail::eval_nograd(fn);
        *cell = orig;

        if (opts.skip_kinks && (plus.hash != base_hash || minus.hash != base_hash)) {
            ++res.skipped;
            continue;
        }
        ++res.probes;
        if (!plus.finite || !minus.finite) {
            res.finite = false;
            continue;
        }
        const double numeric = (plus.value - minus.value) / (2.0 * opts.eps);
        const double a = analytic[ti][static_cast<size_t>(j)];
        const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
        const double rel = std::fabs(a - numeric) / denom;
        if (!std::isfinite(rel)) res.finite = false;
        if (rel > res.max_rel_error) res.max_rel_error = rel;
    }
    return res;
}

// ---------------------------------------------------------------------------
// The release-gate suite: every differentiable primitive, the composed
// encoder block, and spot probes through the full network.
// ---------------------------------------------------------------------------

struct SuiteEntry {
    std::string name;
    double tolerance = 1e-4;
    GradCheckResult result;

    bool pass() const { return result.pass(tolerance); }
};

namespace detail {

inline Tensor<double> rand_tensor(const Shape& s, double lo, double hi, std::mt19937& gen,
                                  bool requires_grad) {
    Tensor<double> t = Tensor<double>::zeros(s, requires_grad);
    for (double& v : t.data()) v = lo + (hi - lo) * init::unit(gen);
    return t;
}

inline Tensor<double> rand_binary(const Shape& s, std::mt19937& gen) {
    Tensor<double> t = Tensor<double>::zeros(s);
    for (double& v : t.data()) v = init::unit(gen) < 0.5 ? 0.0 : 1.0;
    return t;
}

inline void merge(GradCheckResult& into, const GradCheckResult& r) {
    into.max_rel_error = std::max(into.max_rel_error, r.max_rel_error);
    into.probes += r.probes;
    into.skipped += r.skipped;
    into.finite = into.finite && r.finite;
}

}  // namespace detail

// Runs every case over `nseeds` random instances and aggregates the worst
// relative error per case. `corrupt_conv_offset` is the sensitivity fixture:
// it biases the analytic conv2d gradients so that case must fail.
inline std::vector<SuiteEntry> gradcheck_suite(int nseeds, double corrupt_conv_offset = 0.0) {
    std::vector<SuiteEntry> entries;
    for (const char* name : {"conv2d", "maxpool2d", "upsample", "batchnorm", "relu6", "sigmoid",
                             "concat", "add", "bce", "encoder_dcb", "ucloudnet_k1"})
        entries.push_back(SuiteEntry{name, 1e-4, {}});
    SuiteEntry& e_conv = entries[0];
    SuiteEntry& e_pool = entries[1];
    SuiteEntry& e_up = entries[2];
    SuiteEntry& e_bn = entries[3];
    SuiteEntry& e_relu = entries[4];
    SuiteEntry& e_sig = entries[5];
    SuiteEntry& e_cat = entries[6];
    SuiteEntry& e_add = entries[7];
    SuiteEntry& e_bce = entries[8];
    SuiteEntry& e_enc = entries[9];
    SuiteEntry& e_net = entries[10];

    for (int seed = 0; seed < nseeds; ++seed) {
        std::mt19937 gen(9000u + static_cast<uint32_t>(seed));
        GradCheckOptions opts;
        opts.probe_seed = 77u + static_cast<uint32_t>(seed);

        {  // conv2d: alternate a 3x3 pad-1 case with a strided 2x2 case
            Tensor<double> x = detail::rand_tensor({2, 3, 8, 8}, -1, 1, gen, true);
            const bool strided = seed % 2 == 1;
            Tensor<double> w = detail::rand_tensor({4, 3, strided ? 2 : 3, strided ? 2 : 3},
                                                   -0.5, 0.5, gen, true);
            Tensor<double> b = detail::rand_tensor({1, 4, 1, 1}, -0.5, 0.5, gen, true);
            const int stride = strided ? 2 : 1, pad = strided ? 0 : 1;
            GradCheckOptions o = opts;
            o.analytic_offset = corrupt_conv_offset;
            detail::merge(e_conv.result, grad_check(
                [&](Graph<double>& gg) { return sum(gg, conv2d(gg, x, w, b, stride, pad)); },
                {x, w, b}, o));
        }
        {  // maxpool2d, weighted so each output location matters differently
            Tensor<double> x = detail::rand_tensor({1, 1, 6, 6}, -1, 1, gen, true);
            Tensor<double> c = detail::rand_tensor({1, 1, 3, 3}, 0.5, 1.5, gen, false);
            detail::merge(e_pool.result, grad_check(
                [&](Graph<double>& gg) { return sum(gg, mul(gg, maxpool2d(gg, x), c)); },
                {x}, opts));
        }
        {  // upsample_nearest2x
            Tensor<double> x = detail::rand_tensor({1, 2, 3, 3}, -1, 1, gen, true);
            Tensor<double> c = detail::rand_tensor({1, 2, 6, 6}, 0.5, 1.5, gen, false);
            detail::merge(e_up.result, grad_check(
                [&](Graph<double>& gg) { return sum(gg, mul(gg, upsample_nearest2x(gg, x), c)); },
                {x}, opts));
        }
        {  // batchnorm2d in training mode, probing x/gamma/beta
            Tensor<double> x = detail::rand_tensor({2, 3, 4, 4}, -2, 2, gen, true);
            Tensor<double> ga = detail::rand_tensor({1, 3, 1, 1}, 0.5, 1.5, gen, true);
            Tensor<double> be = detail::rand_tensor({1, 3, 1, 1}, -0.5, 0.5, gen, true);
            Tensor<double> rm = Tensor<double>::zeros({1, 3, 1, 1});
            Tensor<double> rv = Tensor<double>::filled({1, 3, 1, 1}, 1.0);
            Tensor<double> c = detail::rand_tensor({2, 3, 4, 4}, 0.5, 1.5, gen, false);
            detail::merge(e_bn.result, grad_check(
                [&](Graph<double>& gg) {
                    return sum(gg, mul(gg, batchnorm2d(gg, x, ga, be, rm, rv, true, 0.1, 1e-5), c));
                },
                {x, ga, be}, opts));
        }
        {  // relu6 spanning both kinks; kink-adjacent probes are skipped
            Tensor<double> x = detail::rand_tensor({1, 2, 4, 4}, -8, 8, gen, true);
            Tensor<double> c = detail::rand_tensor({1, 2, 4, 4}, 0.5, 1.5, gen, false);
            detail::merge(e_relu.result, grad_check(
                [&](Graph<double>& gg) { return sum(gg, mul(gg, relu6(gg, x), c)); },
                {x}, opts));
        }
        {  // sigmoid
            Tensor<double> x = detail::rand_tensor({1, 2, 4, 4}, -4, 4, gen, true);
            Tensor<double> c = detail::rand_tensor({1, 2, 4, 4}, 0.5, 1.5, gen, false);
            detail::merge(e_sig.result, grad_check(
                [&](Graph<double>& gg) { return sum(gg, mul(gg, sigmoid(gg, x), c)); },
                {x}, opts));
        }
        {  // concat_channels, weighted to make the channel routing observable
            Tensor<double> a = detail::rand_tensor({1, 2, 3, 3}, -1, 1, gen, true);
            Tensor<double> b = detail::rand_tensor({1, 3, 3, 3}, -1, 1, gen, true);
            Tensor<double> c = detail::rand_tensor({1, 5, 3, 3}, 0.5, 1.5, gen, false);
            detail::merge(e_cat.result, grad_check(
                [&](Graph<double>& gg) { return sum(gg, mul(gg, concat_channels(gg, a, b), c)); },
                {a, b}, opts));
        }
        {  // add, including the fan-out pattern add(x, x)
            Tensor<double> a = detail::rand_tensor({1, 2, 3, 3}, -1, 1, gen, true);
            Tensor<double> b = detail::rand_tensor({1, 2, 3, 3}, -1, 1, gen, true);
            Tensor<double> c = detail::rand_tensor({1, 2, 3, 3}, 0.5, 1.5, gen, false);
            detail::merge(e_add.result, grad_check(
                [&](Graph<double>& gg) {
                    return sum(gg, mul(gg, add(gg, add(gg, a, a), b), c));
                },
                {a, b}, opts));
        }
        {  // bce away from the clamp bounds
            Tensor<double> p = detail::rand_tensor({1, 1, 4, 4}, 0.05, 0.95, gen, true);
            Tensor<double> y = detail::rand_binary({1, 1, 4, 4}, gen);
            detail::merge(e_bce.result, grad_check(
                [&](Graph<double>& gg) { return bce(gg, p, y); }, {p}, opts));
        }
        {  // composed encoder block (with projection shortcut), training mode
            EncoderDCB<double> block(3, 4, gen);
            Tensor<double> x = detail::rand_tensor({1, 3, 8, 8}, 0, 1, gen, true);
            Tensor<double> c = detail::rand_tensor({1, 4, 8, 8}, 0.5, 1.5, gen, false);
            std::vector<NamedTensor<double>> named;
            block.collect("enc", named);
            std::vector<Tensor<double>> probes{x};
            for (auto& nt : named)
                if (nt.trainable) probes.push_back(nt.tensor);
            GradCheckOptions o = opts;
            // Keeps 98% of coordinates; the excluded tail is dominated by
            // structurally cancelled gradients (|a| ~ 1e-15) that only
            // measure rounding noise.
            o.min_analytic = 1e-3;
            detail::merge(e_enc.result, grad_check(
                [&](Graph<double>& gg) { return sum(gg, mul(gg, block.forward(gg, x, true), c)); },
                probes, o));
        }
        {  // full network spot probes: 10 weights through the training loss.
            // The end-to-end loss accumulates ~1e-12 of evaluation rounding,
            // which puts ~5e-8 of absolute noise on a central difference at
            // this eps; only coordinates whose gradient clears that floor by
            // a wide margin are informative here. Small-gradient coordinates
            // are covered by the per-primitive cases above.
            UCloudNet<double> net(1, 4200u + static_cast<uint32_t>(seed));
            Tensor<double> x = detail::rand_tensor({1, 3, 32, 32}, 0, 1, gen, false);
            Tensor<double> y = detail::rand_binary({1, 1, 32, 32}, gen);
            std::vector<Tensor<double>> probes;
            for (auto& nt : net.trainable_parameters()) probes.push_back(nt.tensor);
            LossConfig lc;
            GradCheckOptions o = opts;
            o.max_probes = 10;
            o.min_analytic = 2e-3;
            detail::merge(e_net.result, grad_check(
                [&](Graph<double>& gg) {
                    auto out = net.forward(gg, x, true);
                    return total_loss(gg, out.main, out.aux2, out.aux4, y, lc).total;
                },
                probes, o));
        }
    }
    return entries;
}

}  // namespace ucn

#endif  // UCN_GRADCHECK_HPP
