#include <doctest.h>

#include <cmath>

#include "ucn/gradcheck.hpp"
#include "ucn/ops.hpp"

using namespace ucn;

namespace {

Tensor<double> rnd(const Shape& s, double lo, double hi, std::mt19937& gen, bool rg = true) {
    Tensor<double> t = Tensor<double>::zeros(s, rg);
    for (double& v : t.data()) v = lo + (hi - lo) * init::unit(gen);
    return t;
}

}  // namespace

TEST_CASE("conv2d: centered delta kernel reproduces the input") {
    Graph<double> g;
    std::mt19937 gen(1);
    Tensor<double> x = rnd({1, 1, 4, 4}, -2, 2, gen, false);
    Tensor<double> w = Tensor<double>::zeros({1, 1, 3, 3});
    w.at(0, 0, 1, 1) = 1.0;
    Tensor<double> b = Tensor<double>::zeros({1, 1, 1, 1});
    Tensor<double> y = conv2d(g, x, w, b, 1, 1);
    REQUIRE(y.shape() == x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);

    Tensor<double> ones = Tensor<double>::filled({1, 1, 4, 4}, 1.0);
    Tensor<double> y2 = conv2d(g, ones, w, b, 1, 1);
    for (double v : y2.data()) CHECK(v == 1.0);
}

TEST_CASE("conv2d: 1x1 kernel of ones sums channels and adds bias") {
    Graph<double> g;
    Tensor<double> x = Tensor<double>::filled({1, 2, 2, 2}, 1.0);
    Tensor<double> w = Tensor<double>::filled({1, 2, 1, 1}, 1.0);
    Tensor<double> b = Tensor<double>::filled({1, 1, 1, 1}, 0.5);
    Tensor<double> y = conv2d(g, x, w, b, 1, 0);
    REQUIRE(y.shape() == Shape{1, 1, 2, 2});
    for (double v : y.data()) CHECK(v == doctest::Approx(2.5));
}

TEST_CASE("conv2d: shape validation") {
    Graph<double> g;
    Tensor<double> x = Tensor<double>::zeros({1, 3, 8, 8});
    Tensor<double> w_badc = Tensor<double>::zeros({4, 2, 3, 3});
    Tensor<double> b4 = Tensor<double>::zeros({1, 4, 1, 1});
    CHECK_THROWS_AS(conv2d(g, x, w_badc, b4, 1, 1), ShapeError);

    Tensor<double> w = Tensor<double>::zeros({4, 3, 3, 3});
    CHECK_THROWS_AS(conv2d(g, x, w, b4, 2, 1), ShapeError);  // (8+2-3)/2 not integral
    Tensor<double> b_bad = Tensor<double>::zeros({1, 3, 1, 1});
    CHECK_THROWS_AS(conv2d(g, x, w, b_bad, 1, 1), ShapeError);
}

TEST_CASE("maxpool2d: window max, tie-break, and odd-size rejection") {
    Graph<double> g;
    Tensor<double> x = Tensor<double>::from_data({1, 1, 2, 2}, {1, 2, 3, 4}, true);
    Tensor<double> y = maxpool2d(g, x);
    REQUIRE(y.numel() == 1);
    CHECK(y.value() == 4.0);

    // Constant window: the full gradient lands on the first element.
    Tensor<double> c = Tensor<double>::filled({1, 1, 2, 2}, 7.0, true);
    Tensor<double> yc = maxpool2d(g, c);
    g.backward(sum(g, yc));
    CHECK(c.grad()[0] == 1.0);
    CHECK(c.grad()[1] == 0.0);
    CHECK(c.grad()[2] == 0.0);
    CHECK(c.grad()[3] == 0.0);

    Tensor<double> odd = Tensor<double>::zeros({1, 1, 3, 4});
    CHECK_THROWS_AS(maxpool2d(g, odd), ShapeError);
}

TEST_CASE("upsample_nearest2x: replication and exact inverse under maxpool") {
    Graph<double> g;
    Tensor<double> x = Tensor<double>::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
    Tensor<double> y = upsample_nearest2x(g, x);
    const double want[16] = {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
    REQUIRE(y.numel() == 16);
    for (int i = 0; i < 16; ++i) CHECK(y.data()[i] == want[i]);

    std::mt19937 gen(3);
    Tensor<double> r = rnd({2, 3, 4, 4}, -5, 5, gen, false);
    Tensor<double> round = maxpool2d(g, upsample_nearest2x(g, r));
    for (int64_t i = 0; i < r.numel(); ++i) CHECK(round.data()[i] == r.data()[i]);
}

TEST_CASE("batchnorm2d: training statistics and eval identity") {
    Graph<double> g;
    std::mt19937 gen(5);
    Tensor<double> x = rnd({2, 3, 4, 4}, -3, 3, gen, false);
    Tensor<double> gamma = Tensor<double>::filled({1, 3, 1, 1}, 1.0);
    Tensor<double> beta = Tensor<double>::zeros({1, 3, 1, 1});
    Tensor<double> rm = Tensor<double>::zeros({1, 3, 1, 1});
    Tensor<double> rv = Tensor<double>::filled({1, 3, 1, 1}, 1.0);

    Tensor<double> y = batchnorm2d(g, x, gamma, beta, rm, rv, true, 0.1, 1e-5);
    const int64_t M = 2 * 4 * 4;
    for (int c = 0; c < 3; ++c) {
        double mean = 0, var = 0;
        for (int n = 0; n < 2; ++n)
            for (int h = 0; h < 4; ++h)
                for (int w = 0; w < 4; ++w) mean += y.at(n, c, h, w);
        mean /= M;
        for (int n = 0; n < 2; ++n)
            for (int h = 0; h < 4; ++h)
                for (int w = 0; w < 4; ++w) {
                    const double d = y.at(n, c, h, w) - mean;
                    var += d * d;
                }
        var /= M;
        CHECK(std::fabs(mean) < 1e-5);
        CHECK(std::fabs(var - 1.0) < 1e-3);
    }
    // Running stats moved toward the batch stats.
    CHECK(rm.data()[0] != 0.0);
    CHECK(rv.data()[0] != 1.0);

    Tensor<double> rm0 = Tensor<double>::zeros({1, 3, 1, 1});
    Tensor<double> rv1 = Tensor<double>::filled({1, 3, 1, 1}, 1.0);
    Tensor<double> ye = batchnorm2d(g, x, gamma, beta, rm0, rv1, false, 0.1, 1e-5);
    for (int64_t i = 0; i < x.numel(); ++i)
        CHECK(ye.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-4));

    Tensor<double> single = Tensor<double>::zeros({1, 3, 1, 1});
    CHECK_THROWS_AS(batchnorm2d(g, single, gamma, beta, rm, rv, true, 0.1, 1e-5), ValueError);
}

TEST_CASE("relu6 and sigmoid pointwise contracts") {
    Graph<double> g;
    Tensor<double> x = Tensor<double>::from_data({1, 1, 1, 4}, {-1, 3, 7, 0}, true);
    Tensor<double> y = relu6(g, x);
    CHECK(y.data()[0] == 0.0);
    CHECK(y.data()[1] == 3.0);
    CHECK(y.data()[2] == 6.0);
    CHECK(y.data()[3] == 0.0);
    g.backward(sum(g, y));
    CHECK(x.grad()[0] == 0.0);  // below 0
    CHECK(x.grad()[1] == 1.0);  // interior
    CHECK(x.grad()[2] == 0.0);  // above 6
    CHECK(x.grad()[3] == 0.0);  // exactly at the kink

    Graph<double> g2;
    Tensor<double> z = Tensor<double>::from_data({1, 1, 1, 3}, {0.0, 40.0, -40.0});
    Tensor<double> s = sigmoid(g2, z);
    CHECK(s.data()[0] == 0.5);
    CHECK(std::isfinite(s.data()[1]));
    CHECK(std::isfinite(s.data()[2]));
    CHECK(s.data()[1] == doctest::Approx(1.0));
    CHECK(s.data()[2] == doctest::Approx(0.0));
}

TEST_CASE("concat_channels: ordering, zero-channel identity, exact slicing") {
    Graph<double> g;
    std::mt19937 gen(7);
    Tensor<double> a = rnd({1, 1, 2, 2}, -1, 1, gen, false);
    Tensor<double> b = rnd({1, 2, 2, 2}, -1, 1, gen, false);
    Tensor<double> y = concat_channels(g, a, b);
    REQUIRE(y.shape() == Shape{1, 3, 2, 2});
    for (int h = 0; h < 2; ++h)
        for (int w = 0; w < 2; ++w) {
            CHECK(y.at(0, 0, h, w) == a.at(0, 0, h, w));
            CHECK(y.at(0, 1, h, w) == b.at(0, 0, h, w));
            CHECK(y.at(0, 2, h, w) == b.at(0, 1, h, w));
        }

    Tensor<double> empty = Tensor<double>::zeros({1, 0, 2, 2});
    Tensor<double> same = concat_channels(g, a, empty);
    REQUIRE(same.shape() == a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(same.data()[i] == a.data()[i]);

    Tensor<double> mism = Tensor<double>::zeros({1, 1, 3, 2});
    CHECK_THROWS_AS(concat_channels(g, a, mism), ShapeError);
}

TEST_CASE("backward: linear functional, fan-out, accumulation across calls") {
    Graph<double> g;
    std::mt19937 gen(11);
    Tensor<double> x = rnd({1, 2, 3, 3}, -1, 1, gen, true);
    Tensor<double> s = sum(g, x);
    g.backward(s);
    for (double v : x.grad()) CHECK(v == 1.0);

    Graph<double> g2;
    Tensor<double> x2 = rnd({1, 1, 2, 2}, -1, 1, gen, true);
    Tensor<double> s2 = sum(g2, add(g2, x2, x2));
    g2.backward(s2);
    for (double v : x2.grad()) CHECK(v == 2.0);
    // Second call without zeroing doubles the leaf gradients exactly.
    g2.backward(s2);
    for (double v : x2.grad()) CHECK(v == 4.0);

    Tensor<double> vec = rnd({1, 1, 1, 3}, -1, 1, gen, true);
    Graph<double> g3;
    Tensor<double> nonscalar = scale(g3, vec, 2.0);
    CHECK_THROWS_AS(g3.backward(nonscalar), ShapeError);
}

TEST_CASE("add requires equal shapes and forwards gradients unchanged") {
    Graph<double> g;
    std::mt19937 gen(13);
    Tensor<double> a = rnd({1, 2, 2, 2}, -1, 1, gen, true);
    Tensor<double> zeros = Tensor<double>::zeros(a.shape());
    Tensor<double> y = add(g, a, zeros);
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(y.data()[i] == a.data()[i]);

    Tensor<double> c = rnd({1, 2, 2, 2}, 0.5, 1.5, gen, false);
    g.backward(sum(g, mul(g, y, c)));
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(a.grad()[i] == c.data()[i]);

    Tensor<double> bad = Tensor<double>::zeros({1, 2, 2, 3});
    CHECK_THROWS_AS(add(g, a, bad), ShapeError);
}

TEST_CASE("grad_check: exact on linear maps, tight on smooth chains") {
    std::mt19937 gen(17);
    Tensor<double> x = rnd({1, 2, 3, 3}, -1, 1, gen, true);
    GradCheckResult lin = grad_check(
        [&](Graph<double>& g) { return sum(g, scale(g, x, 2.0)); }, {x});
    CHECK(lin.probes == x.numel());
    CHECK(lin.max_rel_error < 1e-9);

    Tensor<double> z = rnd({1, 1, 3, 3}, -2, 2, gen, true);
    Tensor<double> c = rnd({1, 1, 3, 3}, 0.5, 1.5, gen, false);
    GradCheckResult sig = grad_check(
        [&](Graph<double>& g) { return sum(g, mul(g, sigmoid(g, z), c)); }, {z});
    CHECK(sig.max_rel_error < 1e-6);
}

TEST_CASE("grad_check: probes that cross a relu6 kink are skipped") {
    Tensor<double> x = Tensor<double>::from_data({1, 1, 1, 2}, {0.0, 3.0}, true);
    GradCheckResult r = grad_check(
        [&](Graph<double>& g) { return sum(g, relu6(g, x)); }, {x});
    CHECK(r.skipped == 1);  // the element at the kink
    CHECK(r.probes == 1);   // the interior element
    CHECK(r.max_rel_error < 1e-9);
}

TEST_CASE("grad_check flags corrupted analytic gradients") {
    std::mt19937 gen(19);
    Tensor<double> x = rnd({1, 1, 3, 3}, -1, 1, gen, true);
    GradCheckOptions opts;
    opts.analytic_offset = 1e-3;
    GradCheckResult r = grad_check(
        [&](Graph<double>& g) { return sum(g, scale(g, x, 2.0)); }, {x}, opts);
    CHECK_FALSE(r.pass(1e-4));
}

TEST_CASE("forward stays finite on bounded inputs with declared-init weights") {
    std::mt19937 gen(23);
    Graph<double> g;
    Tensor<double> x = rnd({1, 3, 8, 8}, -50, 50, gen, false);
    BasicConv2d<double> layer(3, 4, 3, gen);
    Tensor<double> y = layer.forward(g, x, true);
    Tensor<double> s = sigmoid(g, y);
    for (double v : y.data()) CHECK(std::isfinite(v));
    for (double v : s.data()) CHECK(std::isfinite(v));
}

TEST_CASE("graph replay: identical forwards give identical outputs and gradients") {
    std::mt19937 gen(29);
    Tensor<double> x = rnd({1, 2, 4, 4}, -1, 1, gen, true);
    Tensor<double> w = rnd({2, 2, 3, 3}, -0.5, 0.5, gen, true);
    Tensor<double> b = rnd({1, 2, 1, 1}, -0.5, 0.5, gen, true);

    auto run = [&](std::vector<double>& out_grads) {
        x.zero_grad();
        w.zero_grad();
        b.zero_grad();
        Graph<double> g;
        Tensor<double> y = sum(g, sigmoid(g, conv2d(g, x, w, b, 1, 1)));
        g.backward(y);
        out_grads.clear();
        for (double v : x.grad()) out_grads.push_back(v);
        for (double v : w.grad()) out_grads.push_back(v);
        return y.value();
    };
    std::vector<double> g1, g2;
    const double v1 = run(g1);
    const double v2 = run(g2);
    CHECK(v1 == v2);
    REQUIRE(g1.size() == g2.size());
    for (size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("gradcheck suite: all cases pass at the release tolerance") {
    for (const SuiteEntry& e : gradcheck_suite(2)) {
        INFO(e.name, " max_rel_error=", e.result.max_rel_error, " probes=", e.result.probes,
             " skipped=", e.result.skipped);
        CHECK(e.pass());
    }
}

TEST_CASE("gradcheck suite: corrupted conv gradients are caught") {
    bool conv_failed = false;
    for (const SuiteEntry& e : gradcheck_suite(1, 1e-3)) {
        if (e.name == "conv2d")
            conv_failed = !e.pass();
        else
            CHECK(e.pass());
    }
    CHECK(conv_failed);
}
