#ifndef UCN_METRICS_HPP
#define UCN_METRICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ucn/tensor.hpp"

namespace ucn {

// Pixel confusion counts. A pixel is predicted positive iff pred >= threshold
// (ties count positive). Counts accumulate across calls, so one Confusion can
// micro-average a whole test set.
struct Confusion {
    uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    uint64_t total() const { return tp + fp + fn + tn; }

    Confusion& operator+=(const Confusion& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
};

template <typename T>
void accumulate_confusion(Confusion& c, std::span<const T> pred, std::span<const T> mask,
                          double threshold) {
    if (pred.size() != mask.size())
        throw ShapeError("confusion: prediction size " + std::to_string(pred.size()) +
                         " vs mask size " + std::to_string(mask.size()));
    for (size_t i = 0; i < pred.size(); ++i) {
        const bool pos = static_cast<double>(pred[i]) >= threshold;
        const bool truth = mask[i] != T(0);
        if (pos && truth) ++c.tp;
        else if (pos) ++c.fp;
        else if (truth) ++c.fn;
        else ++c.tn;
    }
}

struct Scalars {
    double precision = 0, recall = 0, f_measure = 0, error_rate = 0;
};

// precision = tp/(tp+fp), recall = tp/(tp+fn), F = 2PR/(P+R),
// error = (fp+fn)/total. Every 0/0 maps to 0.
inline Scalars scalar_metrics(const Confusion& c) {
    auto ratio = [](uint64_t num, uint64_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    Scalars s;
    s.precision = ratio(c.tp, c.tp + c.fp);
    s.recall = ratio(c.tp, c.tp + c.fn);
    s.f_measure = (s.precision + s.recall) == 0.0
                      ? 0.0
                      : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    s.error_rate = ratio(c.fp + c.fn, c.total());
    return s;
}

struct PrPoint {
    double threshold = 0, precision = 0, recall = 0;
};

// The 256 thresholds i/255 shared by the curve and its oracle tests.
inline const std::array<double, 256>& pr_thresholds() {
    static const std::array<double, 256> t = [] {
        std::array<double, 256> a{};
        for (int i = 0; i < 256; ++i) a[i] = i / 255.0;
        return a;
    }();
    return t;
}

// Single-pass PR-curve accumulator. Each prediction lands in the bin of the
// largest threshold it still clears (p >= t_i), found with the exact same
// double comparison a naive per-threshold scan would make, so the cumulative
// counts match a brute-force recomputation integer-for-integer.
class PrCurveAccumulator {
public:
    template <typename T>
    void add(std::span<const T> pred, std::span<const T> mask) {
        if (pred.size() != mask.size())
            throw ShapeError("pr_curve: prediction size " + std::to_string(pred.size()) +
                             " vs mask size " + std::to_string(mask.size()));
        const auto& th = pr_thresholds();
        for (size_t i = 0; i < pred.size(); ++i) {
            const double p = static_cast<double>(pred[i]);
            // First threshold strictly above p; p clears everything before it.
            const auto it = std::upper_bound(th.begin(), th.end(), p);
            const int bin = static_cast<int>(it - th.begin()) - 1;
            if (mask[i] != T(0)) {
                ++npos_;
                if (bin >= 0) ++pos_[static_cast<size_t>(bin)];
                else ++pos_below_;
            } else {
                ++nneg_;
                if (bin >= 0) ++neg_[static_cast<size_t>(bin)];
                else ++neg_below_;
            }
        }
    }

    uint64_t positives() const { return npos_; }
    uint64_t negatives() const { return nneg_; }

    // Confusion counts at threshold index i (tp/fp from suffix sums).
    Confusion at(int i) const {
        uint64_t tp = 0, fp = 0;
        for (int b = i; b < 256; ++b) {
            tp += pos_[static_cast<size_t>(b)];
            fp += neg_[static_cast<size_t>(b)];
        }
        return Confusion{tp, fp, npos_ - tp, nneg_ - fp};
    }

    // The full 256-point curve. Refuses one-class streams: precision/recall
    // trade-off is undefined without both classes.
    std::vector<PrPoint> curve() const {
        if (npos_ == 0 || nneg_ == 0)
            throw ValueError("pr_curve: stream has " + std::to_string(npos_) + " positive and " +
                             std::to_string(nneg_) +
                             " negative pixels; both classes are required");
        const auto& th = pr_thresholds();
        std::vector<PrPoint> out(256);
        uint64_t tp = 0, fp = 0;
        for (int i = 255; i >= 0; --i) {
            tp += pos_[static_cast<size_t>(i)];
            fp += neg_[static_cast<size_t>(i)];
            Scalars s = scalar_metrics(Confusion{tp, fp, npos_ - tp, nneg_ - fp});
            out[static_cast<size_t>(i)] = PrPoint{th[static_cast<size_t>(i)], s.precision, s.recall};
        }
        return out;
    }

private:
    std::array<uint64_t, 256> pos_{}, neg_{};
    uint64_t pos_below_ = 0, neg_below_ = 0;  // predictions below threshold 0 (never, for probabilities)
    uint64_t npos_ = 0, nneg_ = 0;
};

// Area under the precision-recall curve by trapezoid over recall-sorted
// points. Equal recalls collapse to their best precision; if the smallest
// achieved recall is positive, the curve is anchored at (recall 0, same
// precision) so a perfect predictor integrates to exactly 1.
inline double auc_pr(const std::vector<PrPoint>& curve) {
    if (curve.empty()) return 0.0;
    std::vector<std::pair<double, double>> pts;  // (recall, precision)
    pts.reserve(curve.size());
    for (const PrPoint& p : curve) pts.emplace_back(p.recall, p.precision);
    std::sort(pts.begin(), pts.end());
    std::vector<std::pair<double, double>> dedup;
    for (const auto& rp : pts) {
        if (!dedup.empty() && dedup.back().first == rp.first)
            dedup.back().second = std::max(dedup.back().second, rp.second);
        else
            dedup.emplace_back(rp);
    }
    if (dedup.front().first > 0.0)
        dedup.insert(dedup.begin(), {0.0, dedup.front().second});
    double area = 0.0;
    for (size_t i = 1; i < dedup.size(); ++i)
        area += (dedup[i].first - dedup[i - 1].first) * 0.5 *
                (dedup[i].second + dedup[i - 1].second);
    return area;
}

}  // namespace ucn

#endif  // UCN_METRICS_HPP
