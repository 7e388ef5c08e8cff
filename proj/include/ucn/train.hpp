#ifndef UCN_TRAIN_HPP
#define UCN_TRAIN_HPP

#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "ucn/checkpoint.hpp"
#include "ucn/data.hpp"
#include "ucn/loss.hpp"

namespace ucn {

// One optimizer step's logged losses. aux2/aux4 are meaningful only when aux
// was recorded (they export as empty CSV fields otherwise).
struct LossRecord {
    int64_t iter = 0;
    double main = 0, aux2 = 0, aux4 = 0, total = 0, lr = 0;
    bool aux = false;
};

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_loss_history(const std::string& path, const std::vector<LossRecord>& records,
                               bool append = false) {
    std::ofstream out(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!out) throw IoError("cannot write loss history: " + path);
    if (!append) out << "iter,main,aux2,aux4,total,lr\n";
    for (const LossRecord& r : records) {
        out << r.iter << ',' << format_g17(r.main) << ',';
        if (r.aux) out << format_g17(r.aux2);
        out << ',';
        if (r.aux) out << format_g17(r.aux4);
        out << ',' << format_g17(r.total) << ',' << format_g17(r.lr) << '\n';
    }
}

// CSV reader for the same format (resume support and tests).
std::vector<LossRecord> read_loss_history(const std::string& path);

struct FitResult {
    std::vector<LossRecord> history;
    int epochs_completed = 0;
    int64_t iterations = 0;
};

// The training loop. Runs epochs [start_epoch, cfg.epochs); one Adam step
// per batch with batch-norm in training mode; writes a checkpoint (including
// optimizer state) at the end of every epoch when checkpoint_path is
// non-empty. A non-finite loss or gradient aborts via NumericalError, leaving
// the last epoch-end checkpoint in place.
template <typename T>
FitResult fit(UCloudNet<T>& model, SampleSource& train, const RunConfig& cfg,
              const std::string& checkpoint_path, AdamState<T>& adam, int start_epoch = 0,
              int64_t start_iter = 0,
              const std::function<void(const LossRecord&)>& on_record = nullptr) {
    if (train.size() == 0) throw ValueError("fit: empty training set");
    LossConfig lc;
    lc.aux_enabled = cfg.aux;
    std::vector<NamedTensor<T>> params = model.trainable_parameters();
    if (adam.m.size() != params.size()) adam.init(params);

    FitResult res;
    res.epochs_completed = start_epoch;
    res.iterations = start_iter;
    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(cfg, epoch);
        for (const std::vector<size_t>& batch_idx :
             batch_plan(train.size(), static_cast<size_t>(cfg.batch_size), cfg.seed, epoch)) {
            auto [bi, bm] = stack_batch(train, batch_idx);
            Tensor<T> images, masks;
            if constexpr (std::is_same_v<T, float>) {
                images = bi;
                masks = bm;
            } else {
                images = bi.template cast<T>();
                masks = bm.template cast<T>();
            }

            Graph<T> g;
            typename UCloudNet<T>::Outputs out = model.forward(g, images, true);
            LossBreakdown<T> loss = total_loss(g, out.main, out.aux2, out.aux4, masks, lc);
            const double total = static_cast<double>(loss.total.value());
            if (!std::isfinite(total))
                throw NumericalError("non-finite total loss at iteration " +
                                     std::to_string(res.iterations));
            g.backward(loss.total);
            adam_step(params, adam, lr);

            LossRecord rec;
            rec.iter = res.iterations;
            rec.main = static_cast<double>(loss.main.value());
            if (loss.aux) {
                rec.aux2 = static_cast<double>(loss.aux2.value());
                rec.aux4 = static_cast<double>(loss.aux4.value());
            }
            rec.total = total;
            rec.lr = lr;
            rec.aux = loss.aux;
            res.history.push_back(rec);
            if (on_record) on_record(rec);
            ++res.iterations;
        }
        res.epochs_completed = epoch + 1;
        if (!checkpoint_path.empty())
            save_checkpoint(checkpoint_path, model, &adam, cfg, res.epochs_completed,
                            res.iterations);
    }
    return res;
}

inline std::vector<LossRecord> read_loss_history(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read loss history: " + path);
    std::vector<LossRecord> out;
    std::string line;
    if (!std::getline(in, line)) return out;
    if (line != "iter,main,aux2,aux4,total,lr")
        throw IoError("unexpected loss history header in " + path + ": " + line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        size_t pos = 0;
        while (true) {
            size_t c = line.find(',', pos);
            if (c == std::string::npos) {
                cells.push_back(line.substr(pos));
                break;
            }
            cells.push_back(line.substr(pos, c - pos));
            pos = c + 1;
        }
        if (cells.size() != 6) throw IoError("malformed loss history row in " + path + ": " + line);
        LossRecord r;
        r.iter = std::stoll(cells[0]);
        r.main = std::stod(cells[1]);
        r.aux = !cells[2].empty();
        if (r.aux) {
            r.aux2 = std::stod(cells[2]);
            r.aux4 = std::stod(cells[3]);
        }
        r.total = std::stod(cells[4]);
        r.lr = std::stod(cells[5]);
        out.push_back(r);
    }
    return out;
}

}  // namespace ucn

#endif  // UCN_TRAIN_HPP
