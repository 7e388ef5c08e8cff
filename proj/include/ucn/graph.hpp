#ifndef UCN_GRAPH_HPP
#define UCN_GRAPH_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "ucn/tensor.hpp"

namespace ucn {

// Reverse-mode tape. Operations append nodes in execution order, so the list
// is already topologically sorted; backward() walks it in exact reverse order.
//
// Gradient semantics: leaf tensors (parameters, inputs created by the caller)
// accumulate with += across backward calls until explicitly zeroed. Interior
// tensors get scratch gradients that are reset at the start of each backward
// pass, so each call propagates a fresh seed of 1 from the loss.
template <typename T>
class Graph {
public:
    struct Node {
        const char* op;
        std::shared_ptr<Storage<T>> out;
        std::function<void(Graph&)> backward;
    };

    // When false, ops compute forward only and the tape stays empty.
    bool recording = true;

    // When true, ops with discrete choices (maxpool argmax, relu6 clamp
    // regions) fold those choices into decision_hash(). The gradient checker
    // uses this to detect probes that cross a kink.
    bool track_decisions = false;

    void reset() {
        nodes_.clear();
        reset_decisions();
    }

    size_t size() const { return nodes_.size(); }

    int push_node(const char* op, const std::shared_ptr<Storage<T>>& out,
                  std::function<void(Graph&)> fn) {
        out->leaf = false;
        out->node = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{op, out, std::move(fn)});
        return out->node;
    }

    void note_decision(uint64_t v) {
        hash_ = (hash_ ^ v) * 1099511628211ull;  // FNV-1a step
    }
    uint64_t decision_hash() const { return hash_; }
    void reset_decisions() { hash_ = 14695981039346656037ull; }

    void backward(const Tensor<T>& loss) {
        if (loss.numel() != 1)
            throw ShapeError("backward: loss must be scalar, got " + loss.shape().str());
        ++epoch_;
        Storage<T>& ls = *loss.storage();
        if (T* g = sink(ls)) g[0] += T(1);
        for (size_t i = nodes_.size(); i-- > 0;) {
            Node& nd = nodes_[i];
            if (nd.out->grad_epoch == epoch_ && !nd.out->grad.empty())
                nd.backward(*this);
        }
    }

    // Gradient buffer for accumulation during the current backward pass.
    // Returns nullptr for tensors that do not require gradients.
    T* sink(Storage<T>& s) {
        if (!s.requires_grad) return nullptr;
        if (s.grad.empty()) s.grad.assign(static_cast<size_t>(s.shape.numel()), T(0));
        if (!s.leaf && s.grad_epoch != epoch_)
            std::fill(s.grad.begin(), s.grad.end(), T(0));
        s.grad_epoch = epoch_;
        return s.grad.data();
    }

private:
    std::vector<Node> nodes_;
    uint64_t epoch_ = 0;
    uint64_t hash_ = 14695981039346656037ull;
};

}  // namespace ucn

#endif  // UCN_GRAPH_HPP
