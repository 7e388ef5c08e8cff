#ifndef UCN_TENSOR_HPP
#define UCN_TENSOR_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ucn {

class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValueError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when training hits non-finite values; maps to a distinct CLI exit code.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// All tensors are dense 4-D (N, C, H, W), row-major.
struct Shape {
    int64_t n = 0, c = 0, h = 0, w = 0;

    int64_t numel() const { return n * c * h * w; }
    bool operator==(const Shape&) const = default;

    std::string str() const {
        std::ostringstream os;
        os << "(" << n << "," << c << "," << h << "," << w << ")";
        return os.str();
    }
};

template <typename T>
struct Storage {
    Shape shape{};
    std::vector<T> data;
    std::vector<T> grad;        // allocated lazily, only while requires_grad
    bool requires_grad = false;
    bool leaf = true;           // false for op outputs
    int node = -1;              // producing node id in the tape, -1 for leaves
    uint64_t grad_epoch = 0;    // backward pass that last touched grad (non-leaf reset)
};

// Value-semantic handle onto shared storage. Copies alias the same buffer;
// data is treated as immutable after creation except for grad (written by
// backward) and batch-norm running statistics (written by training forward).
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    static Tensor zeros(const Shape& s, bool requires_grad = false) {
        return filled(s, T(0), requires_grad);
    }

    static Tensor filled(const Shape& s, T v, bool requires_grad = false) {
        check_shape(s);
        Tensor t;
        t.s_ = std::make_shared<Storage<T>>();
        t.s_->shape = s;
        t.s_->data.assign(static_cast<size_t>(s.numel()), v);
        t.s_->requires_grad = requires_grad;
        return t;
    }

    static Tensor from_data(const Shape& s, std::vector<T> d, bool requires_grad = false) {
        check_shape(s);
        if (static_cast<int64_t>(d.size()) != s.numel())
            throw ShapeError("tensor: data length " + std::to_string(d.size()) +
                             " does not match shape " + s.str());
        Tensor t;
        t.s_ = std::make_shared<Storage<T>>();
        t.s_->shape = s;
        t.s_->data = std::move(d);
        t.s_->requires_grad = requires_grad;
        return t;
    }

    static Tensor scalar(T v) { return from_data(Shape{1, 1, 1, 1}, {v}); }

    bool defined() const { return static_cast<bool>(s_); }
    const Shape& shape() const { return s_->shape; }
    int64_t numel() const { return s_->shape.numel(); }

    std::span<T> data() { return {s_->data.data(), s_->data.size()}; }
    std::span<const T> data() const { return {s_->data.data(), s_->data.size()}; }

    T& at(int64_t n, int64_t c, int64_t h, int64_t w) {
        const Shape& s = s_->shape;
        return s_->data[static_cast<size_t>(((n * s.c + c) * s.h + h) * s.w + w)];
    }
    T at(int64_t n, int64_t c, int64_t h, int64_t w) const {
        return const_cast<Tensor*>(this)->at(n, c, h, w);
    }

    bool requires_grad() const { return s_->requires_grad; }
    void set_requires_grad(bool v) {
        s_->requires_grad = v;
        if (!v) s_->grad.clear();
    }

    bool has_grad() const { return !s_->grad.empty(); }
    std::span<const T> grad() const { return {s_->grad.data(), s_->grad.size()}; }
    std::span<T> grad_mut() { return {s_->grad.data(), s_->grad.size()}; }

    void zero_grad() {
        if (!s_->grad.empty()) std::fill(s_->grad.begin(), s_->grad.end(), T(0));
    }

    // Scalar read; the de-facto representation of a loss value.
    T value() const {
        if (numel() != 1)
            throw ShapeError("value(): tensor " + shape().str() + " is not a scalar");
        return s_->data[0];
    }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> d(s_->data.size());
        for (size_t i = 0; i < d.size(); ++i) d[i] = static_cast<U>(s_->data[i]);
        return Tensor<U>::from_data({s_->shape.n, s_->shape.c, s_->shape.h, s_->shape.w},
                                    std::move(d), s_->requires_grad);
    }

    Tensor clone() const {
        Tensor t;
        t.s_ = std::make_shared<Storage<T>>();
        t.s_->shape = s_->shape;
        t.s_->data = s_->data;
        t.s_->requires_grad = s_->requires_grad;
        return t;
    }

    std::shared_ptr<Storage<T>> storage() const { return s_; }

private:
    static void check_shape(const Shape& s) {
        if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0)
            throw ShapeError("tensor: negative dimension in shape " + s.str());
    }

    std::shared_ptr<Storage<T>> s_;
};

}  // namespace ucn

#endif  // UCN_TENSOR_HPP
