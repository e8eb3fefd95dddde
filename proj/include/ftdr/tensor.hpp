#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ftdr/error.hpp"
#include "ftdr/rng.hpp"

namespace ftdr {

// ---------------------------------------------------------------------------
// Dense 64-bit float tensor with reverse-mode differentiation.
//
// Tensors are value-semantic handles onto a shared buffer. Operations record
// themselves on the thread-local Graph tape when any input requires grad;
// Graph::backward replays the tape in reverse append order and accumulates
// gradients into leaf tensors.
// ---------------------------------------------------------------------------

struct TensorImpl {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
};

class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, double fill);
    Tensor(std::vector<int> shape, std::vector<double> values);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape), 0.0); }
    static Tensor ones(std::vector<int> shape) { return Tensor(std::move(shape), 1.0); }
    static Tensor full(std::vector<int> shape, double v) { return Tensor(std::move(shape), v); }
    static Tensor scalar(double v) { return Tensor({1}, v); }
    static Tensor uniform(std::vector<int> shape, SplitMix64& rng, double lo = 0.0,
                          double hi = 1.0);
    // Kaiming-uniform fan-in initialization (gain sqrt(2), bound sqrt(6/fan_in)).
    static Tensor kaiming(std::vector<int> shape, int fan_in, SplitMix64& rng);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int>& shape() const { return impl_->shape; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    int dim(int axis) const;
    int64_t numel() const { return static_cast<int64_t>(impl_->data.size()); }

    double* data() { return impl_->data.data(); }
    const double* data() const { return impl_->data.data(); }
    std::vector<double>& vec() { return impl_->data; }
    const std::vector<double>& vec() const { return impl_->data; }
    double& operator[](int64_t i) { return impl_->data[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return impl_->data[static_cast<size_t>(i)]; }
    // Scalar fetch; contract error when numel != 1.
    double value() const;

    bool requires_grad() const { return impl_->requires_grad; }
    Tensor& set_requires_grad(bool v) {
        impl_->requires_grad = v;
        return *this;
    }

    bool has_grad() const { return !impl_->grad.empty(); }
    // Gradient buffer, allocated (zero) on first mutable access.
    std::vector<double>& grad();
    const std::vector<double>& grad() const { return impl_->grad; }
    void zero_grad() { impl_->grad.clear(); }
    Tensor grad_tensor() const;

    // Deep copy of the data as a fresh non-differentiable leaf.
    Tensor detach() const;
    Tensor clone() const;

    std::shared_ptr<TensorImpl> ptr() const { return impl_; }

  private:
    std::shared_ptr<TensorImpl> impl_;
};

// ---------------------------------------------------------------------------
// Recording tape. Nodes hold (tag, output, backward closure); input handles
// and saved activations live inside the closure.
// ---------------------------------------------------------------------------

class Graph {
  public:
    struct Node {
        const char* tag;
        std::shared_ptr<TensorImpl> out;
        std::function<void()> backward;
    };

    static Graph& current();

    bool recording() const { return no_grad_depth_ == 0; }
    void record(const char* tag, std::shared_ptr<TensorImpl> out, std::function<void()> fn);

    // Reverse-order replay. Leaf gradients accumulate across calls; grads of
    // op outputs are reset per call. Throws ContractError on non-scalar loss.
    void backward(const Tensor& loss);

    void clear() { nodes_.clear(); }
    size_t size() const { return nodes_.size(); }

    void push_no_grad() { ++no_grad_depth_; }
    void pop_no_grad() { --no_grad_depth_; }

  private:
    std::vector<Node> nodes_;
    int no_grad_depth_ = 0;
};

struct NoGradGuard {
    NoGradGuard() { Graph::current().push_no_grad(); }
    ~NoGradGuard() { Graph::current().pop_no_grad(); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// ---------------------------------------------------------------------------
// Operations. All differentiable unless noted. Binary elementwise ops follow
// numpy broadcasting (right-aligned, size-1 axes stretch).
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);

// 2-D matrix product (M,K)x(K,N).
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor softmax(const Tensor& a, int axis);
Tensor sum(const Tensor& a);
Tensor sum(const Tensor& a, int axis);
Tensor mean(const Tensor& a);
Tensor mean(const Tensor& a, int axis);
Tensor l1_norm(const Tensor& a);

Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor narrow(const Tensor& a, int axis, int start, int len);
Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor permute(const Tensor& a, const std::vector<int>& axes);
Tensor transpose(const Tensor& a);  // 2-D

// Cross-correlation with zero padding; input (N,C,H,W), weight (O,C,kH,kW),
// bias (O) or undefined.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
              int padding, int dilation = 1);

// Transposed convolution; input (N,C,H,W), weight (C,O,kH,kW), bias (O) or
// undefined. Output spatial size (H-1)*stride - 2*padding + kH.
Tensor deconv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                int padding);

// Half-pixel bilinear upsampling of (N,C,H,W) by an integer factor.
Tensor bilinear_upsample(const Tensor& a, int factor);

// ---------------------------------------------------------------------------
// Raw matrix kernels shared by conv/attention paths (row-major).
// ---------------------------------------------------------------------------
namespace detail {
// C = A(M,K) * B(K,N), C preallocated; accumulate adds instead of overwriting.
void mm_nn(const double* A, const double* B, double* C, int M, int K, int N, bool accumulate);
// C = A(M,K) * B(N,K)^T
void mm_nt(const double* A, const double* B, double* C, int M, int K, int N, bool accumulate);
// C = A(K,M)^T * B(K,N)
void mm_tn(const double* A, const double* B, double* C, int M, int K, int N, bool accumulate);
}  // namespace detail

}  // namespace ftdr
