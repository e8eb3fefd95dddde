#include "ftdr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ftdr {

namespace {

int64_t shape_numel(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

void check_shape(const std::vector<int>& s) {
    for (size_t i = 0; i < s.size(); ++i)
        if (s[i] <= 0)
            throw ShapeError("non-positive extent at axis " + std::to_string(i) + " in " +
                             shape_str(s));
}

void accumulate_grad(const std::shared_ptr<TensorImpl>& t, const double* g, size_t n) {
    if (t->grad.empty()) t->grad.assign(t->data.size(), 0.0);
    double* dst = t->grad.data();
    for (size_t i = 0; i < n; ++i) dst[i] += g[i];
}

// Whether the result of an op over these inputs should be traced.
bool want_grad(std::initializer_list<const Tensor*> ins) {
    if (!Graph::current().recording()) return false;
    for (const Tensor* t : ins)
        if (t->defined() && t->requires_grad()) return true;
    return false;
}

int normalize_axis(int axis, int rank) {
    int a = axis < 0 ? axis + rank : axis;
    if (a < 0 || a >= rank)
        throw ShapeError("axis " + std::to_string(axis) + " out of range for rank " +
                         std::to_string(rank));
    return a;
}

}  // namespace

// --------------------------------------------------------------------------
// Tensor basics
// --------------------------------------------------------------------------

Tensor::Tensor(std::vector<int> shape) : Tensor(std::move(shape), 0.0) {}

Tensor::Tensor(std::vector<int> shape, double fill) {
    check_shape(shape);
    impl_ = std::make_shared<TensorImpl>();
    impl_->data.assign(static_cast<size_t>(shape_numel(shape)), fill);
    impl_->shape = std::move(shape);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values) {
    check_shape(shape);
    if (shape_numel(shape) != static_cast<int64_t>(values.size()))
        throw ShapeError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
    impl_ = std::make_shared<TensorImpl>();
    impl_->shape = std::move(shape);
    impl_->data = std::move(values);
}

Tensor Tensor::uniform(std::vector<int> shape, SplitMix64& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    for (auto& v : t.vec()) v = rng.uniform(lo, hi);
    return t;
}

Tensor Tensor::kaiming(std::vector<int> shape, int fan_in, SplitMix64& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    return uniform(std::move(shape), rng, -bound, bound);
}

int Tensor::dim(int axis) const {
    int a = normalize_axis(axis, rank());
    return impl_->shape[static_cast<size_t>(a)];
}

double Tensor::value() const {
    if (numel() != 1) throw ContractError("value() requires a scalar tensor, got " +
                                          shape_str(impl_->shape));
    return impl_->data[0];
}

std::vector<double>& Tensor::grad() {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
    return impl_->grad;
}

Tensor Tensor::grad_tensor() const {
    Tensor g(impl_->shape);
    if (!impl_->grad.empty()) g.vec() = impl_->grad;
    return g;
}

Tensor Tensor::detach() const {
    Tensor t(impl_->shape);
    t.vec() = impl_->data;
    return t;
}

Tensor Tensor::clone() const {
    Tensor t = detach();
    t.set_requires_grad(impl_->requires_grad);
    return t;
}

// --------------------------------------------------------------------------
// Graph
// --------------------------------------------------------------------------

Graph& Graph::current() {
    thread_local Graph g;
    return g;
}

void Graph::record(const char* tag, std::shared_ptr<TensorImpl> out, std::function<void()> fn) {
    nodes_.push_back(Node{tag, std::move(out), std::move(fn)});
}

void Graph::backward(const Tensor& loss) {
    if (loss.numel() != 1)
        throw ContractError("backward requires a scalar loss, got numel " +
                            std::to_string(loss.numel()));
    // Op outputs get pass-local gradients; leaves (never an output) accumulate
    // across repeated calls.
    for (auto& n : nodes_) n.out->grad.clear();
    auto lp = loss.ptr();
    if (lp->grad.empty()) lp->grad.assign(lp->data.size(), 0.0);
    lp->grad[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (it->out->grad.empty()) continue;  // nothing flowed here
        it->backward();
    }
}

// --------------------------------------------------------------------------
// Broadcast machinery
// --------------------------------------------------------------------------

namespace {

std::vector<int> broadcast_shape(const std::vector<int>& a, const std::vector<int>& b) {
    size_t r = std::max(a.size(), b.size());
    std::vector<int> out(r);
    for (size_t i = 0; i < r; ++i) {
        int da = i < r - a.size() ? 1 : a[i - (r - a.size())];
        int db = i < r - b.size() ? 1 : b[i - (r - b.size())];
        if (da != db && da != 1 && db != 1)
            throw ShapeError("broadcast mismatch at axis " + std::to_string(i) + ": " +
                             std::to_string(da) + " vs " + std::to_string(db));
        out[i] = std::max(da, db);
    }
    return out;
}

// Row-major strides of `shape` embedded in the broadcast coordinate space
// `out`, with 0 stride on stretched axes.
std::vector<int64_t> broadcast_strides(const std::vector<int>& shape,
                                       const std::vector<int>& out) {
    std::vector<int64_t> strides(out.size(), 0);
    int64_t s = 1;
    size_t off = out.size() - shape.size();
    for (size_t i = shape.size(); i-- > 0;) {
        strides[off + i] = (shape[i] == 1 && out[off + i] != 1) ? 0 : s;
        s *= shape[i];
    }
    return strides;
}

// Odometer loop: fn(out_index, a_offset, b_offset) for every output element.
template <typename Fn>
void for_each_broadcast(const std::vector<int>& out, const std::vector<int64_t>& sa,
                        const std::vector<int64_t>& sb, Fn&& fn) {
    size_t r = out.size();
    int64_t n = shape_numel(out);
    std::vector<int> coord(r, 0);
    int64_t oa = 0, ob = 0;
    for (int64_t i = 0; i < n; ++i) {
        fn(i, oa, ob);
        for (size_t d = r; d-- > 0;) {
            ++coord[d];
            oa += sa[d];
            ob += sb[d];
            if (coord[d] < out[d]) break;
            oa -= sa[d] * out[d];
            ob -= sb[d] * out[d];
            coord[d] = 0;
        }
    }
}

enum class BinOp { Add, Sub, Mul, Div };

Tensor binary_op(const char* tag, BinOp op, const Tensor& a, const Tensor& b) {
    const auto& as = a.shape();
    const auto& bs = b.shape();
    bool same = as == bs;
    std::vector<int> os = same ? as : broadcast_shape(as, bs);
    Tensor out(os);
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    int64_t n = out.numel();

    auto apply = [op](double x, double y) {
        switch (op) {
            case BinOp::Add: return x + y;
            case BinOp::Sub: return x - y;
            case BinOp::Mul: return x * y;
            default: return x / y;
        }
    };

    if (same) {
        for (int64_t i = 0; i < n; ++i) po[i] = apply(pa[i], pb[i]);
    } else {
        auto sa = broadcast_strides(as, os);
        auto sb = broadcast_strides(bs, os);
        for_each_broadcast(os, sa, sb,
                           [&](int64_t i, int64_t ia, int64_t ib) { po[i] = apply(pa[ia], pb[ib]); });
    }

    if (want_grad({&a, &b})) {
        out.set_requires_grad(true);
        auto ai = a.ptr(), bi = b.ptr(), oi = out.ptr();
        auto os_c = os;
        Graph::current().record(tag, oi, [=]() {
            const double* g = oi->grad.data();
            bool need_a = ai->requires_grad;
            bool need_b = bi->requires_grad;
            if (need_a && ai->grad.empty()) ai->grad.assign(ai->data.size(), 0.0);
            if (need_b && bi->grad.empty()) bi->grad.assign(bi->data.size(), 0.0);
            const double* xa = ai->data.data();
            const double* xb = bi->data.data();
            double* ga = ai->grad.data();
            double* gb = bi->grad.data();
            auto accf = [&](int64_t i, int64_t ia, int64_t ib) {
                double gi = g[i];
                switch (op) {
                    case BinOp::Add:
                        if (need_a) ga[ia] += gi;
                        if (need_b) gb[ib] += gi;
                        break;
                    case BinOp::Sub:
                        if (need_a) ga[ia] += gi;
                        if (need_b) gb[ib] -= gi;
                        break;
                    case BinOp::Mul:
                        if (need_a) ga[ia] += gi * xb[ib];
                        if (need_b) gb[ib] += gi * xa[ia];
                        break;
                    case BinOp::Div: {
                        double inv = 1.0 / xb[ib];
                        if (need_a) ga[ia] += gi * inv;
                        if (need_b) gb[ib] -= gi * xa[ia] * inv * inv;
                        break;
                    }
                }
            };
            if (ai->shape == bi->shape) {
                int64_t m = static_cast<int64_t>(oi->data.size());
                for (int64_t i = 0; i < m; ++i) accf(i, i, i);
            } else {
                auto sa = broadcast_strides(ai->shape, os_c);
                auto sb = broadcast_strides(bi->shape, os_c);
                for_each_broadcast(os_c, sa, sb, accf);
            }
        });
    }
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op("add", BinOp::Add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op("sub", BinOp::Sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op("mul", BinOp::Mul, a, b); }
Tensor div(const Tensor& a, const Tensor& b) { return binary_op("div", BinOp::Div, a, b); }

// --------------------------------------------------------------------------
// Unary / affine
// --------------------------------------------------------------------------

namespace {

template <typename FwdFn, typename BwdFn>
Tensor unary_op(const char* tag, const Tensor& a, FwdFn fwd, BwdFn dfn) {
    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = fwd(pa[i]);
    if (want_grad({&a})) {
        out.set_requires_grad(true);
        auto ai = a.ptr(), oi = out.ptr();
        Graph::current().record(tag, oi, [=]() {
            if (ai->grad.empty()) ai->grad.assign(ai->data.size(), 0.0);
            const double* g = oi->grad.data();
            const double* x = ai->data.data();
            const double* y = oi->data.data();
            double* ga = ai->grad.data();
            int64_t m = static_cast<int64_t>(ai->data.size());
            for (int64_t i = 0; i < m; ++i) ga[i] += g[i] * dfn(x[i], y[i]);
        });
    }
    return out;
}

}  // namespace

Tensor scale(const Tensor& a, double s) {
    return unary_op("scale", a, [s](double x) { return x * s; },
                    [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary_op("add_scalar", a, [s](double x) { return x + s; },
                    [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& a) {
    return unary_op("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
                    [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op("sigmoid", a,
                    [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                    [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
    return unary_op("tanh", a, [](double x) { return std::tanh(x); },
                    [](double, double y) { return 1.0 - y * y; });
}

Tensor log(const Tensor& a) {
    return unary_op("log", a, [](double x) { return std::log(x); },
                    [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
    return unary_op("sqrt", a, [](double x) { return std::sqrt(x); },
                    [](double, double y) { return 0.5 / y; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    return unary_op("clamp", a,
                    [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
                    [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

// --------------------------------------------------------------------------
// Matrix kernels
// --------------------------------------------------------------------------

namespace detail {

void mm_nn(const double* A, const double* B, double* C, int M, int K, int N, bool accumulate) {
    if (!accumulate) std::fill(C, C + static_cast<size_t>(M) * N, 0.0);
    for (int i = 0; i < M; ++i) {
        const double* a = A + static_cast<size_t>(i) * K;
        double* c = C + static_cast<size_t>(i) * N;
        for (int k = 0; k < K; ++k) {
            double av = a[k];
            if (av == 0.0) continue;
            const double* b = B + static_cast<size_t>(k) * N;
            for (int j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

void mm_nt(const double* A, const double* B, double* C, int M, int K, int N, bool accumulate) {
    for (int i = 0; i < M; ++i) {
        const double* a = A + static_cast<size_t>(i) * K;
        double* c = C + static_cast<size_t>(i) * N;
        for (int j = 0; j < N; ++j) {
            const double* b = B + static_cast<size_t>(j) * K;
            double acc = 0.0;
            for (int k = 0; k < K; ++k) acc += a[k] * b[k];
            if (accumulate)
                c[j] += acc;
            else
                c[j] = acc;
        }
    }
}

void mm_tn(const double* A, const double* B, double* C, int M, int K, int N, bool accumulate) {
    if (!accumulate) std::fill(C, C + static_cast<size_t>(M) * N, 0.0);
    for (int k = 0; k < K; ++k) {
        const double* a = A + static_cast<size_t>(k) * M;
        const double* b = B + static_cast<size_t>(k) * N;
        for (int i = 0; i < M; ++i) {
            double av = a[i];
            if (av == 0.0) continue;
            double* c = C + static_cast<size_t>(i) * N;
            for (int j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

}  // namespace detail

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul expects rank-2 tensors, got " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    int M = a.shape()[0], K = a.shape()[1], K2 = b.shape()[0], N = b.shape()[1];
    if (K != K2)
        throw ShapeError("matmul inner-dimension mismatch at axis 1: " + std::to_string(K) +
                         " vs " + std::to_string(K2));
    Tensor out({M, N});
    detail::mm_nn(a.data(), b.data(), out.data(), M, K, N, false);
    if (want_grad({&a, &b})) {
        out.set_requires_grad(true);
        auto ai = a.ptr(), bi = b.ptr(), oi = out.ptr();
        Graph::current().record("matmul", oi, [=]() {
            const double* g = oi->grad.data();
            // dA = g * B^T ; dB = A^T * g
            if (ai->requires_grad) {
                if (ai->grad.empty()) ai->grad.assign(ai->data.size(), 0.0);
                detail::mm_nt(g, bi->data.data(), ai->grad.data(), M, N, K, true);
            }
            if (bi->requires_grad) {
                if (bi->grad.empty()) bi->grad.assign(bi->data.size(), 0.0);
                detail::mm_tn(ai->data.data(), g, bi->grad.data(), K, M, N, true);
            }
        });
    }
    return out;
}

// --------------------------------------------------------------------------
// Softmax / reductions
// --------------------------------------------------------------------------

namespace {

// Decompose shape around `axis` into (outer, extent, inner).
void axis_split(const std::vector<int>& s, int axis, int64_t& outer, int& extent,
                int64_t& inner) {
    outer = 1;
    inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[static_cast<size_t>(i)];
    extent = s[static_cast<size_t>(axis)];
    for (size_t i = static_cast<size_t>(axis) + 1; i < s.size(); ++i) inner *= s[i];
}

}  // namespace

Tensor softmax(const Tensor& a, int axis) {
    int ax = normalize_axis(axis, a.rank());
    int64_t outer, inner;
    int extent;
    axis_split(a.shape(), ax, outer, extent, inner);
    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t in = 0; in < inner; ++in) {
            const double* x = pa + o * extent * inner + in;
            double* y = po + o * extent * inner + in;
            double mx = x[0];
            for (int e = 1; e < extent; ++e) mx = std::max(mx, x[static_cast<size_t>(e) * inner]);
            double z = 0.0;
            for (int e = 0; e < extent; ++e) {
                double v = std::exp(x[static_cast<size_t>(e) * inner] - mx);
                y[static_cast<size_t>(e) * inner] = v;
                z += v;
            }
            double invz = 1.0 / z;
            for (int e = 0; e < extent; ++e) y[static_cast<size_t>(e) * inner] *= invz;
        }
    }
    if (want_grad({&a})) {
        out.set_requires_grad(true);
        auto ai = a.ptr(), oi = out.ptr();
        Graph::current().record("softmax", oi, [=]() {
            if (ai->grad.empty()) ai->grad.assign(ai->data.size(), 0.0);
            const double* g = oi->grad.data();
            const double* y = oi->data.data();
            double* ga = ai->grad.data();
            for (int64_t o = 0; o < outer; ++o) {
                for (int64_t in = 0; in < inner; ++in) {
                    size_t base = static_cast<size_t>(o * extent * inner + in);
                    double dot = 0.0;
                    for (int e = 0; e < extent; ++e) {
                        size_t idx = base + static_cast<size_t>(e) * inner;
                        dot += g[idx] * y[idx];
                    }
                    for (int e = 0; e < extent; ++e) {
                        size_t idx = base + static_cast<size_t>(e) * inner;
                        ga[idx] += (g[idx] - dot) * y[idx];
                    }
                }
            }
        });
    }
    return out;
}

Tensor sum(const Tensor& a) {
    Tensor out = Tensor::scalar(std::accumulate(a.data(), a.data() + a.numel(), 0.0));
    if (want_grad({&a})) {
        out.set_requires_grad(true);
        auto ai = a.ptr(), oi = out.ptr();
        Graph::current().record("sum", oi, [=]() {
            if (ai->grad.empty()) ai->grad.assign(ai->data.size(), 0.0);
            double g = oi->grad[0];
            for (auto& v : ai->grad) v += g;
        });
    }
    return out;
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor sum(const Tensor& a, int axis) {
    int ax = normalize_axis(axis, a.rank());
    int64_t outer, inner;
    int extent;
    axis_split(a.shape(), ax, outer, extent, inner);
    std::vector<int> os = a.shape();
    os.erase(os.begin() + ax);
    if (os.empty()) os.push_back(1);
    Tensor out(os);
    const double* pa = a.data();
    double* po = out.data();
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t in = 0; in < inner; ++in) {
            double acc = 0.0;
            for (int e = 0; e < extent; ++e)
                acc += pa[o * extent * inner + static_cast<size_t>(e) * inner + in];
            po[o * inner + in] = acc;
        }
    if (want_grad({&a})) {
        out.set_requires_grad(true);
        auto ai = a.ptr(), oi = out.ptr();
        Graph::current().record("sum_axis", oi, [=]() {
            if (ai->grad.empty()) ai->grad.assign(ai->data.size(), 0.0);
            const double* g = oi->grad.data();
            double* ga = ai->grad.data();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t in = 0; in < inner; ++in) {
                    double gv = g[o * inner + in];
                    for (int e = 0; e < extent; ++e)
                        ga[o * extent * inner + static_cast<size_t>(e) * inner + in] += gv;
                }
        });
    }
    return out;
}

Tensor mean(const Tensor& a, int axis) {
    int ax = normalize_axis(axis, a.rank());
    return scale(sum(a, ax), 1.0 / static_cast<double>(a.shape()[static_cast<size_t>(ax)]));
}

Tensor l1_norm(const Tensor& a) {
    double acc = 0.0;
    const double* pa = a.data();
    int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) acc += std::fabs(pa[i]);
    Tensor out = Tensor::scalar(acc);
    if (want_grad({&a})) {
        out.set_requires_grad(true);
        auto ai = a.ptr(), oi = out.ptr();
        Graph::current().record("l1_norm", oi, [=]() {
            if (ai->grad.empty()) ai->grad.assign(ai->data.size(), 0.0);
            double g = oi->grad[0];
            const double* x = ai->data.data();
            double* ga = ai->grad.data();
            int64_t m = static_cast<int64_t>(ai->data.size());
            for (int64_t i = 0; i < m; ++i)
                ga[i] += g * (x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0));
        });
    }
    return out;
}

// --------------------------------------------------------------------------
// Shape ops
// --------------------------------------------------------------------------

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ContractError("concat of zero tensors");
    int rank = parts[0].rank();
    int ax = normalize_axis(axis, rank);
    std::vector<int> os = parts[0].shape();
    int total = 0;
    for (const auto& p : parts) {
        if (p.rank() != rank) throw ShapeError("concat rank mismatch");
        for (int d = 0; d < rank; ++d)
            if (d != ax && p.shape()[static_cast<size_t>(d)] != os[static_cast<size_t>(d)])
                throw ShapeError("concat extent mismatch at axis " + std::to_string(d));
        total += p.shape()[static_cast<size_t>(ax)];
    }
    os[static_cast<size_t>(ax)] = total;
    Tensor out(os);

    int64_t outer, inner;
    int extent_out;
    axis_split(os, ax, outer, extent_out, inner);
    double* po = out.data();
    int offset = 0;
    bool traced = false;
    for (const auto& p : parts)
        if (p.requires_grad()) traced = true;
    traced = traced && Graph::current().recording();

    for (const auto& p : parts) {
        int e = p.shape()[static_cast<size_t>(ax)];
        const double* pp = p.data();
        for (int64_t o = 0; o < outer; ++o)
            std::copy(pp + o * e * inner, pp + (o + 1) * e * inner,
                      po + (o * extent_out + offset) * inner);
        offset += e;
    }

    if (traced) {
        out.set_requires_grad(true);
        std::vector<std::shared_ptr<TensorImpl>> impls;
        std::vector<int> extents;
        for (const auto& p : parts) {
            impls.push_back(p.ptr());
            extents.push_back(p.shape()[static_cast<size_t>(ax)]);
        }
        auto oi = out.ptr();
        Graph::current().record("concat", oi, [=]() {
            const double* g = oi->grad.data();
            int off = 0;
            for (size_t pi = 0; pi < impls.size(); ++pi) {
                auto& t = impls[pi];
                if (t->grad.empty()) t->grad.assign(t->data.size(), 0.0);
                int e = extents[pi];
                for (int64_t o = 0; o < outer; ++o) {
                    const double* src = g + (o * extent_out + off) * inner;
                    double* dst = t->grad.data() + o * e * inner;
                    for (int64_t i = 0; i < e * inner; ++i) dst[i] += src[i];
                }
                off += e;
            }
        });
    }
    return out;
}

Tensor narrow(const Tensor& a, int axis, int start, int len) {
    int ax = normalize_axis(axis, a.rank());
    int extent = a.shape()[static_cast<size_t>(ax)];
    if (start < 0 || len <= 0 || start + len > extent)
        throw ShapeError("narrow range [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") out of bounds for axis " +
                         std::to_string(ax) + " extent " + std::to_string(extent));
    std::vector<int> os = a.shape();
    os[static_cast<size_t>(ax)] = len;
    Tensor out(os);
    int64_t outer, inner;
    int e_in;
    axis_split(a.shape(), ax, outer, e_in, inner);
    const double* pa = a.data();
    double* po = out.data();
    for (int64_t o = 0; o < outer; ++o)
        std::copy(pa + (o * e_in + start) * inner, pa + (o * e_in + start + len) * inner,
                  po + o * len * inner);
    if (want_grad({&a})) {
        out.set_requires_grad(true);
        auto ai = a.ptr(), oi = out.ptr();
        Graph::current().record("narrow", oi, [=]() {
            if (ai->grad.empty()) ai->grad.assign(ai->data.size(), 0.0);
            const double* g = oi->grad.data();
            double* ga = ai->grad.data();
            for (int64_t o = 0; o < outer; ++o) {
                const double* src = g + o * len * inner;
                double* dst = ga + (o * e_in + start) * inner;
                for (int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
            }
        });
    }
    return out;
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
    check_shape(shape);
    if (shape_numel(shape) != a.numel())
        throw ShapeError("reshape " + shape_str(a.shape()) + " -> " + shape_str(shape) +
                         " changes element count");
    Tensor out(std::move(shape));
    out.vec() = a.vec();
    if (want_grad({&a})) {
        out.set_requires_grad(true);
        auto ai = a.ptr(), oi = out.ptr();
        Graph::current().record("reshape", oi, [=]() {
            accumulate_grad(ai, oi->grad.data(), oi->grad.size());
        });
    }
    return out;
}

Tensor permute(const Tensor& a, const std::vector<int>& axes) {
    int r = a.rank();
    if (static_cast<int>(axes.size()) != r) throw ShapeError("permute axes size mismatch");
    std::vector<bool> seen(static_cast<size_t>(r), false);
    std::vector<int> os(static_cast<size_t>(r));
    for (int i = 0; i < r; ++i) {
        int ax = normalize_axis(axes[static_cast<size_t>(i)], r);
        if (seen[static_cast<size_t>(ax)]) throw ShapeError("permute repeats axis " +
                                                            std::to_string(ax));
        seen[static_cast<size_t>(ax)] = true;
        os[static_cast<size_t>(i)] = a.shape()[static_cast<size_t>(ax)];
    }
    // in strides mapped to output coordinate order
    std::vector<int64_t> in_strides(static_cast<size_t>(r), 1);
    for (int i = r - 2; i >= 0; --i)
        in_strides[static_cast<size_t>(i)] =
            in_strides[static_cast<size_t>(i + 1)] * a.shape()[static_cast<size_t>(i + 1)];
    std::vector<int64_t> strides(static_cast<size_t>(r));
    for (int i = 0; i < r; ++i)
        strides[static_cast<size_t>(i)] = in_strides[static_cast<size_t>(axes[static_cast<size_t>(i)])];

    Tensor out(os);
    const double* pa = a.data();
    double* po = out.data();
    int64_t n = out.numel();
    std::vector<int> coord(static_cast<size_t>(r), 0);
    int64_t src = 0;
    for (int64_t i = 0; i < n; ++i) {
        po[i] = pa[src];
        for (int d = r; d-- > 0;) {
            ++coord[static_cast<size_t>(d)];
            src += strides[static_cast<size_t>(d)];
            if (coord[static_cast<size_t>(d)] < os[static_cast<size_t>(d)]) break;
            src -= strides[static_cast<size_t>(d)] * os[static_cast<size_t>(d)];
            coord[static_cast<size_t>(d)] = 0;
        }
    }
    if (want_grad({&a})) {
        out.set_requires_grad(true);
        auto ai = a.ptr(), oi = out.ptr();
        auto os_c = os;
        auto strides_c = strides;
        int rr = r;
        Graph::current().record("permute", oi, [=]() {
            if (ai->grad.empty()) ai->grad.assign(ai->data.size(), 0.0);
            const double* g = oi->grad.data();
            double* ga = ai->grad.data();
            int64_t m = static_cast<int64_t>(oi->data.size());
            std::vector<int> c(static_cast<size_t>(rr), 0);
            int64_t s = 0;
            for (int64_t i = 0; i < m; ++i) {
                ga[s] += g[i];
                for (int d = rr; d-- > 0;) {
                    ++c[static_cast<size_t>(d)];
                    s += strides_c[static_cast<size_t>(d)];
                    if (c[static_cast<size_t>(d)] < os_c[static_cast<size_t>(d)]) break;
                    s -= strides_c[static_cast<size_t>(d)] * os_c[static_cast<size_t>(d)];
                    c[static_cast<size_t>(d)] = 0;
                }
            }
        });
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("transpose expects rank-2, got " + shape_str(a.shape()));
    return permute(a, {1, 0});
}

}  // namespace ftdr
