#ifndef PINSITE_TENSOR_HPP
#define PINSITE_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "pinsite/errors.hpp"

namespace pinsite {

/// Dense rank-<=4 tensor in N,C,H,W layout. Missing trailing axes act as
/// extent-1. Scalar type is float for training and double for gradient
/// checking (finite differences are unreliable in 32-bit).
template <typename T>
struct Tensor {
    std::vector<int> dims;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> d) : dims(std::move(d)) {
        v.assign(numel_of(dims), T(0));
    }
    Tensor(std::vector<int> d, std::vector<T> values) : dims(std::move(d)), v(std::move(values)) {
        if (v.size() != numel_of(dims)) throw ShapeError("tensor data length does not match dims");
    }

    static std::size_t numel_of(const std::vector<int>& d) {
        if (d.empty() || d.size() > 4) throw ShapeError("tensor rank must be 1..4");
        std::size_t n = 1;
        for (int e : d) {
            if (e <= 0) throw ShapeError("tensor extent must be positive");
            n *= static_cast<std::size_t>(e);
        }
        return n;
    }

    static Tensor full(std::vector<int> d, T value) {
        Tensor t(std::move(d));
        std::fill(t.v.begin(), t.v.end(), value);
        return t;
    }

    std::size_t size() const { return v.size(); }
    int rank() const { return static_cast<int>(dims.size()); }
    int dim(int i) const { return i < rank() ? dims[i] : 1; }

    int n() const { return dim(0); }
    int c() const { return dim(1); }
    int h() const { return dim(2); }
    int w() const { return dim(3); }

    T& at(int in, int ic, int ih, int iw) {
        return v[((static_cast<std::size_t>(in) * c() + ic) * h() + ih) * w() + iw];
    }
    T at(int in, int ic, int ih, int iw) const {
        return v[((static_cast<std::size_t>(in) * c() + ic) * h() + ih) * w() + iw];
    }

    bool same_dims(const Tensor& o) const {
        for (int i = 0; i < 4; ++i)
            if (dim(i) != o.dim(i)) return false;
        return true;
    }

    Tensor reshaped(std::vector<int> d) const {
        if (numel_of(d) != size()) throw ShapeError("reshape changes element count");
        return Tensor(std::move(d), v);
    }

    bool all_finite() const {
        for (T x : v)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.dims = dims;
        out.v.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

inline std::string dims_str(const std::vector<int>& d) {
    std::string s = "[";
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(d[i]);
    }
    return s + "]";
}

// ---------------------------------------------------------------------------
// Elementwise ops. Two-tensor forms require identical dims except for the
// supported C x 1 x 1 (or N x C x 1 x 1) broadcast against N x C x H x W used
// by attention scaling.

enum class EwiseKind { add, sub, mul };

namespace detail {

template <typename T>
bool channel_broadcastable(const Tensor<T>& big, const Tensor<T>& small) {
    if (small.h() != 1 || small.w() != 1) return false;
    if (small.c() != big.c()) return false;
    return small.n() == 1 || small.n() == big.n();
}

} // namespace detail

template <typename T>
Tensor<T> ewise(EwiseKind kind, const Tensor<T>& a, const Tensor<T>& b) {
    auto apply = [kind](T x, T y) -> T {
        switch (kind) {
            case EwiseKind::add: return x + y;
            case EwiseKind::sub: return x - y;
            case EwiseKind::mul: return x * y;
        }
        return T(0);
    };
    if (a.same_dims(b)) {
        Tensor<T> out = a;
        for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = apply(a.v[i], b.v[i]);
        return out;
    }
    if (detail::channel_broadcastable(a, b)) {
        Tensor<T> out = a;
        const int N = a.n(), C = a.c(), HW = a.h() * a.w();
        for (int in = 0; in < N; ++in)
            for (int ic = 0; ic < C; ++ic) {
                T s = b.v[(b.n() == 1 ? 0 : in) * C + ic];
                T* p = &out.v[(static_cast<std::size_t>(in) * C + ic) * HW];
                const T* q = &a.v[(static_cast<std::size_t>(in) * C + ic) * HW];
                for (int i = 0; i < HW; ++i) p[i] = apply(q[i], s);
            }
        return out;
    }
    throw ShapeError("elementwise dims mismatch: " + dims_str(a.dims) + " vs " + dims_str(b.dims));
}

template <typename T>
Tensor<T> ewise_scale(const Tensor<T>& a, T s) {
    Tensor<T> out = a;
    for (T& x : out.v) x *= s;
    return out;
}

template <typename T>
Tensor<T> ewise_clamp(const Tensor<T>& a, T lo, T hi) {
    Tensor<T> out = a;
    for (T& x : out.v) x = std::min(hi, std::max(lo, x));
    return out;
}

/// Backward of the broadcast multiply y = a (.) b where b is (N|1) x C x 1 x 1:
/// grad on b sums over the broadcast axes.
template <typename T>
void ewise_mul_backward(const Tensor<T>& gy, const Tensor<T>& a, const Tensor<T>& b,
                        Tensor<T>& ga, Tensor<T>& gb) {
    ga = Tensor<T>(a.dims);
    gb = Tensor<T>(b.dims);
    if (a.same_dims(b)) {
        for (std::size_t i = 0; i < gy.size(); ++i) {
            ga.v[i] = gy.v[i] * b.v[i];
            gb.v[i] = gy.v[i] * a.v[i];
        }
        return;
    }
    if (!detail::channel_broadcastable(a, b))
        throw ShapeError("unsupported broadcast in ewise_mul_backward");
    const int N = a.n(), C = a.c(), HW = a.h() * a.w();
    for (int in = 0; in < N; ++in)
        for (int ic = 0; ic < C; ++ic) {
            std::size_t bi = static_cast<std::size_t>(b.n() == 1 ? 0 : in) * C + ic;
            const std::size_t base = (static_cast<std::size_t>(in) * C + ic) * HW;
            T s = b.v[bi];
            T acc = 0;
            for (int i = 0; i < HW; ++i) {
                ga.v[base + i] = gy.v[base + i] * s;
                acc += gy.v[base + i] * a.v[base + i];
            }
            gb.v[bi] += acc;
        }
}

// ---------------------------------------------------------------------------
// Reductions over an axis subset, with max-backward routed to the first
// maximal element in row-major scan order (deterministic ties).

enum class ReduceKind { sum, mean, max };

struct AxisSet {
    bool axis[4] = {false, false, false, false};
    AxisSet() = default;
    AxisSet(std::initializer_list<int> axes) {
        for (int a : axes) {
            if (a < 0 || a > 3) throw DomainError("reduce axis out of range");
            axis[a] = true;
        }
    }
    static AxisSet all() { return AxisSet{0, 1, 2, 3}; }
};

template <typename T>
struct ReduceResult {
    Tensor<T> value;
    // For max: flat input index of the chosen element per output slot.
    std::vector<std::size_t> argmax;
};

template <typename T>
ReduceResult<T> reduce(ReduceKind kind, const Tensor<T>& x, const AxisSet& axes,
                       bool keep_dims = true) {
    if (x.size() == 0) throw DomainError("reduce of empty tensor");
    int in_d[4] = {x.n(), x.c(), x.h(), x.w()};
    std::vector<int> out_dims;
    int out_d[4];
    for (int i = 0; i < 4; ++i) out_d[i] = axes.axis[i] ? 1 : in_d[i];
    for (int i = 0; i < static_cast<int>(x.dims.size()); ++i)
        if (keep_dims || !axes.axis[i]) out_dims.push_back(out_d[i]);
    if (out_dims.empty()) out_dims.push_back(1);

    ReduceResult<T> res;
    res.value = Tensor<T>(out_dims);
    std::size_t out_n = res.value.size();
    std::size_t group = x.size() / out_n;
    std::vector<T>& ov = res.value.v;
    if (kind == ReduceKind::max) {
        std::fill(ov.begin(), ov.end(), std::numeric_limits<T>::lowest());
        res.argmax.assign(out_n, 0);
    }
    std::size_t i = 0;
    for (int a = 0; a < in_d[0]; ++a)
        for (int b = 0; b < in_d[1]; ++b)
            for (int c = 0; c < in_d[2]; ++c)
                for (int d = 0; d < in_d[3]; ++d, ++i) {
                    std::size_t oi =
                        ((static_cast<std::size_t>(axes.axis[0] ? 0 : a) * out_d[1] +
                          (axes.axis[1] ? 0 : b)) * out_d[2] +
                         (axes.axis[2] ? 0 : c)) * out_d[3] +
                        (axes.axis[3] ? 0 : d);
                    if (kind == ReduceKind::max) {
                        if (x.v[i] > ov[oi]) {
                            ov[oi] = x.v[i];
                            res.argmax[oi] = i;
                        }
                    } else {
                        ov[oi] += x.v[i];
                    }
                }
    if (kind == ReduceKind::mean)
        for (T& o : ov) o /= static_cast<T>(group);
    return res;
}

/// Gradient of reduce w.r.t. its input given gradient on the reduced output.
template <typename T>
Tensor<T> reduce_backward(ReduceKind kind, const ReduceResult<T>& fwd, const Tensor<T>& x,
                          const AxisSet& axes, const Tensor<T>& gy) {
    Tensor<T> gx(x.dims);
    std::size_t out_n = fwd.value.size();
    if (gy.size() != out_n) throw ShapeError("reduce_backward gradient size mismatch");
    if (kind == ReduceKind::max) {
        for (std::size_t oi = 0; oi < out_n; ++oi) gx.v[fwd.argmax[oi]] += gy.v[oi];
        return gx;
    }
    int in_d[4] = {x.n(), x.c(), x.h(), x.w()};
    int out_d[4];
    for (int i = 0; i < 4; ++i) out_d[i] = axes.axis[i] ? 1 : in_d[i];
    T scale = kind == ReduceKind::mean ? static_cast<T>(out_n) / static_cast<T>(x.size()) : T(1);
    std::size_t i = 0;
    for (int a = 0; a < in_d[0]; ++a)
        for (int b = 0; b < in_d[1]; ++b)
            for (int c = 0; c < in_d[2]; ++c)
                for (int d = 0; d < in_d[3]; ++d, ++i) {
                    std::size_t oi =
                        ((static_cast<std::size_t>(axes.axis[0] ? 0 : a) * out_d[1] +
                          (axes.axis[1] ? 0 : b)) * out_d[2] +
                         (axes.axis[2] ? 0 : c)) * out_d[3] +
                        (axes.axis[3] ? 0 : d);
                    gx.v[i] = gy.v[oi] * scale;
                }
    return gx;
}

// ---------------------------------------------------------------------------
// Channel-axis concat/split: exact bit-level inverses.

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw ShapeError("concat of zero parts");
    const Tensor<T>& p0 = parts.front();
    int C = 0;
    for (const auto& p : parts) {
        if (p.n() != p0.n() || p.h() != p0.h() || p.w() != p0.w())
            throw ShapeError("concat parts disagree on N/H/W");
        C += p.c();
    }
    Tensor<T> out({p0.n(), C, p0.h(), p0.w()});
    const std::size_t hw = static_cast<std::size_t>(p0.h()) * p0.w();
    for (int in = 0; in < p0.n(); ++in) {
        std::size_t oc = 0;
        for (const auto& p : parts) {
            const std::size_t chunk = static_cast<std::size_t>(p.c()) * hw;
            std::copy_n(p.v.begin() + static_cast<std::ptrdiff_t>(in * chunk),
                        chunk,
                        out.v.begin() + static_cast<std::ptrdiff_t>(
                                            (static_cast<std::size_t>(in) * C + oc) * hw));
            oc += p.c();
        }
    }
    return out;
}

template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& x, const std::vector<int>& sizes) {
    int total = 0;
    for (int s : sizes) {
        if (s <= 0) throw ShapeError("split size must be positive");
        total += s;
    }
    if (total != x.c()) throw ShapeError("split sizes do not sum to channel count");
    std::vector<Tensor<T>> parts;
    const std::size_t hw = static_cast<std::size_t>(x.h()) * x.w();
    int oc = 0;
    for (int s : sizes) {
        Tensor<T> p({x.n(), s, x.h(), x.w()});
        const std::size_t chunk = static_cast<std::size_t>(s) * hw;
        for (int in = 0; in < x.n(); ++in)
            std::copy_n(x.v.begin() + static_cast<std::ptrdiff_t>(
                                          (static_cast<std::size_t>(in) * x.c() + oc) * hw),
                        chunk, p.v.begin() + static_cast<std::ptrdiff_t>(in * chunk));
        parts.push_back(std::move(p));
        oc += s;
    }
    return parts;
}

// ---------------------------------------------------------------------------
// Central-difference gradient oracle. 64-bit mode only.

inline Tensor<double> finite_difference_gradient(
    const std::function<double(const Tensor<double>&)>& f, const Tensor<double>& x,
    double h = 1e-5) {
    Tensor<double> g(x.dims);
    Tensor<double> probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double orig = probe.v[i];
        probe.v[i] = orig + h;
        double fp = f(probe);
        probe.v[i] = orig - h;
        double fm = f(probe);
        probe.v[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw DomainError("non-finite function value in finite-difference probe");
        g.v[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// max(|a-b|) / max(1, max|a|, max|b|) — the relative error used by every
/// gradient check.
inline double max_rel_err(const Tensor<double>& a, const Tensor<double>& b) {
    if (a.size() != b.size()) throw ShapeError("rel err size mismatch");
    double scale = 1.0, diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        scale = std::max({scale, std::fabs(a.v[i]), std::fabs(b.v[i])});
        diff = std::max(diff, std::fabs(a.v[i] - b.v[i]));
    }
    return diff / scale;
}

// ---------------------------------------------------------------------------
// Named learnable array plus its gradient and Adam moment buffers.

template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> adam_m;
    Tensor<T> adam_v;

    Parameter() = default;
    Parameter(std::string n, Tensor<T> val) : name(std::move(n)), value(std::move(val)) {
        grad = Tensor<T>(value.dims);
        adam_m = Tensor<T>(value.dims);
        adam_v = Tensor<T>(value.dims);
    }

    void zero_grad() { std::fill(grad.v.begin(), grad.v.end(), T(0)); }
};

} // namespace pinsite

#endif
