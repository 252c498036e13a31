#ifndef PINSITE_NN_HPP
#define PINSITE_NN_HPP

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pinsite/gemm.hpp"
#include "pinsite/rng.hpp"
#include "pinsite/tensor.hpp"

namespace pinsite {

enum class Mode { train, infer };

namespace detail {
/// Guided-backprop rectifier gate, toggled via GuidedBackpropGuard.
inline thread_local bool guided_relu_backward = false;
} // namespace detail

struct GuidedBackpropGuard {
    GuidedBackpropGuard() { detail::guided_relu_backward = true; }
    ~GuidedBackpropGuard() { detail::guided_relu_backward = false; }
};

template <typename T>
class Layer {
public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;

    virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
    virtual Tensor<T> backward(const Tensor<T>& gy) = 0;

    virtual void collect_params(std::vector<Parameter<T>*>& out) { (void)out; }
    /// Everything the checkpoint persists: parameter values plus any
    /// non-learnable state (BN running statistics).
    virtual void collect_state(std::vector<std::pair<std::string, Tensor<T>*>>& out) {
        std::vector<Parameter<T>*> ps;
        collect_params(ps);
        for (auto* p : ps) out.emplace_back(p->name, &p->value);
    }

    const std::string& name() const { return name_; }

private:
    std::string name_;
};

// ---------------------------------------------------------------------------
// Convolution (cross-correlation, zero padding, square kernel).

struct Conv2dSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 1;
    int stride = 1;
    int padding = 0;
    int groups = 1;

    void validate() const {
        if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || stride < 1 || padding < 0 ||
            groups < 1)
            throw ConfigError("invalid conv spec");
        if (in_channels % groups != 0 || out_channels % groups != 0)
            throw ConfigError("conv groups must divide in and out channels");
    }

    int out_extent(int in) const {
        int o = (in + 2 * padding - kernel) / stride + 1;
        if (o < 1)
            throw ShapeError("conv output extent non-positive for input " + std::to_string(in));
        return o;
    }

    std::size_t weight_count(bool with_bias = false) const {
        std::size_t w = static_cast<std::size_t>(out_channels) * (in_channels / groups) * kernel *
                        kernel;
        return with_bias ? w + out_channels : w;
    }
};

namespace detail {

// cols is (C * k * k) x (Ho * Wo), rows ordered (channel, ki, kj).
template <typename T>
void im2col(const T* img, int C, int H, int W, const Conv2dSpec& s, int Ho, int Wo, T* cols) {
    const int k = s.kernel;
    for (int c = 0; c < C; ++c)
        for (int ki = 0; ki < k; ++ki)
            for (int kj = 0; kj < k; ++kj) {
                T* row = cols + (static_cast<std::size_t>(c) * k * k + ki * k + kj) *
                                    (static_cast<std::size_t>(Ho) * Wo);
                for (int oh = 0; oh < Ho; ++oh) {
                    int ih = oh * s.stride - s.padding + ki;
                    if (ih < 0 || ih >= H) {
                        for (int ow = 0; ow < Wo; ++ow) row[oh * Wo + ow] = T(0);
                        continue;
                    }
                    const T* src = img + (static_cast<std::size_t>(c) * H + ih) * W;
                    for (int ow = 0; ow < Wo; ++ow) {
                        int iw = ow * s.stride - s.padding + kj;
                        row[oh * Wo + ow] = (iw < 0 || iw >= W) ? T(0) : src[iw];
                    }
                }
            }
}

template <typename T>
void col2im_accum(const T* cols, int C, int H, int W, const Conv2dSpec& s, int Ho, int Wo,
                  T* img) {
    const int k = s.kernel;
    for (int c = 0; c < C; ++c)
        for (int ki = 0; ki < k; ++ki)
            for (int kj = 0; kj < k; ++kj) {
                const T* row = cols + (static_cast<std::size_t>(c) * k * k + ki * k + kj) *
                                          (static_cast<std::size_t>(Ho) * Wo);
                for (int oh = 0; oh < Ho; ++oh) {
                    int ih = oh * s.stride - s.padding + ki;
                    if (ih < 0 || ih >= H) continue;
                    T* dst = img + (static_cast<std::size_t>(c) * H + ih) * W;
                    for (int ow = 0; ow < Wo; ++ow) {
                        int iw = ow * s.stride - s.padding + kj;
                        if (iw >= 0 && iw < W) dst[iw] += row[oh * Wo + ow];
                    }
                }
            }
}

} // namespace detail

template <typename T>
class Conv2d : public Layer<T> {
public:
    Conv2d(std::string name, Conv2dSpec spec, bool with_bias, Rng& rng)
        : Layer<T>(std::move(name)), spec_(spec), has_bias_(with_bias) {
        spec_.validate();
        const int cg = spec_.in_channels / spec_.groups;
        Tensor<T> w({spec_.out_channels, cg, spec_.kernel, spec_.kernel});
        const double std = std::sqrt(2.0 / (static_cast<double>(cg) * spec_.kernel * spec_.kernel));
        for (T& x : w.v) x = static_cast<T>(rng.normal() * std);
        weight_ = Parameter<T>(this->name() + ".weight", std::move(w));
        if (has_bias_)
            bias_ = Parameter<T>(this->name() + ".bias", Tensor<T>({spec_.out_channels}));
    }

    const Conv2dSpec& spec() const { return spec_; }
    Parameter<T>& weight() { return weight_; }
    Parameter<T>& bias() { return bias_; }

    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        if (x.c() != spec_.in_channels)
            throw ShapeError(this->name() + ": expected " + std::to_string(spec_.in_channels) +
                             " input channels, got " + std::to_string(x.c()));
        x_ = x;
        const int N = x.n(), H = x.h(), W = x.w();
        const int Ho = spec_.out_extent(H), Wo = spec_.out_extent(W);
        const int g = spec_.groups;
        const int cg_in = spec_.in_channels / g, cg_out = spec_.out_channels / g;
        const int k2 = spec_.kernel * spec_.kernel;
        const std::size_t hw_out = static_cast<std::size_t>(Ho) * Wo;
        Tensor<T> y({N, spec_.out_channels, Ho, Wo});
        std::vector<T> cols(static_cast<std::size_t>(spec_.in_channels) * k2 * hw_out);
        for (int in = 0; in < N; ++in) {
            const T* img = &x.v[static_cast<std::size_t>(in) * spec_.in_channels * H * W];
            detail::im2col(img, spec_.in_channels, H, W, spec_, Ho, Wo, cols.data());
            for (int gi = 0; gi < g; ++gi) {
                gemm(false, false, cg_out, static_cast<int>(hw_out), cg_in * k2, T(1),
                     &weight_.value.v[static_cast<std::size_t>(gi) * cg_out * cg_in * k2],
                     cg_in * k2, &cols[static_cast<std::size_t>(gi) * cg_in * k2 * hw_out],
                     static_cast<int>(hw_out), T(0),
                     &y.v[(static_cast<std::size_t>(in) * spec_.out_channels +
                           static_cast<std::size_t>(gi) * cg_out) *
                          hw_out],
                     static_cast<int>(hw_out));
            }
            if (has_bias_)
                for (int oc = 0; oc < spec_.out_channels; ++oc) {
                    T b = bias_.value.v[oc];
                    T* row = &y.v[(static_cast<std::size_t>(in) * spec_.out_channels + oc) * hw_out];
                    for (std::size_t i = 0; i < hw_out; ++i) row[i] += b;
                }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        const int N = x_.n(), H = x_.h(), W = x_.w();
        const int Ho = gy.h(), Wo = gy.w();
        const int g = spec_.groups;
        const int cg_in = spec_.in_channels / g, cg_out = spec_.out_channels / g;
        const int k2 = spec_.kernel * spec_.kernel;
        const std::size_t hw_out = static_cast<std::size_t>(Ho) * Wo;
        Tensor<T> gx(x_.dims);
        std::vector<T> cols(static_cast<std::size_t>(spec_.in_channels) * k2 * hw_out);
        std::vector<T> dcols(cols.size());
        for (int in = 0; in < N; ++in) {
            const T* img = &x_.v[static_cast<std::size_t>(in) * spec_.in_channels * H * W];
            detail::im2col(img, spec_.in_channels, H, W, spec_, Ho, Wo, cols.data());
            for (int gi = 0; gi < g; ++gi) {
                const T* gy_g = &gy.v[(static_cast<std::size_t>(in) * spec_.out_channels +
                                       static_cast<std::size_t>(gi) * cg_out) *
                                      hw_out];
                // dW += gy_g * cols_g^T
                gemm(false, true, cg_out, cg_in * k2, static_cast<int>(hw_out), T(1), gy_g,
                     static_cast<int>(hw_out),
                     &cols[static_cast<std::size_t>(gi) * cg_in * k2 * hw_out],
                     static_cast<int>(hw_out), T(1),
                     &weight_.grad.v[static_cast<std::size_t>(gi) * cg_out * cg_in * k2],
                     cg_in * k2);
                // dcols_g = W_g^T * gy_g
                gemm(true, false, cg_in * k2, static_cast<int>(hw_out), cg_out, T(1),
                     &weight_.value.v[static_cast<std::size_t>(gi) * cg_out * cg_in * k2],
                     cg_in * k2, gy_g, static_cast<int>(hw_out), T(0),
                     &dcols[static_cast<std::size_t>(gi) * cg_in * k2 * hw_out],
                     static_cast<int>(hw_out));
            }
            detail::col2im_accum(dcols.data(), spec_.in_channels, H, W, spec_, Ho, Wo,
                                 &gx.v[static_cast<std::size_t>(in) * spec_.in_channels * H * W]);
            if (has_bias_)
                for (int oc = 0; oc < spec_.out_channels; ++oc) {
                    const T* row =
                        &gy.v[(static_cast<std::size_t>(in) * spec_.out_channels + oc) * hw_out];
                    T acc = 0;
                    for (std::size_t i = 0; i < hw_out; ++i) acc += row[i];
                    bias_.grad.v[oc] += acc;
                }
        }
        return gx;
    }

    void collect_params(std::vector<Parameter<T>*>& out) override {
        out.push_back(&weight_);
        if (has_bias_) out.push_back(&bias_);
    }

private:
    Conv2dSpec spec_;
    bool has_bias_;
    Parameter<T> weight_;
    Parameter<T> bias_;
    Tensor<T> x_;
};

// ---------------------------------------------------------------------------
// Batch normalization over N,H,W per channel.

template <typename T>
class BatchNorm2d : public Layer<T> {
public:
    BatchNorm2d(std::string name, int channels, T momentum = T(0.9), T eps = T(1e-5))
        : Layer<T>(std::move(name)),
          channels_(channels),
          momentum_(momentum),
          eps_(eps),
          running_mean_({channels}),
          running_var_(Tensor<T>::full({channels}, T(1))) {
        gamma_ = Parameter<T>(this->name() + ".gamma", Tensor<T>::full({channels}, T(1)));
        beta_ = Parameter<T>(this->name() + ".beta", Tensor<T>({channels}));
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        if (x.c() != channels_) throw ShapeError(this->name() + ": channel mismatch");
        mode_ = mode;
        const int N = x.n(), C = channels_;
        const std::size_t hw = static_cast<std::size_t>(x.h()) * x.w();
        const std::size_t m = static_cast<std::size_t>(N) * hw;
        if (mode == Mode::train && N < 2)
            throw ConfigError(this->name() + ": batch size must be >= 2 in train mode");
        mean_.assign(C, T(0));
        invstd_.assign(C, T(0));
        if (mode == Mode::train) {
            std::vector<T> var(C, T(0));
            for (int in = 0; in < N; ++in)
                for (int c = 0; c < C; ++c) {
                    const T* p = &x.v[(static_cast<std::size_t>(in) * C + c) * hw];
                    T acc = 0;
                    for (std::size_t i = 0; i < hw; ++i) acc += p[i];
                    mean_[c] += acc;
                }
            for (int c = 0; c < C; ++c) mean_[c] /= static_cast<T>(m);
            for (int in = 0; in < N; ++in)
                for (int c = 0; c < C; ++c) {
                    const T* p = &x.v[(static_cast<std::size_t>(in) * C + c) * hw];
                    T acc = 0;
                    for (std::size_t i = 0; i < hw; ++i) {
                        T d = p[i] - mean_[c];
                        acc += d * d;
                    }
                    var[c] += acc;
                }
            for (int c = 0; c < C; ++c) {
                var[c] /= static_cast<T>(m);
                invstd_[c] = T(1) / std::sqrt(var[c] + eps_);
                running_mean_.v[c] = momentum_ * running_mean_.v[c] + (T(1) - momentum_) * mean_[c];
                running_var_.v[c] = momentum_ * running_var_.v[c] + (T(1) - momentum_) * var[c];
            }
        } else {
            for (int c = 0; c < C; ++c) {
                mean_[c] = running_mean_.v[c];
                invstd_[c] = T(1) / std::sqrt(running_var_.v[c] + eps_);
            }
        }
        xhat_ = Tensor<T>(x.dims);
        Tensor<T> y(x.dims);
        for (int in = 0; in < N; ++in)
            for (int c = 0; c < C; ++c) {
                const std::size_t base = (static_cast<std::size_t>(in) * C + c) * hw;
                const T mu = mean_[c], is = invstd_[c];
                const T gm = gamma_.value.v[c], bt = beta_.value.v[c];
                for (std::size_t i = 0; i < hw; ++i) {
                    T xh = (x.v[base + i] - mu) * is;
                    xhat_.v[base + i] = xh;
                    y.v[base + i] = gm * xh + bt;
                }
            }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        const int N = gy.n(), C = channels_;
        const std::size_t hw = static_cast<std::size_t>(gy.h()) * gy.w();
        const std::size_t m = static_cast<std::size_t>(N) * hw;
        Tensor<T> gx(gy.dims);
        std::vector<T> sum_gy(C, T(0)), sum_gy_xhat(C, T(0));
        for (int in = 0; in < N; ++in)
            for (int c = 0; c < C; ++c) {
                const std::size_t base = (static_cast<std::size_t>(in) * C + c) * hw;
                T a = 0, b = 0;
                for (std::size_t i = 0; i < hw; ++i) {
                    a += gy.v[base + i];
                    b += gy.v[base + i] * xhat_.v[base + i];
                }
                sum_gy[c] += a;
                sum_gy_xhat[c] += b;
            }
        for (int c = 0; c < C; ++c) {
            beta_.grad.v[c] += sum_gy[c];
            gamma_.grad.v[c] += sum_gy_xhat[c];
        }
        for (int in = 0; in < N; ++in)
            for (int c = 0; c < C; ++c) {
                const std::size_t base = (static_cast<std::size_t>(in) * C + c) * hw;
                const T gis = gamma_.value.v[c] * invstd_[c];
                if (mode_ == Mode::infer) {
                    // running stats are constants: pure affine map
                    for (std::size_t i = 0; i < hw; ++i) gx.v[base + i] = gy.v[base + i] * gis;
                } else {
                    const T inv_m = T(1) / static_cast<T>(m);
                    for (std::size_t i = 0; i < hw; ++i)
                        gx.v[base + i] =
                            gis * (gy.v[base + i] - inv_m * sum_gy[c] -
                                   xhat_.v[base + i] * inv_m * sum_gy_xhat[c]);
                }
            }
        return gx;
    }

    void collect_params(std::vector<Parameter<T>*>& out) override {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }

    void collect_state(std::vector<std::pair<std::string, Tensor<T>*>>& out) override {
        Layer<T>::collect_state(out);
        out.emplace_back(this->name() + ".running_mean", &running_mean_);
        out.emplace_back(this->name() + ".running_var", &running_var_);
    }

    Tensor<T>& running_mean() { return running_mean_; }
    Tensor<T>& running_var() { return running_var_; }

private:
    int channels_;
    T momentum_, eps_;
    Parameter<T> gamma_, beta_;
    Tensor<T> running_mean_, running_var_;
    Mode mode_ = Mode::train;
    std::vector<T> mean_, invstd_;
    Tensor<T> xhat_;
};

// ---------------------------------------------------------------------------
// Activations.

enum class ActKind { relu, relu6, sigmoid, softmax };

template <typename T>
class Activation : public Layer<T> {
public:
    Activation(std::string name, ActKind kind) : Layer<T>(std::move(name)), kind_(kind) {}

    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        switch (kind_) {
            case ActKind::relu:
            case ActKind::relu6: {
                x_ = x;
                Tensor<T> y = x;
                const T hi = kind_ == ActKind::relu6 ? T(6) : std::numeric_limits<T>::max();
                for (T& e : y.v) e = std::min(hi, std::max(T(0), e));
                return y;
            }
            case ActKind::sigmoid: {
                y_ = x;
                for (T& e : y_.v) e = T(1) / (T(1) + std::exp(-e));
                return y_;
            }
            case ActKind::softmax: {
                if (x.rank() != 2) throw ShapeError("softmax expects an N x classes tensor");
                y_ = x;
                const int N = x.dims[0], M = x.dims[1];
                for (int in = 0; in < N; ++in) {
                    T* row = &y_.v[static_cast<std::size_t>(in) * M];
                    T mx = row[0];
                    for (int j = 1; j < M; ++j) mx = std::max(mx, row[j]);
                    T sum = 0;
                    for (int j = 0; j < M; ++j) {
                        row[j] = std::exp(row[j] - mx);
                        sum += row[j];
                    }
                    for (int j = 0; j < M; ++j) row[j] /= sum;
                }
                return y_;
            }
        }
        throw ConfigError("unknown activation");
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        switch (kind_) {
            case ActKind::relu:
            case ActKind::relu6: {
                Tensor<T> gx = gy;
                const T hi = kind_ == ActKind::relu6 ? T(6) : std::numeric_limits<T>::max();
                const bool guided = detail::guided_relu_backward;
                for (std::size_t i = 0; i < gx.size(); ++i) {
                    bool open = x_.v[i] > T(0) && x_.v[i] < hi;
                    if (guided) open = open && gy.v[i] > T(0);
                    if (!open) gx.v[i] = T(0);
                }
                return gx;
            }
            case ActKind::sigmoid: {
                Tensor<T> gx = gy;
                for (std::size_t i = 0; i < gx.size(); ++i)
                    gx.v[i] *= y_.v[i] * (T(1) - y_.v[i]);
                return gx;
            }
            case ActKind::softmax: {
                const int N = y_.dims[0], M = y_.dims[1];
                Tensor<T> gx(y_.dims);
                for (int in = 0; in < N; ++in) {
                    const T* y = &y_.v[static_cast<std::size_t>(in) * M];
                    const T* g = &gy.v[static_cast<std::size_t>(in) * M];
                    T dot = 0;
                    for (int j = 0; j < M; ++j) dot += g[j] * y[j];
                    T* out = &gx.v[static_cast<std::size_t>(in) * M];
                    for (int j = 0; j < M; ++j) out[j] = y[j] * (g[j] - dot);
                }
                return gx;
            }
        }
        throw ConfigError("unknown activation");
    }

private:
    ActKind kind_;
    Tensor<T> x_; // relu/relu6 cache
    Tensor<T> y_; // sigmoid/softmax cache
};

// ---------------------------------------------------------------------------
// Pooling descriptors for attention and the loss path, as forward/backward
// function pairs on explicit caches.

enum class PoolKind { global_avg, global_max, channel_mean_map, channel_max_map };

template <typename T>
struct PoolCache {
    ReduceResult<T> r;
    std::vector<int> in_dims;
    AxisSet axes;
    ReduceKind kind;
};

template <typename T>
Tensor<T> pool_forward(PoolKind kind, const Tensor<T>& x, PoolCache<T>& cache) {
    if (x.rank() != 4) throw ShapeError("pooling expects N x C x H x W");
    switch (kind) {
        case PoolKind::global_avg:
            cache.axes = AxisSet{2, 3};
            cache.kind = ReduceKind::mean;
            break;
        case PoolKind::global_max:
            cache.axes = AxisSet{2, 3};
            cache.kind = ReduceKind::max;
            break;
        case PoolKind::channel_mean_map:
            cache.axes = AxisSet{1};
            cache.kind = ReduceKind::mean;
            break;
        case PoolKind::channel_max_map:
            cache.axes = AxisSet{1};
            cache.kind = ReduceKind::max;
            break;
    }
    cache.in_dims = x.dims;
    cache.r = reduce(cache.kind, x, cache.axes, true);
    return cache.r.value;
}

template <typename T>
Tensor<T> pool_backward(const PoolCache<T>& cache, const Tensor<T>& gy) {
    Tensor<T> x_shape(cache.in_dims);
    return reduce_backward(cache.kind, cache.r, x_shape, cache.axes, gy);
}

// ---------------------------------------------------------------------------
// Dense, dropout, flatten.

template <typename T>
class Dense : public Layer<T> {
public:
    Dense(std::string name, int in_features, int out_features, Rng& rng)
        : Layer<T>(std::move(name)), d_(in_features), m_(out_features) {
        Tensor<T> w({d_, m_});
        const double std = std::sqrt(2.0 / d_);
        for (T& x : w.v) x = static_cast<T>(rng.normal() * std);
        weight_ = Parameter<T>(this->name() + ".weight", std::move(w));
        bias_ = Parameter<T>(this->name() + ".bias", Tensor<T>({m_}));
    }

    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        if (x.rank() != 2 || x.dims[1] != d_)
            throw ShapeError(this->name() + ": expected N x " + std::to_string(d_) + ", got " +
                             dims_str(x.dims));
        x_ = x;
        const int N = x.dims[0];
        Tensor<T> y({N, m_});
        gemm(false, false, N, m_, d_, T(1), x.v.data(), d_, weight_.value.v.data(), m_, T(0),
             y.v.data(), m_);
        for (int in = 0; in < N; ++in)
            for (int j = 0; j < m_; ++j) y.v[static_cast<std::size_t>(in) * m_ + j] +=
                bias_.value.v[j];
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        const int N = x_.dims[0];
        gemm(true, false, d_, m_, N, T(1), x_.v.data(), d_, gy.v.data(), m_, T(1),
             weight_.grad.v.data(), m_);
        for (int in = 0; in < N; ++in)
            for (int j = 0; j < m_; ++j)
                bias_.grad.v[j] += gy.v[static_cast<std::size_t>(in) * m_ + j];
        Tensor<T> gx({N, d_});
        gemm(false, true, N, d_, m_, T(1), gy.v.data(), m_, weight_.value.v.data(), m_, T(0),
             gx.v.data(), d_);
        return gx;
    }

    void collect_params(std::vector<Parameter<T>*>& out) override {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

    Parameter<T>& weight() { return weight_; }
    Parameter<T>& bias() { return bias_; }
    int in_features() const { return d_; }
    int out_features() const { return m_; }

private:
    int d_, m_;
    Parameter<T> weight_, bias_;
    Tensor<T> x_;
};

/// Inverted dropout: train mode zeroes with probability `rate` and scales
/// survivors by 1/(1-rate); infer mode is the identity.
template <typename T>
class Dropout : public Layer<T> {
public:
    Dropout(std::string name, double rate, Rng* rng)
        : Layer<T>(std::move(name)), rate_(rate), rng_(rng) {
        if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0,1)");
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        if (mode == Mode::infer || rate_ == 0.0) {
            mask_.clear();
            return x;
        }
        const T scale = static_cast<T>(1.0 / (1.0 - rate_));
        mask_.resize(x.size());
        Tensor<T> y = x;
        for (std::size_t i = 0; i < x.size(); ++i) {
            mask_[i] = rng_->uniform() >= rate_ ? 1 : 0;
            y.v[i] = mask_[i] ? x.v[i] * scale : T(0);
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        if (mask_.empty()) return gy;
        const T scale = static_cast<T>(1.0 / (1.0 - rate_));
        Tensor<T> gx = gy;
        for (std::size_t i = 0; i < gx.size(); ++i) gx.v[i] = mask_[i] ? gy.v[i] * scale : T(0);
        return gx;
    }

private:
    double rate_;
    Rng* rng_;
    std::vector<std::uint8_t> mask_;
};

template <typename T>
class Flatten : public Layer<T> {
public:
    explicit Flatten(std::string name) : Layer<T>(std::move(name)) {}

    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        in_dims_ = x.dims;
        return x.reshaped({x.n(), static_cast<int>(x.size()) / x.n()});
    }

    Tensor<T> backward(const Tensor<T>& gy) override { return gy.reshaped(in_dims_); }

private:
    std::vector<int> in_dims_;
};

} // namespace pinsite

#endif
