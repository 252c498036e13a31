#ifndef PINSITE_BLOCKS_HPP
#define PINSITE_BLOCKS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pinsite/nn.hpp"

namespace pinsite {

// ---------------------------------------------------------------------------
// Conv-BN-ReLU stem block.

template <typename T>
class ConvBnRelu : public Layer<T> {
public:
    ConvBnRelu(std::string name, int in_ch, int out_ch, int kernel, int stride, Rng& rng)
        : Layer<T>(std::move(name)),
          conv_(this->name() + ".conv",
                Conv2dSpec{in_ch, out_ch, kernel, stride, kernel / 2, 1}, false, rng),
          bn_(this->name() + ".bn", out_ch),
          relu_(this->name() + ".relu", ActKind::relu) {}

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        return relu_.forward(bn_.forward(conv_.forward(x, mode), mode), mode);
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        return conv_.backward(bn_.backward(relu_.backward(gy)));
    }

    void collect_params(std::vector<Parameter<T>*>& out) override {
        conv_.collect_params(out);
        bn_.collect_params(out);
    }

    void collect_state(std::vector<std::pair<std::string, Tensor<T>*>>& out) override {
        conv_.collect_state(out);
        bn_.collect_state(out);
    }

private:
    Conv2d<T> conv_;
    BatchNorm2d<T> bn_;
    Activation<T> relu_;
};

// ---------------------------------------------------------------------------
// ERRC: split the input into four equal channel groups, pass two through
// unchanged, convolve one with 3x3 and one with 5x5, concatenate, then fuse
// with a 1x1 convolution. All convolutions bias-free.

template <typename T>
class ErrcBlock : public Layer<T> {
public:
    ErrcBlock(std::string name, int channels_in, int channels_out, Rng& rng)
        : Layer<T>(std::move(name)), c_in_(channels_in), c_out_(channels_out) {
        if (channels_in % 4 != 0)
            throw ConfigError(this->name() + ": input channels must be divisible by 4");
        const int q = channels_in / 4;
        branch3_ = std::make_unique<Conv2d<T>>(this->name() + ".branch3",
                                               Conv2dSpec{q, q, 3, 1, 1, 1}, false, rng);
        branch5_ = std::make_unique<Conv2d<T>>(this->name() + ".branch5",
                                               Conv2dSpec{q, q, 5, 1, 2, 1}, false, rng);
        pointwise_ = std::make_unique<Conv2d<T>>(
            this->name() + ".pointwise", Conv2dSpec{channels_in, channels_out, 1, 1, 0, 1}, false,
            rng);
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        if (x.c() != c_in_) throw ShapeError(this->name() + ": channel mismatch");
        const int q = c_in_ / 4;
        auto groups = split_channels(x, {q, q, q, q});
        std::vector<Tensor<T>> parts;
        parts.push_back(std::move(groups[0]));
        parts.push_back(std::move(groups[1]));
        parts.push_back(branch3_->forward(groups[2], mode));
        parts.push_back(branch5_->forward(groups[3], mode));
        return pointwise_->forward(concat_channels(parts), mode);
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        const int q = c_in_ / 4;
        Tensor<T> gcat = pointwise_->backward(gy);
        auto g = split_channels(gcat, {q, q, q, q});
        std::vector<Tensor<T>> gx_parts;
        gx_parts.push_back(std::move(g[0]));
        gx_parts.push_back(std::move(g[1]));
        gx_parts.push_back(branch3_->backward(g[2]));
        gx_parts.push_back(branch5_->backward(g[3]));
        return concat_channels(gx_parts);
    }

    void collect_params(std::vector<Parameter<T>*>& out) override {
        branch3_->collect_params(out);
        branch5_->collect_params(out);
        pointwise_->collect_params(out);
    }

    int channels_in() const { return c_in_; }
    int channels_out() const { return c_out_; }

private:
    int c_in_, c_out_;
    std::unique_ptr<Conv2d<T>> branch3_, branch5_, pointwise_;
};

// ---------------------------------------------------------------------------
// CBAM: channel attention (shared MLP over avg- and max-pooled descriptors),
// then spatial attention (7x7 conv over channel mean/max maps).

template <typename T>
class CbamBlock : public Layer<T> {
public:
    CbamBlock(std::string name, int channels, int reduction, Rng& rng)
        : Layer<T>(std::move(name)), c_(channels), r_(reduction) {
        if (reduction <= 0 || channels % reduction != 0)
            throw ConfigError(this->name() + ": channels must be divisible by the reduction");
        const int hidden = channels / reduction;
        auto init = [&rng](Tensor<T>& w, int fan_in) {
            const double std = std::sqrt(2.0 / fan_in);
            for (T& x : w.v) x = static_cast<T>(rng.normal() * std);
        };
        Tensor<T> w1({channels, hidden}), w2({hidden, channels});
        init(w1, channels);
        init(w2, hidden);
        mlp_w1_ = Parameter<T>(this->name() + ".mlp.w1", std::move(w1));
        mlp_b1_ = Parameter<T>(this->name() + ".mlp.b1", Tensor<T>({hidden}));
        mlp_w2_ = Parameter<T>(this->name() + ".mlp.w2", std::move(w2));
        mlp_b2_ = Parameter<T>(this->name() + ".mlp.b2", Tensor<T>({channels}));
        spatial_ = std::make_unique<Conv2d<T>>(this->name() + ".spatial",
                                               Conv2dSpec{2, 1, 7, 1, 3, 1}, false, rng);
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        if (x.c() != c_) throw ShapeError(this->name() + ": channel mismatch");
        x_ = x;
        const int N = x.n();
        Tensor<T> s_avg = pool_forward(PoolKind::global_avg, x, avg_cache_).reshaped({N, c_});
        Tensor<T> s_max = pool_forward(PoolKind::global_max, x, max_cache_).reshaped({N, c_});
        Tensor<T> a1 = mlp_forward(s_avg, mlp_avg_);
        Tensor<T> a2 = mlp_forward(s_max, mlp_max_);
        mc_ = Tensor<T>({N, c_, 1, 1});
        for (std::size_t i = 0; i < mc_.size(); ++i)
            mc_.v[i] = T(1) / (T(1) + std::exp(-(a1.v[i] + a2.v[i])));
        x1_ = ewise(EwiseKind::mul, x, mc_);
        Tensor<T> m_mean = pool_forward(PoolKind::channel_mean_map, x1_, mean_map_cache_);
        Tensor<T> m_max = pool_forward(PoolKind::channel_max_map, x1_, max_map_cache_);
        Tensor<T> z = spatial_->forward(concat_channels<T>({m_mean, m_max}), mode);
        ms_ = z;
        for (T& e : ms_.v) e = T(1) / (T(1) + std::exp(-e));
        // ms broadcasts over the channel axis
        Tensor<T> y(x.dims);
        const std::size_t hw = static_cast<std::size_t>(x.h()) * x.w();
        for (int in = 0; in < N; ++in)
            for (int c = 0; c < c_; ++c) {
                const std::size_t base = (static_cast<std::size_t>(in) * c_ + c) * hw;
                const T* gate = &ms_.v[static_cast<std::size_t>(in) * hw];
                for (std::size_t i = 0; i < hw; ++i) y.v[base + i] = x1_.v[base + i] * gate[i];
            }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        const int N = gy.n();
        const std::size_t hw = static_cast<std::size_t>(gy.h()) * gy.w();
        // y = ms (.) x1
        Tensor<T> dms({N, 1, gy.h(), gy.w()});
        Tensor<T> dx1 = gy;
        for (int in = 0; in < N; ++in) {
            T* dm = &dms.v[static_cast<std::size_t>(in) * hw];
            const T* gate = &ms_.v[static_cast<std::size_t>(in) * hw];
            for (int c = 0; c < c_; ++c) {
                const std::size_t base = (static_cast<std::size_t>(in) * c_ + c) * hw;
                for (std::size_t i = 0; i < hw; ++i) {
                    dm[i] += gy.v[base + i] * x1_.v[base + i];
                    dx1.v[base + i] = gy.v[base + i] * gate[i];
                }
            }
        }
        // through spatial sigmoid + conv
        for (std::size_t i = 0; i < dms.size(); ++i)
            dms.v[i] *= ms_.v[i] * (T(1) - ms_.v[i]);
        Tensor<T> dcat = spatial_->backward(dms);
        auto dmaps = split_channels(dcat, {1, 1});
        Tensor<T> dx1_pool = pool_backward(mean_map_cache_, dmaps[0]);
        Tensor<T> dx1_pool2 = pool_backward(max_map_cache_, dmaps[1]);
        for (std::size_t i = 0; i < dx1.size(); ++i)
            dx1.v[i] += dx1_pool.v[i] + dx1_pool2.v[i];
        // x1 = mc (.) x
        Tensor<T> dx, dmc;
        ewise_mul_backward(dx1, x_, mc_, dx, dmc);
        // through channel sigmoid into both MLP branches
        for (std::size_t i = 0; i < dmc.size(); ++i)
            dmc.v[i] *= mc_.v[i] * (T(1) - mc_.v[i]);
        Tensor<T> da = dmc.reshaped({N, c_});
        Tensor<T> ds_avg = mlp_backward(da, mlp_avg_);
        Tensor<T> ds_max = mlp_backward(da, mlp_max_);
        Tensor<T> dx_avg = pool_backward(avg_cache_, ds_avg.reshaped({N, c_, 1, 1}));
        Tensor<T> dx_max = pool_backward(max_cache_, ds_max.reshaped({N, c_, 1, 1}));
        for (std::size_t i = 0; i < dx.size(); ++i) dx.v[i] += dx_avg.v[i] + dx_max.v[i];
        return dx;
    }

    void collect_params(std::vector<Parameter<T>*>& out) override {
        out.push_back(&mlp_w1_);
        out.push_back(&mlp_b1_);
        out.push_back(&mlp_w2_);
        out.push_back(&mlp_b2_);
        spatial_->collect_params(out);
    }

private:
    struct MlpCache {
        Tensor<T> input;  // (N, C)
        Tensor<T> hidden; // (N, C/r) post-ReLU
    };

    Tensor<T> mlp_forward(const Tensor<T>& s, MlpCache& cache) {
        const int N = s.dims[0], hidden = c_ / r_;
        cache.input = s;
        Tensor<T> h({N, hidden});
        gemm(false, false, N, hidden, c_, T(1), s.v.data(), c_, mlp_w1_.value.v.data(), hidden,
             T(0), h.v.data(), hidden);
        for (int in = 0; in < N; ++in)
            for (int j = 0; j < hidden; ++j) {
                T& e = h.v[static_cast<std::size_t>(in) * hidden + j];
                e = std::max(T(0), e + mlp_b1_.value.v[j]);
            }
        cache.hidden = h;
        Tensor<T> out({N, c_});
        gemm(false, false, N, c_, hidden, T(1), h.v.data(), hidden, mlp_w2_.value.v.data(), c_,
             T(0), out.v.data(), c_);
        for (int in = 0; in < N; ++in)
            for (int j = 0; j < c_; ++j)
                out.v[static_cast<std::size_t>(in) * c_ + j] += mlp_b2_.value.v[j];
        return out;
    }

    Tensor<T> mlp_backward(const Tensor<T>& g, MlpCache& cache) {
        const int N = g.dims[0], hidden = c_ / r_;
        gemm(true, false, hidden, c_, N, T(1), cache.hidden.v.data(), hidden, g.v.data(), c_, T(1),
             mlp_w2_.grad.v.data(), c_);
        for (int in = 0; in < N; ++in)
            for (int j = 0; j < c_; ++j)
                mlp_b2_.grad.v[j] += g.v[static_cast<std::size_t>(in) * c_ + j];
        Tensor<T> dh({N, hidden});
        gemm(false, true, N, hidden, c_, T(1), g.v.data(), c_, mlp_w2_.value.v.data(), c_, T(0),
             dh.v.data(), hidden);
        for (std::size_t i = 0; i < dh.size(); ++i)
            if (cache.hidden.v[i] <= T(0)) dh.v[i] = T(0);
        gemm(true, false, c_, hidden, N, T(1), cache.input.v.data(), c_, dh.v.data(), hidden, T(1),
             mlp_w1_.grad.v.data(), hidden);
        for (int in = 0; in < N; ++in)
            for (int j = 0; j < hidden; ++j)
                mlp_b1_.grad.v[j] += dh.v[static_cast<std::size_t>(in) * hidden + j];
        Tensor<T> ds({N, c_});
        gemm(false, true, N, c_, hidden, T(1), dh.v.data(), hidden, mlp_w1_.value.v.data(), hidden,
             T(0), ds.v.data(), c_);
        return ds;
    }

    int c_, r_;
    Parameter<T> mlp_w1_, mlp_b1_, mlp_w2_, mlp_b2_;
    std::unique_ptr<Conv2d<T>> spatial_;

    Tensor<T> x_, x1_, mc_, ms_;
    PoolCache<T> avg_cache_, max_cache_, mean_map_cache_, max_map_cache_;
    MlpCache mlp_avg_, mlp_max_;
};

// ---------------------------------------------------------------------------
// MobileNetV2-style inverted residual with expansion factor 3: 1x1 expand +
// BN + ReLU6, 3x3 depthwise (stride s) + BN + ReLU6, 1x1 project + BN. The
// skip applies iff stride == 1 and the channel count is unchanged.

template <typename T>
class InvertedResidualBlock : public Layer<T> {
public:
    static constexpr int kExpansion = 3;

    InvertedResidualBlock(std::string name, int channels_in, int channels_out, int stride,
                          Rng& rng)
        : Layer<T>(std::move(name)),
          skip_(stride == 1 && channels_in == channels_out) {
        if (stride != 1 && stride != 2)
            throw ConfigError(this->name() + ": stride must be 1 or 2");
        const int mid = kExpansion * channels_in;
        expand_ = std::make_unique<Conv2d<T>>(this->name() + ".expand",
                                              Conv2dSpec{channels_in, mid, 1, 1, 0, 1}, false,
                                              rng);
        bn1_ = std::make_unique<BatchNorm2d<T>>(this->name() + ".bn1", mid);
        relu1_ = std::make_unique<Activation<T>>(this->name() + ".relu1", ActKind::relu6);
        depthwise_ = std::make_unique<Conv2d<T>>(this->name() + ".depthwise",
                                                 Conv2dSpec{mid, mid, 3, stride, 1, mid}, false,
                                                 rng);
        bn2_ = std::make_unique<BatchNorm2d<T>>(this->name() + ".bn2", mid);
        relu2_ = std::make_unique<Activation<T>>(this->name() + ".relu2", ActKind::relu6);
        project_ = std::make_unique<Conv2d<T>>(this->name() + ".project",
                                               Conv2dSpec{mid, channels_out, 1, 1, 0, 1}, false,
                                               rng);
        bn3_ = std::make_unique<BatchNorm2d<T>>(this->name() + ".bn3", channels_out);
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        Tensor<T> h = relu1_->forward(bn1_->forward(expand_->forward(x, mode), mode), mode);
        h = relu2_->forward(bn2_->forward(depthwise_->forward(h, mode), mode), mode);
        h = bn3_->forward(project_->forward(h, mode), mode);
        if (skip_)
            for (std::size_t i = 0; i < h.size(); ++i) h.v[i] += x.v[i];
        return h;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        Tensor<T> g = expand_->backward(
            bn1_->backward(relu1_->backward(depthwise_->backward(
                bn2_->backward(relu2_->backward(project_->backward(bn3_->backward(gy))))))));
        if (skip_)
            for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += gy.v[i];
        return g;
    }

    void collect_params(std::vector<Parameter<T>*>& out) override {
        expand_->collect_params(out);
        bn1_->collect_params(out);
        depthwise_->collect_params(out);
        bn2_->collect_params(out);
        project_->collect_params(out);
        bn3_->collect_params(out);
    }

    void collect_state(std::vector<std::pair<std::string, Tensor<T>*>>& out) override {
        expand_->collect_state(out);
        bn1_->collect_state(out);
        depthwise_->collect_state(out);
        bn2_->collect_state(out);
        project_->collect_state(out);
        bn3_->collect_state(out);
    }

private:
    bool skip_;
    std::unique_ptr<Conv2d<T>> expand_, depthwise_, project_;
    std::unique_ptr<BatchNorm2d<T>> bn1_, bn2_, bn3_;
    std::unique_ptr<Activation<T>> relu1_, relu2_;
};

// ---------------------------------------------------------------------------
// Symbolic parameter-count formulas, evaluated verbatim, and the actual count
// of learnable scalars in an assembled layer. The two deliberately coexist:
// the inverted-residual formula's depthwise term undercounts the real
// expand-then-depthwise structure, and both views are reported.

enum class ParamFormula { conv, inverted_residual, errc };

inline std::int64_t param_formula(ParamFormula kind, int k, int a, int c_in, int c_out) {
    if (k <= 0 || a <= 0 || c_in <= 0 || c_out <= 0)
        throw DomainError("param formula arguments must be positive");
    const std::int64_t K = k, A = a, CI = c_in, CO = c_out;
    switch (kind) {
        case ParamFormula::conv:
            return K * K * CI * CO;
        case ParamFormula::inverted_residual:
            return A * CI * CI + A * CI * CO + K * K * CI;
        case ParamFormula::errc:
            if (c_in % 4 != 0 || c_out % 4 != 0)
                throw DomainError("errc formula requires channels divisible by 4");
            return (3 * 3 + 5 * 5) * (CI / 4) * (CO / 4) + CI * CO;
    }
    throw DomainError("unknown param formula");
}

struct ParamCount {
    std::vector<std::pair<std::string, std::int64_t>> per_name;
    std::int64_t total = 0;
};

template <typename T>
ParamCount count_actual_params(Layer<T>& layer) {
    std::vector<Parameter<T>*> ps;
    layer.collect_params(ps);
    ParamCount pc;
    for (auto* p : ps) {
        pc.per_name.emplace_back(p->name, static_cast<std::int64_t>(p->value.size()));
        pc.total += static_cast<std::int64_t>(p->value.size());
    }
    return pc;
}

} // namespace pinsite

#endif
