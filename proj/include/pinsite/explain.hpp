#ifndef PINSITE_EXPLAIN_HPP
#define PINSITE_EXPLAIN_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "pinsite/data.hpp"
#include "pinsite/model.hpp"

namespace pinsite {

/// Normalized spatial attribution map: values in [0,1], max == 1 unless the
/// raw map was identically zero.
struct Heatmap {
    int width = 0, height = 0;
    std::vector<double> values; // row-major
    std::string source_layer;
    int class_index = 0;
    bool all_zero = false;

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

namespace detail {

inline std::vector<double> upsample_bilinear(const std::vector<double>& src, int sw, int sh,
                                             int dw, int dh) {
    std::vector<double> dst(static_cast<std::size_t>(dw) * dh);
    const double fx = static_cast<double>(sw) / dw, fy = static_cast<double>(sh) / dh;
    for (int y = 0; y < dh; ++y) {
        double syf = std::clamp((y + 0.5) * fy - 0.5, 0.0, static_cast<double>(sh - 1));
        const int y0 = static_cast<int>(syf);
        const int y1 = std::min(y0 + 1, sh - 1);
        const double wy = syf - y0;
        for (int x = 0; x < dw; ++x) {
            double sxf = std::clamp((x + 0.5) * fx - 0.5, 0.0, static_cast<double>(sw - 1));
            const int x0 = static_cast<int>(sxf);
            const int x1 = std::min(x0 + 1, sw - 1);
            const double wx = sxf - x0;
            dst[static_cast<std::size_t>(y) * dw + x] =
                (1 - wy) * ((1 - wx) * src[static_cast<std::size_t>(y0) * sw + x0] +
                            wx * src[static_cast<std::size_t>(y0) * sw + x1]) +
                wy * ((1 - wx) * src[static_cast<std::size_t>(y1) * sw + x0] +
                      wx * src[static_cast<std::size_t>(y1) * sw + x1]);
        }
    }
    return dst;
}

template <typename T>
Tensor<T> one_hot_logit_grad(int batch, int classes, int class_index) {
    Tensor<T> g({batch, classes});
    for (int i = 0; i < batch; ++i) g.v[static_cast<std::size_t>(i) * classes + class_index] = T(1);
    return g;
}

} // namespace detail

/// Grad-CAM at a named layer (default: the deepest stage's feature block
/// output). Gradients are taken w.r.t. the pre-softmax score of the class.
template <typename T>
Heatmap grad_cam(PinSiteNet<T>& net, const Tensor<T>& image, int class_index,
                 const std::string& target_layer = "") {
    if (net.mode() != Mode::infer) throw ConfigError("grad_cam requires an infer-mode net");
    const std::string layer = target_layer.empty() ? net.default_cam_layer() : target_layer;
    const int idx = net.layer_index(layer); // throws ConfigError if unknown
    Tensor<T> batch = image.rank() == 3 ? image.reshaped({1, image.dims[0], image.dims[1],
                                                          image.dims[2]})
                                        : image;
    std::vector<Tensor<T>> trace;
    net.forward(batch, &trace);
    std::vector<Tensor<T>> grads;
    net.backward_from_logits(detail::one_hot_logit_grad<T>(batch.n(), 2, class_index), &grads);
    net.zero_grads();

    const Tensor<T>& act = trace[idx];
    const Tensor<T>& dact = grads[idx];
    const int K = act.c(), h = act.h(), w = act.w();
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    std::vector<double> raw(hw, 0.0);
    for (int k = 0; k < K; ++k) {
        const T* a = &act.v[static_cast<std::size_t>(k) * hw];
        const T* g = &dact.v[static_cast<std::size_t>(k) * hw];
        double alpha = 0;
        for (std::size_t i = 0; i < hw; ++i) alpha += static_cast<double>(g[i]);
        alpha /= static_cast<double>(hw);
        for (std::size_t i = 0; i < hw; ++i) raw[i] += alpha * static_cast<double>(a[i]);
    }
    for (double& v : raw) v = std::max(0.0, v);

    Heatmap hm;
    hm.width = batch.w();
    hm.height = batch.h();
    hm.source_layer = layer;
    hm.class_index = class_index;
    hm.values = detail::upsample_bilinear(raw, w, h, hm.width, hm.height);
    const double mx = *std::max_element(hm.values.begin(), hm.values.end());
    const double mn = *std::min_element(hm.values.begin(), hm.values.end());
    if (mx <= 0.0) {
        std::fill(hm.values.begin(), hm.values.end(), 0.0);
        hm.all_zero = true;
    } else if (mx == mn) {
        // constant positive map (e.g. a 1x1 feature extent): everything is hot
        std::fill(hm.values.begin(), hm.values.end(), 1.0);
    } else {
        for (double& v : hm.values) v = (v - mn) / (mx - mn);
    }
    return hm;
}

/// Input gradient with the guided-ReLU rule: rectifier sites pass upstream
/// gradient only where the forward input was active and the gradient positive.
template <typename T>
Tensor<T> guided_backprop(PinSiteNet<T>& net, const Tensor<T>& image, int class_index) {
    if (net.mode() != Mode::infer) throw ConfigError("guided_backprop requires infer mode");
    Tensor<T> batch = image.rank() == 3 ? image.reshaped({1, image.dims[0], image.dims[1],
                                                          image.dims[2]})
                                        : image;
    net.forward(batch);
    GuidedBackpropGuard guard;
    Tensor<T> gx =
        net.backward_from_logits(detail::one_hot_logit_grad<T>(batch.n(), 2, class_index));
    net.zero_grads();
    return gx.reshaped({batch.c(), batch.h(), batch.w()});
}

/// Elementwise product of the upsampled heatmap (broadcast over channels)
/// with the guided-backprop map.
template <typename T>
Tensor<T> guided_grad_cam(PinSiteNet<T>& net, const Tensor<T>& image, int class_index,
                          const std::string& target_layer = "") {
    Heatmap hm = grad_cam(net, image, class_index, target_layer);
    Tensor<T> guided = guided_backprop(net, image, class_index);
    Tensor<T> out = guided;
    const std::size_t hw = static_cast<std::size_t>(hm.width) * hm.height;
    for (int c = 0; c < out.dims[0]; ++c)
        for (std::size_t i = 0; i < hw; ++i)
            out.v[static_cast<std::size_t>(c) * hw + i] *= static_cast<T>(hm.values[i]);
    return out;
}

/// Alpha-blend the heatmap, mapped through a linear blue-to-red colormap,
/// onto the input (resized to the heatmap extent).
inline Image render_overlay(const Image& image, const Heatmap& hm, double alpha = 0.4) {
    if (alpha < 0 || alpha > 1) throw ConfigError("overlay alpha must be in [0,1]");
    Image base = resize_bilinear(image, hm.width, hm.height);
    Image out = base;
    for (int y = 0; y < hm.height; ++y)
        for (int x = 0; x < hm.width; ++x) {
            const double v = hm.at(x, y);
            const double color[3] = {255.0 * v, 0.0, 255.0 * (1.0 - v)};
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(
                    (1.0 - alpha) * base.at(x, y, c) + alpha * color[c]));
        }
    return out;
}

inline void write_heatmap_csv(const Heatmap& hm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (int y = 0; y < hm.height; ++y) {
        for (int x = 0; x < hm.width; ++x) {
            if (x) out << ",";
            out << hm.at(x, y);
        }
        out << "\n";
    }
}

} // namespace pinsite

#endif
