#ifndef PINSITE_TESTS_HELPERS_HPP
#define PINSITE_TESTS_HELPERS_HPP

#include <functional>
#include <vector>

#include "pinsite/nn.hpp"
#include "pinsite/rng.hpp"
#include "pinsite/tensor.hpp"

namespace testutil {

using pinsite::Rng;
using pinsite::Tensor;

inline Tensor<double> random_tensor(std::vector<int> dims, Rng& rng, double scale = 1.0) {
    Tensor<double> t(std::move(dims));
    for (double& v : t.v) v = rng.uniform(-scale, scale);
    return t;
}

/// Scalar head for gradient checks: f(y) = sum(r .* y) with a fixed random
/// projection so every output element contributes.
struct Projection {
    std::vector<double> r;

    explicit Projection(std::size_t n, Rng& rng) {
        r.resize(n);
        for (double& v : r) v = rng.uniform(-1.0, 1.0);
    }

    double value(const Tensor<double>& y) const {
        double s = 0;
        for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y.v[i];
        return s;
    }

    Tensor<double> grad(const std::vector<int>& dims) const {
        Tensor<double> g(dims);
        for (std::size_t i = 0; i < g.size(); ++i) g.v[i] = r[i];
        return g;
    }
};

/// Check the input gradient of a layer against finite differences.
/// BN layers mutate running stats on every forward; the probe re-runs forward
/// each time, which is fine since train-mode outputs depend only on the batch.
inline double layer_input_grad_err(pinsite::Layer<double>& layer, const Tensor<double>& x,
                                   pinsite::Mode mode, Rng& rng, double h = 1e-5) {
    Tensor<double> y0 = layer.forward(x, mode);
    Projection proj(y0.size(), rng);
    Tensor<double> analytic = layer.backward(proj.grad(y0.dims));
    auto f = [&](const Tensor<double>& probe) {
        return proj.value(layer.forward(probe, mode));
    };
    Tensor<double> numeric = pinsite::finite_difference_gradient(f, x, h);
    layer.forward(x, mode); // restore caches
    return pinsite::max_rel_err(analytic, numeric);
}

/// Check every parameter gradient of a layer against finite differences.
inline double layer_param_grad_err(pinsite::Layer<double>& layer, const Tensor<double>& x,
                                   pinsite::Mode mode, Rng& rng, double h = 1e-5) {
    std::vector<pinsite::Parameter<double>*> params;
    layer.collect_params(params);
    for (auto* p : params) p->zero_grad();
    Tensor<double> y0 = layer.forward(x, mode);
    Projection proj(y0.size(), rng);
    layer.backward(proj.grad(y0.dims));
    double worst = 0;
    for (auto* p : params) {
        auto f = [&](const Tensor<double>& w) {
            Tensor<double> saved = p->value;
            p->value = w;
            double v = proj.value(layer.forward(x, mode));
            p->value = saved;
            return v;
        };
        Tensor<double> numeric = pinsite::finite_difference_gradient(f, p->value, h);
        worst = std::max(worst, pinsite::max_rel_err(p->grad, numeric));
        p->zero_grad();
    }
    layer.forward(x, mode);
    return worst;
}

} // namespace testutil

#endif
