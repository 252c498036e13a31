#ifndef PINSITE_LOSS_HPP
#define PINSITE_LOSS_HPP

#include <cmath>
#include <vector>

#include "pinsite/model.hpp"
#include "pinsite/tensor.hpp"

namespace pinsite {

struct FocalLossConfig {
    double alpha = 0.15; // weight on the y_t (Group B) term
    double gamma = 2.0;

    void validate() const {
        if (alpha <= 0 || alpha >= 1) throw ConfigError("focal alpha must be in (0,1)");
        if (gamma < 0) throw ConfigError("focal gamma must be >= 0");
    }
};

template <typename T>
struct LossResult {
    double value = 0;
    Tensor<T> grad; // w.r.t. the N x 2 softmax rows, mean-reduced
};

namespace detail {
inline constexpr double kProbClamp = 1e-12;
}

/// FL = -[ alpha (1-y_p)^g y_t log y_p + (1-alpha) y_p^g (1-y_t) log(1-y_p) ],
/// with y_p the Group-B probability and y_t = 1 for Group B. Mean over batch.
template <typename T>
LossResult<T> focal_loss(const Tensor<T>& probs, const std::vector<PinLabel>& truth,
                         const FocalLossConfig& cfg) {
    cfg.validate();
    if (probs.rank() != 2 || probs.dims[1] != 2)
        throw ShapeError("focal_loss expects N x 2 probabilities");
    const int N = probs.dims[0];
    if (static_cast<int>(truth.size()) != N)
        throw ShapeError("focal_loss label count mismatch");
    LossResult<T> res;
    res.grad = Tensor<T>(probs.dims);
    const double a = cfg.alpha, g = cfg.gamma;
    double total = 0;
    for (int i = 0; i < N; ++i) {
        const double p = static_cast<double>(probs.v[static_cast<std::size_t>(i) * 2 + 1]);
        const double pc = std::max(detail::kProbClamp, std::min(1.0 - detail::kProbClamp, p));
        double loss, dldp;
        if (truth[i] == PinLabel::group_b) {
            const double q = 1.0 - p; // (1-y_p)^gamma uses the raw probability
            const double qg = std::pow(q, g);
            loss = -a * qg * std::log(pc);
            const double dqg = g > 0 ? -g * std::pow(q, g - 1.0) : 0.0;
            dldp = -a * (dqg * std::log(pc) + qg / pc);
        } else {
            const double pg = std::pow(p, g);
            loss = -(1.0 - a) * pg * std::log(1.0 - pc);
            const double dpg = g > 0 ? g * std::pow(p, g - 1.0) : 0.0;
            dldp = -(1.0 - a) * (dpg * std::log(1.0 - pc) - pg / (1.0 - pc));
        }
        total += loss;
        res.grad.v[static_cast<std::size_t>(i) * 2 + 1] = static_cast<T>(dldp / N);
    }
    res.value = total / N;
    return res;
}

/// Standard two-class cross entropy on the Group-B probability, same clamp.
template <typename T>
LossResult<T> cross_entropy(const Tensor<T>& probs, const std::vector<PinLabel>& truth) {
    if (probs.rank() != 2 || probs.dims[1] != 2)
        throw ShapeError("cross_entropy expects N x 2 probabilities");
    const int N = probs.dims[0];
    if (static_cast<int>(truth.size()) != N)
        throw ShapeError("cross_entropy label count mismatch");
    LossResult<T> res;
    res.grad = Tensor<T>(probs.dims);
    double total = 0;
    for (int i = 0; i < N; ++i) {
        const double p = static_cast<double>(probs.v[static_cast<std::size_t>(i) * 2 + 1]);
        const double pc = std::max(detail::kProbClamp, std::min(1.0 - detail::kProbClamp, p));
        if (truth[i] == PinLabel::group_b) {
            total += -std::log(pc);
            res.grad.v[static_cast<std::size_t>(i) * 2 + 1] = static_cast<T>(-1.0 / pc / N);
        } else {
            total += -std::log(1.0 - pc);
            res.grad.v[static_cast<std::size_t>(i) * 2 + 1] =
                static_cast<T>(1.0 / (1.0 - pc) / N);
        }
    }
    res.value = total / N;
    return res;
}

} // namespace pinsite

#endif
