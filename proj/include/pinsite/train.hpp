#ifndef PINSITE_TRAIN_HPP
#define PINSITE_TRAIN_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pinsite/data.hpp"
#include "pinsite/loss.hpp"
#include "pinsite/metrics.hpp"
#include "pinsite/model.hpp"

namespace pinsite {

enum class LossKind { focal, ce };
enum class BlockMode { errc, inverted_residual_only };

struct TrainConfig {
    int batch_size = 16;
    int max_epochs = 300;
    int patience = 70;      // epochs without val-loss improvement before halting
    double min_delta = 1e-4;
    double lr0 = 0.001;
    double decay_period = 30; // epochs per decay_rate factor
    double decay_rate = 0.95;
    double beta1 = 0.92;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    LossKind loss = LossKind::focal;
    BlockMode block_mode = BlockMode::errc;
    FocalLossConfig focal{};
    std::uint64_t seed = 42;

    void validate() const {
        if (batch_size < 1 || max_epochs < 1) throw ConfigError("batch/epoch counts must be positive");
        if (patience >= max_epochs) throw ConfigError("patience must be < max_epochs");
        if (lr0 <= 0 || decay_period <= 0 || decay_rate <= 0)
            throw ConfigError("learning-rate parameters must be positive");
        if (beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1 || adam_eps <= 0)
            throw ConfigError("adam parameters out of range");
        if (min_delta < 0) throw ConfigError("min_delta must be >= 0");
    }
};

/// Continuous (non-staircase) exponential decay.
inline double lr_at(int epoch, const TrainConfig& cfg) {
    if (epoch < 0) throw DomainError("epoch must be >= 0");
    return cfg.lr0 * std::pow(cfg.decay_rate, static_cast<double>(epoch) / cfg.decay_period);
}

/// Bias-corrected Adam update over the whole parameter table; zeroes grads.
/// `t` is the 1-based global step counter.
template <typename T>
void adam_step(std::vector<Parameter<T>*>& params, double lr, const TrainConfig& cfg,
               std::int64_t t) {
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (auto* p : params) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double g = static_cast<double>(p->grad.v[i]);
            if (!std::isfinite(g))
                throw NumericError("non-finite gradient in parameter " + p->name);
            const double m = cfg.beta1 * static_cast<double>(p->adam_m.v[i]) +
                             (1.0 - cfg.beta1) * g;
            const double v = cfg.beta2 * static_cast<double>(p->adam_v.v[i]) +
                             (1.0 - cfg.beta2) * g * g;
            p->adam_m.v[i] = static_cast<T>(m);
            p->adam_v.v[i] = static_cast<T>(v);
            p->value.v[i] -= static_cast<T>(lr * (m / bc1) /
                                            (std::sqrt(v / bc2) + cfg.adam_eps));
        }
        p->zero_grad();
    }
}

struct EpochRow {
    int epoch = 0;
    double lr = 0;
    double train_loss = 0;
    double val_loss = 0;
    Metrics val_metrics{};
    double val_auc = 0;
};

enum class StopReason { early_stop, max_epochs, requested };

struct TrainReport {
    std::vector<EpochRow> rows;
    int best_epoch = -1;
    StopReason stop_reason = StopReason::max_epochs;
};

inline const char* stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::early_stop: return "early_stop";
        case StopReason::max_epochs: return "max_epochs";
        case StopReason::requested: return "requested";
    }
    return "";
}

inline void write_report_csv(const TrainReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "epoch,lr,train_loss,val_loss,precision,recall,f1,auc\n";
    out << std::setprecision(10);
    for (const auto& r : rep.rows)
        out << r.epoch << "," << r.lr << "," << r.train_loss << "," << r.val_loss << ","
            << r.val_metrics.precision << "," << r.val_metrics.recall << "," << r.val_metrics.f1
            << "," << r.val_auc << "\n";
}

/// Early-stopping bookkeeping. Patience counts epochs since the last
/// improvement beyond min_delta; best_epoch tracks the true val-loss minimum
/// regardless of min_delta.
struct EarlyStopper {
    int patience = 0;
    double min_delta = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int last_improve_epoch = 0;

    /// Returns true when this epoch set a new best loss (caller snapshots).
    bool update(int epoch, double val_loss) {
        const bool first = best_epoch < 0;
        if (first || val_loss < best_loss - min_delta) last_improve_epoch = epoch;
        if (first || val_loss < best_loss) {
            best_loss = val_loss;
            best_epoch = epoch;
            return true;
        }
        return false;
    }

    bool should_stop(int epoch) const { return epoch - last_improve_epoch > patience; }
};

namespace detail {

template <typename T>
LossResult<T> compute_loss(const Tensor<T>& probs, const std::vector<PinLabel>& truth,
                           const TrainConfig& cfg) {
    return cfg.loss == LossKind::focal ? focal_loss(probs, truth, cfg.focal)
                                       : cross_entropy(probs, truth);
}

template <typename T>
std::map<std::string, std::vector<T>> snapshot_state(PinSiteNet<T>& net) {
    std::vector<std::pair<std::string, Tensor<T>*>> state;
    net.collect_state(state);
    std::map<std::string, std::vector<T>> snap;
    for (auto& [name, tensor] : state) snap[name] = tensor->v;
    return snap;
}

template <typename T>
void restore_state(PinSiteNet<T>& net, const std::map<std::string, std::vector<T>>& snap) {
    std::vector<std::pair<std::string, Tensor<T>*>> state;
    net.collect_state(state);
    for (auto& [name, tensor] : state) tensor->v = snap.at(name);
}

} // namespace detail

/// Evaluate loss, confusion metrics and AUC over a labeled set (infer mode).
template <typename T>
EpochRow evaluate(PinSiteNet<T>& net, const std::vector<LabeledImage>& items,
                  const TrainConfig& cfg, double threshold = 0.5) {
    net.set_mode(Mode::infer);
    const int input = net.config().input_size;
    EpochRow row;
    std::vector<Prediction> preds;
    std::vector<PinLabel> truth;
    std::vector<double> scores_a;
    double loss_sum = 0;
    for (std::size_t start = 0; start < items.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t end = std::min(items.size(), start + cfg.batch_size);
        std::vector<const Image*> imgs;
        std::vector<PinLabel> labels;
        for (std::size_t i = start; i < end; ++i) {
            imgs.push_back(&items[i].image);
            labels.push_back(items[i].label);
        }
        Tensor<T> batch = make_batch<T>(imgs, input);
        Tensor<T> probs = net.forward(batch);
        loss_sum += detail::compute_loss(probs, labels, cfg).value * static_cast<double>(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            Prediction p;
            p.p_group_a = static_cast<double>(probs.v[i * 2]);
            p.p_group_b = static_cast<double>(probs.v[i * 2 + 1]);
            p.threshold = threshold;
            p.label = p.p_group_b >= threshold ? PinLabel::group_b : PinLabel::group_a;
            preds.push_back(p);
            truth.push_back(labels[i]);
            scores_a.push_back(p.p_group_a);
        }
    }
    row.val_loss = loss_sum / static_cast<double>(items.size());
    row.val_metrics = metrics(confusion(preds, truth));
    try {
        row.val_auc = roc_auc(scores_a, truth).auc;
    } catch (const DomainError&) {
        row.val_auc = 0; // single-class evaluation set
    }
    return row;
}

/// One training run: seeded shuffles, batches of cfg.batch_size (partial
/// final batch trained on), Adam with per-epoch decayed LR, early stopping on
/// val loss. The net is left holding the best epoch's state. `on_epoch`, when
/// set, may return true to request a stop after the current epoch.
template <typename T>
TrainReport train_loop(PinSiteNet<T>& net, const DatasetSplit& split, const TrainConfig& cfg,
                       const std::function<bool(const EpochRow&)>& on_epoch = {}) {
    cfg.validate();
    if (split.train.empty() || split.val.empty())
        throw DataError("train and val splits must be non-empty");
    const int input = net.config().input_size;
    net.reseed_dropout(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<Parameter<T>*> params;
    net.collect_params(params);

    TrainReport rep;
    EarlyStopper stopper{cfg.patience, cfg.min_delta};
    std::map<std::string, std::vector<T>> best_state;
    std::int64_t step = 0;
    Rng shuffle_root(cfg.seed);

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = lr_at(epoch, cfg);
        net.set_mode(Mode::train);
        std::vector<std::size_t> order(split.train.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng = shuffle_root.fork(static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[rng.uniform_int(i + 1)]);

        double loss_sum = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<const Image*> imgs;
            std::vector<PinLabel> labels;
            for (std::size_t i = start; i < end; ++i) {
                imgs.push_back(&split.train[order[i]].image);
                labels.push_back(split.train[order[i]].label);
            }
            Tensor<T> batch = make_batch<T>(imgs, input);
            Tensor<T> probs = net.forward(batch);
            LossResult<T> loss = detail::compute_loss(probs, labels, cfg);
            if (!std::isfinite(loss.value))
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(start / cfg.batch_size));
            loss_sum += loss.value * static_cast<double>(labels.size());
            net.backward(loss.grad);
            adam_step(params, lr, cfg, ++step);
        }

        EpochRow row = evaluate(net, split.val, cfg);
        row.epoch = epoch;
        row.lr = lr;
        row.train_loss = loss_sum / static_cast<double>(split.train.size());
        rep.rows.push_back(row);

        if (stopper.update(epoch, row.val_loss)) {
            rep.best_epoch = epoch;
            best_state = detail::snapshot_state(net);
        }

        if (on_epoch && on_epoch(row)) {
            rep.stop_reason = StopReason::requested;
            break;
        }
        if (stopper.should_stop(epoch)) {
            rep.stop_reason = StopReason::early_stop;
            break;
        }
    }
    if (!best_state.empty()) detail::restore_state(net, best_state);
    net.set_mode(Mode::infer);
    return rep;
}

} // namespace pinsite

#endif
