#ifndef PINSITE_METRICS_HPP
#define PINSITE_METRICS_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

#include "pinsite/model.hpp"

namespace pinsite {

/// Positive class is Group A (inflammation/infection detection).
struct ConfusionMatrix {
    std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    std::int64_t total() const { return tp + tn + fp + fn; }
};

inline ConfusionMatrix confusion(const std::vector<Prediction>& preds,
                                 const std::vector<PinLabel>& truth) {
    if (preds.size() != truth.size()) throw DataError("confusion: length mismatch");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool pred_a = preds[i].label == PinLabel::group_a;
        const bool true_a = truth[i] == PinLabel::group_a;
        if (pred_a && true_a) ++cm.tp;
        else if (!pred_a && !true_a) ++cm.tn;
        else if (pred_a && !true_a) ++cm.fp;
        else ++cm.fn;
    }
    return cm;
}

struct Metrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    bool degenerate = false; // a zero denominator was hit
};

inline Metrics metrics(const ConfusionMatrix& cm) {
    Metrics m;
    if (cm.tp + cm.fp > 0) m.precision = static_cast<double>(cm.tp) / (cm.tp + cm.fp);
    else m.degenerate = true;
    if (cm.tp + cm.fn > 0) m.recall = static_cast<double>(cm.tp) / (cm.tp + cm.fn);
    else m.degenerate = true;
    if (m.precision + m.recall > 0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else m.degenerate = true;
    return m;
}

inline double f1_score(double precision, double recall) {
    if (precision + recall <= 0) return 0;
    return 2.0 * precision * recall / (precision + recall);
}

struct RocPoint {
    double fpr, tpr, threshold;
};

struct RocResult {
    double auc = 0;
    std::vector<RocPoint> points;
};

/// ROC by threshold sweep over the distinct Group-A scores, AUC by
/// trapezoidal integration. Equals the pairwise rank statistic with ties
/// counted one half.
inline RocResult roc_auc(const std::vector<double>& scores, const std::vector<PinLabel>& truth) {
    if (scores.size() != truth.size()) throw DataError("roc_auc: length mismatch");
    std::int64_t pos = 0, neg = 0;
    for (PinLabel l : truth) (l == PinLabel::group_a ? pos : neg)++;
    if (pos == 0 || neg == 0)
        throw DomainError("roc_auc needs at least one positive and one negative sample");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult res;
    res.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::int64_t tp = 0, fp = 0;
    double auc = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        std::int64_t dtp = 0, dfp = 0;
        while (i < order.size() && scores[order[i]] == s) {
            (truth[order[i]] == PinLabel::group_a ? dtp : dfp)++;
            ++i;
        }
        // trapezoid over the tied block handles ties as half-wins
        const double tpr0 = static_cast<double>(tp) / pos;
        const double fpr0 = static_cast<double>(fp) / neg;
        tp += dtp;
        fp += dfp;
        const double tpr1 = static_cast<double>(tp) / pos;
        const double fpr1 = static_cast<double>(fp) / neg;
        auc += (fpr1 - fpr0) * (tpr0 + tpr1) / 2.0;
        res.points.push_back({fpr1, tpr1, s});
    }
    res.auc = auc;
    return res;
}

} // namespace pinsite

#endif
