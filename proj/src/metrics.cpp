#include "ctgsm/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "ctgsm/errors.hpp"

namespace ctgsm {

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (const auto& row : counts) {
        n = std::accumulate(row.begin(), row.end(), n);
    }
    return n;
}

ConfusionMatrix confusion(const std::vector<std::size_t>& y_true,
                          const std::vector<std::size_t>& y_pred, std::size_t n_classes,
                          const std::vector<std::string>& class_names) {
    if (y_true.size() != y_pred.size()) {
        throw DataError("confusion: prediction count does not match label count");
    }
    ConfusionMatrix cm;
    cm.counts.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
    cm.class_names = class_names;
    if (cm.class_names.empty()) {
        for (std::size_t c = 0; c < n_classes; ++c) {
            cm.class_names.push_back("class_" + std::to_string(c));
        }
    }
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] >= n_classes || y_pred[i] >= n_classes) {
            throw DataError("confusion: class ID out of range");
        }
        ++cm.counts[y_true[i]][y_pred[i]];
    }
    return cm;
}

MetricsReport per_class_metrics(const ConfusionMatrix& cm) {
    const std::size_t c = cm.n_classes();
    const double total = static_cast<double>(cm.total());
    if (c == 0 || total == 0.0) throw DataError("metrics: empty confusion matrix");

    MetricsReport report;
    report.per_class.resize(c);

    double trace = 0.0;
    std::size_t micro_tp = 0, micro_fp = 0, micro_fn = 0;
    for (std::size_t k = 0; k < c; ++k) {
        std::size_t tp = cm.counts[k][k];
        std::size_t fp = 0, fn = 0;
        for (std::size_t j = 0; j < c; ++j) {
            if (j == k) continue;
            fp += cm.counts[j][k];
            fn += cm.counts[k][j];
        }
        const std::size_t tn = static_cast<std::size_t>(total) - tp - fp - fn;
        trace += static_cast<double>(tp);
        micro_tp += tp;
        micro_fp += fp;
        micro_fn += fn;

        auto& m = report.per_class[k];
        if (tp + fp > 0) {
            m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        } else {
            m.precision_undefined = true;
        }
        if (tp + fn > 0) {
            m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
        } else {
            m.recall_undefined = true;
        }
        if (2 * tp + fp + fn > 0) {
            m.f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
        } else {
            m.f1_undefined = true;
        }
        m.accuracy = static_cast<double>(tp + tn) / total;

        report.macro_precision += m.precision;
        report.macro_recall += m.recall;
        report.macro_f1 += m.f1;
    }
    report.accuracy = trace / total;
    report.macro_precision /= static_cast<double>(c);
    report.macro_recall /= static_cast<double>(c);
    report.macro_f1 /= static_cast<double>(c);
    report.micro_precision =
        micro_tp + micro_fp > 0
            ? static_cast<double>(micro_tp) / static_cast<double>(micro_tp + micro_fp)
            : 0.0;
    report.micro_recall =
        micro_tp + micro_fn > 0
            ? static_cast<double>(micro_tp) / static_cast<double>(micro_tp + micro_fn)
            : 0.0;
    report.micro_f1 =
        report.micro_precision + report.micro_recall > 0.0
            ? 2.0 * report.micro_precision * report.micro_recall /
                  (report.micro_precision + report.micro_recall)
            : 0.0;
    return report;
}

RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw DataError("roc: score count does not match label count");
    }
    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) (y != 0 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) {
        throw DataError("roc: need at least one positive and one negative label");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    RocCurve curve;
    curve.fpr.push_back(0.0);
    curve.tpr.push_back(0.0);
    curve.thresholds.push_back(std::numeric_limits<double>::infinity());

    double auc = 0.0;
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double threshold = scores[order[i]];
        // consume the whole tie group before emitting a point
        while (i < order.size() && scores[order[i]] == threshold) {
            (labels[order[i]] != 0 ? tp : fp)++;
            ++i;
        }
        const double prev_fpr = curve.fpr.back(), prev_tpr = curve.tpr.back();
        const double cur_fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
        const double cur_tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
        auc += 0.5 * (cur_fpr - prev_fpr) * (cur_tpr + prev_tpr);
        curve.fpr.push_back(cur_fpr);
        curve.tpr.push_back(cur_tpr);
        curve.thresholds.push_back(threshold);
    }
    curve.auc = auc;
    return curve;
}

std::vector<RocCurve> roc_per_class(const Matrix& probabilities,
                                    const std::vector<std::size_t>& y_true) {
    std::vector<RocCurve> curves;
    for (std::size_t c = 0; c < probabilities.cols(); ++c) {
        std::vector<double> scores(probabilities.rows());
        std::vector<int> labels(probabilities.rows());
        for (std::size_t i = 0; i < probabilities.rows(); ++i) {
            scores[i] = probabilities(i, c);
            labels[i] = y_true[i] == c ? 1 : 0;
        }
        curves.push_back(roc_auc(scores, labels));
    }
    return curves;
}

}  // namespace ctgsm
