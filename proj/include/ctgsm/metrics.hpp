#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctgsm/matrix.hpp"

namespace ctgsm {

// C x C counts, entry (i, j) = true class i predicted as class j
struct ConfusionMatrix {
    std::vector<std::vector<std::size_t>> counts;
    std::vector<std::string> class_names;

    std::size_t n_classes() const { return counts.size(); }
    std::size_t total() const;
};

ConfusionMatrix confusion(const std::vector<std::size_t>& y_true,
                          const std::vector<std::size_t>& y_pred, std::size_t n_classes,
                          const std::vector<std::string>& class_names = {});

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;   // one-vs-rest (TP+TN)/total
    // set when a zero denominator forced the 0 convention
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    double accuracy = 0.0;          // overall, trace/total
    double macro_precision = 0.0;   // unweighted class means
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double micro_precision = 0.0;   // pooled one-vs-rest counts
    double micro_recall = 0.0;
    double micro_f1 = 0.0;
};

// PR = TP/(TP+FP), R = TP/(TP+FN), F1 = 2TP/(2TP+FP+FN) per class under
// one-vs-rest; zero denominators yield 0 with the corresponding flag set so
// macro averages stay total.
MetricsReport per_class_metrics(const ConfusionMatrix& cm);

struct RocCurve {
    std::vector<double> fpr;
    std::vector<double> tpr;
    std::vector<double> thresholds;  // +inf sentinel for the (0,0) point
    double auc = 0.0;
};

// Threshold sweep over distinct scores (descending, ties grouped), AUC by the
// trapezoid rule. Requires at least one positive and one negative label.
RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// one-vs-rest curves from a probability matrix (rows x classes)
std::vector<RocCurve> roc_per_class(const Matrix& probabilities,
                                    const std::vector<std::size_t>& y_true);

}  // namespace ctgsm
