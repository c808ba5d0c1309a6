#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ctgsm/errors.hpp"
#include "ctgsm/metrics.hpp"
#include "ctgsm/rng.hpp"

using namespace ctgsm;

namespace {

// pairwise-comparison AUC: P(score+ > score-) + 0.5 P(tie)
double mann_whitney_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 0) continue;
        ++n_pos;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] != 0) continue;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    for (int l : labels) n_neg += l == 0;
    return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

TEST_CASE("confusion counts exactly") {
    const auto cm = confusion({0, 1, 1}, {0, 1, 0}, 2);
    CHECK(cm.counts[0][0] == 1);
    CHECK(cm.counts[0][1] == 0);
    CHECK(cm.counts[1][0] == 1);
    CHECK(cm.counts[1][1] == 1);
    CHECK(cm.total() == 3);

    const auto perfect = confusion({0, 1, 2, 2}, {0, 1, 2, 2}, 3);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            if (i != j) CHECK(perfect.counts[i][j] == 0);
        }
    }

    CHECK_THROWS_AS(confusion({0, 1}, {0}, 2), DataError);
    CHECK_THROWS_AS(confusion({0, 5}, {0, 0}, 2), DataError);
}

TEST_CASE("confusion matches a brute-force tally on random instances") {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 100 + rng.uniform_index(10000);
        const std::size_t c = 2 + rng.uniform_index(6);
        std::vector<std::size_t> y_true(n), y_pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            y_true[i] = rng.uniform_index(c);
            y_pred[i] = rng.uniform_index(c);
        }
        const auto cm = confusion(y_true, y_pred, c);
        std::vector<std::vector<std::size_t>> tally(c, std::vector<std::size_t>(c, 0));
        for (std::size_t i = 0; i < n; ++i) ++tally[y_true[i]][y_pred[i]];
        CHECK(cm.counts == tally);
    }
}

TEST_CASE("per-class metrics follow the one-vs-rest formulas") {
    // TP=99, TN=99, FP=1, FN=1 for class 1
    ConfusionMatrix cm;
    cm.class_names = {"neg", "pos"};
    cm.counts = {{99, 1}, {1, 99}};
    const auto report = per_class_metrics(cm);
    CHECK(report.per_class[1].precision == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(report.per_class[1].recall == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(report.per_class[1].accuracy == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(report.accuracy == doctest::Approx(0.99).epsilon(1e-12));
}

TEST_CASE("per-class recall reproduces the rare-class detection rates") {
    // 14 of 16 one class, 20 of 24 the other, against a large background
    ConfusionMatrix cm;
    cm.class_names = {"Benign", "SQL Injection", "Brute Force-XSS"};
    cm.counts = {{5000, 3, 4}, {2, 14, 0}, {4, 0, 20}};
    const auto report = per_class_metrics(cm);
    CHECK(report.per_class[1].recall == doctest::Approx(14.0 / 16.0).epsilon(1e-12));
    CHECK(report.per_class[2].recall == doctest::Approx(20.0 / 24.0).epsilon(1e-12));
}

TEST_CASE("zero-denominator classes contribute zero with a flag") {
    ConfusionMatrix cm;
    cm.class_names = {"a", "b", "ghost"};
    cm.counts = {{10, 0, 0}, {0, 8, 0}, {0, 0, 0}};
    const auto report = per_class_metrics(cm);
    CHECK(report.per_class[2].precision == 0.0);
    CHECK(report.per_class[2].recall == 0.0);
    CHECK(report.per_class[2].precision_undefined);
    CHECK(report.per_class[2].recall_undefined);
    CHECK(report.per_class[2].f1_undefined);
    // macro mean still divides by all three classes
    CHECK(report.macro_recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("metric identities hold on random confusion matrices") {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t c = 2 + rng.uniform_index(5);
        ConfusionMatrix cm;
        cm.counts.assign(c, std::vector<std::size_t>(c, 0));
        for (std::size_t i = 0; i < c; ++i) {
            cm.class_names.push_back("c" + std::to_string(i));
            for (std::size_t j = 0; j < c; ++j) cm.counts[i][j] = rng.uniform_index(200);
        }
        if (cm.total() == 0) continue;
        const auto report = per_class_metrics(cm);

        // micro recall equals overall accuracy
        CHECK(std::abs(report.micro_recall - report.accuracy) <= 1e-12);

        // F1 is the harmonic mean of precision and recall when both nonzero
        for (const auto& m : report.per_class) {
            if (m.precision > 0.0 && m.recall > 0.0) {
                const double harmonic =
                    2.0 * m.precision * m.recall / (m.precision + m.recall);
                CHECK(std::abs(m.f1 - harmonic) <= 1e-12);
            }
        }
    }
}

TEST_CASE("roc handles separation, randomness and ties") {
    // perfectly separated scores
    const RocCurve sep = roc_auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
    CHECK(sep.auc == doctest::Approx(1.0).epsilon(1e-12));

    // label-independent scores hover near 1/2
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 10000;
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rng.uniform();
            labels[i] = rng.uniform() < 0.5 ? 1 : 0;
        }
        CHECK(std::abs(roc_auc(scores, labels).auc - 0.5) < 0.03);
    }

    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), DataError);
}

TEST_CASE("roc AUC equals the Mann-Whitney statistic") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng.uniform_index(60);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            // quantized scores so ties actually occur
            scores[i] = std::floor(rng.uniform() * 8.0) / 8.0;
            labels[i] = rng.uniform() < 0.4 ? 1 : 0;
            (labels[i] ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) continue;
        CHECK(std::abs(roc_auc(scores, labels).auc - mann_whitney_auc(scores, labels)) <= 1e-9);
    }
}

TEST_CASE("roc curve is monotone and transform-invariant") {
    Rng rng(5);
    std::vector<double> scores(400);
    std::vector<int> labels(400);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        labels[i] = rng.uniform() < 0.3 ? 1 : 0;
        scores[i] = rng.normal() + (labels[i] ? 0.8 : 0.0);
    }
    const RocCurve curve = roc_auc(scores, labels);
    CHECK(curve.fpr.front() == 0.0);
    CHECK(curve.tpr.front() == 0.0);
    CHECK(curve.fpr.back() == doctest::Approx(1.0));
    CHECK(curve.tpr.back() == doctest::Approx(1.0));
    for (std::size_t i = 1; i < curve.fpr.size(); ++i) {
        CHECK(curve.fpr[i] >= curve.fpr[i - 1]);
        CHECK(curve.tpr[i] >= curve.tpr[i - 1]);
    }

    // any strictly increasing transform leaves the AUC unchanged
    std::vector<double> transformed(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) transformed[i] = std::exp(scores[i]);
    CHECK(roc_auc(transformed, labels).auc == doctest::Approx(curve.auc).epsilon(1e-12));
}

TEST_CASE("one-vs-rest curves cover every class") {
    Matrix probs(6, 3);
    const std::vector<std::size_t> y = {0, 1, 2, 0, 1, 2};
    Rng rng(6);
    for (std::size_t i = 0; i < 6; ++i) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            probs(i, c) = rng.uniform() + (y[i] == c ? 1.0 : 0.0);
            sum += probs(i, c);
        }
        for (std::size_t c = 0; c < 3; ++c) probs(i, c) /= sum;
    }
    const auto curves = roc_per_class(probs, y);
    CHECK(curves.size() == 3);
    for (const auto& c : curves) CHECK(c.auc >= 0.0);
}
