#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ctgsm/classifier.hpp"
#include "ctgsm/errors.hpp"

using namespace ctgsm;

namespace {

// linearly separable blobs, one per class
Dataset blob_data(const std::vector<std::size_t>& counts, double spread, Rng& rng) {
    Dataset data;
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    data.features = Matrix(total, 2);
    std::size_t row = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        data.class_names.push_back("c" + std::to_string(c));
        const double angle = 6.2831853 * static_cast<double>(c) /
                             static_cast<double>(counts.size());
        for (std::size_t i = 0; i < counts[c]; ++i, ++row) {
            data.features(row, 0) = 3.0 * std::cos(angle) + spread * rng.normal();
            data.features(row, 1) = 3.0 * std::sin(angle) + spread * rng.normal();
            data.labels.push_back(c);
        }
    }
    data.schema = {{"f0", ColumnKind::Continuous},
                   {"f1", ColumnKind::Continuous},
                   {"Label", ColumnKind::Label}};
    return data;
}

ClassifierConfig toy_config() {
    ClassifierConfig cfg;
    cfg.hidden = {32, 16};
    cfg.dropout_p = 0.1;  // p=0.4 is sized for the wide production net
    cfg.batch_size = 32;
    cfg.epochs = 30;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("separable toy data converges within 30 epochs") {
    Rng rng(1);
    const Dataset data = blob_data({200, 200}, 0.4, rng);
    const Classifier model = fit_classifier(data, toy_config());
    CHECK(model.history.accuracy.back() >= 0.99);
    CHECK(model.history.loss.size() == 30);
    CHECK(model.history.accuracy.size() == 30);

    // window-3 smoothed loss is non-increasing, up to minibatch noise at the
    // convergence floor
    const auto& loss = model.history.loss;
    auto window = [&](std::size_t i) { return (loss[i] + loss[i + 1] + loss[i + 2]) / 3.0; };
    for (std::size_t i = 0; i + 3 < loss.size() - 2; ++i) {
        CHECK(window(i + 3) <= window(i) + 2e-3);
    }
}

TEST_CASE("fixed seed reproduces the trained parameters exactly") {
    Rng rng(2);
    const Dataset data = blob_data({120, 80}, 0.5, rng);
    const Classifier a = fit_classifier(data, toy_config());
    const Classifier b = fit_classifier(data, toy_config());
    for (std::size_t l = 0; l < a.net.layers.size(); ++l) {
        CHECK(a.net.layers[l].weights == b.net.layers[l].weights);
        CHECK(a.net.layers[l].bias == b.net.layers[l].bias);
    }
    CHECK(a.history.loss == b.history.loss);
}

TEST_CASE("output width follows the class count") {
    Rng rng(3);
    const Dataset six = blob_data({40, 40, 40, 40, 40, 40}, 0.3, rng);
    ClassifierConfig cfg = toy_config();
    cfg.epochs = 2;
    const Classifier model = fit_classifier(six, cfg);
    CHECK(model.net.output_dim() == 6);
    CHECK(predict_proba(model, six.features).cols() == 6);

    // binary mode always uses a 2-unit softmax head
    cfg.mode = ClassifierMode::Binary;
    const Classifier binary = fit_classifier(six, cfg);
    CHECK(binary.net.output_dim() == 2);
    CHECK(binary.class_names.size() == 2);
}

TEST_CASE("binary relabel maps 0 to 0 and everything else to 1") {
    const std::vector<std::size_t> labels = {0, 3, 1, 0, 5, 2};
    CHECK(binary_relabel(labels) == std::vector<std::size_t>{0, 1, 1, 0, 1, 1});
}

TEST_CASE("prediction probabilities are normalized and ties go low") {
    Rng rng(4);
    const Dataset data = blob_data({60, 60, 60}, 0.4, rng);
    ClassifierConfig cfg = toy_config();
    cfg.epochs = 5;
    const Classifier model = fit_classifier(data, cfg);
    const Matrix probs = predict_proba(model, data.features);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < probs.cols(); ++j) sum += probs(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }

    // all-zero network emits uniform rows; argmax tie resolves to class 0
    Classifier flat = model;
    for (auto& layer : flat.net.layers) {
        for (double& v : layer.weights.values()) v = 0.0;
        for (double& v : layer.bias) v = 0.0;
    }
    const auto preds = predict(flat, data.features);
    for (std::size_t p : preds) CHECK(p == 0);
}

TEST_CASE("prediction is a pure per-row function") {
    Rng rng(5);
    const Dataset data = blob_data({50, 50}, 0.5, rng);
    ClassifierConfig cfg = toy_config();
    cfg.epochs = 5;
    const Classifier model = fit_classifier(data, cfg);

    Matrix doubled(6, 2);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            doubled(i, j) = data.features(i, j);
            doubled(i + 3, j) = data.features(i, j);
        }
    }
    const auto preds = predict(model, doubled);
    for (std::size_t i = 0; i < 3; ++i) CHECK(preds[i] == preds[i + 3]);
}

TEST_CASE("multiclass training requires every class to appear") {
    Rng rng(6);
    Dataset data = blob_data({40, 40}, 0.4, rng);
    data.class_names.push_back("ghost");  // declared but has no rows
    CHECK_THROWS_AS(fit_classifier(data, toy_config()), DataError);
}

TEST_CASE("classifier snapshot round trips") {
    Rng rng(7);
    const Dataset data = blob_data({50, 30}, 0.5, rng);
    ClassifierConfig cfg = toy_config();
    cfg.epochs = 3;
    const Classifier model = fit_classifier(data, cfg);
    const Classifier loaded = classifier_from_json(classifier_to_json(model));
    CHECK(loaded.mode == model.mode);
    CHECK(loaded.class_names == model.class_names);
    CHECK(loaded.history.loss == model.history.loss);
    const auto a = predict(model, data.features);
    const auto b = predict(loaded, data.features);
    CHECK(a == b);
}
