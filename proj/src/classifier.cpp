#include "ctgsm/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "ctgsm/errors.hpp"

namespace ctgsm {

std::vector<std::size_t> binary_relabel(const std::vector<std::size_t>& labels) {
    std::vector<std::size_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] == 0 ? 0 : 1;
    return out;
}

Classifier fit_classifier(const Dataset& train, const ClassifierConfig& cfg) {
    if (train.size() == 0) throw DataError("classifier: empty training set");
    if (cfg.batch_size == 0 || cfg.epochs == 0) {
        throw ConfigError("classifier: epochs and batch size must be positive");
    }

    Classifier model;
    model.mode = cfg.mode;
    std::vector<std::size_t> labels;
    std::size_t n_out;
    if (cfg.mode == ClassifierMode::Binary) {
        labels = binary_relabel(train.labels);
        n_out = 2;
        const std::string benign =
            train.class_names.empty() ? "benign" : train.class_names.front();
        model.class_names = {benign, "attack"};
    } else {
        labels = train.labels;
        n_out = train.n_classes();
        model.class_names = train.class_names;
        const auto counts = train.class_counts();
        for (std::size_t c = 0; c < counts.size(); ++c) {
            if (counts[c] == 0) {
                throw DataError("classifier: class '" + train.class_names[c] +
                                "' has no training rows");
            }
        }
    }

    Rng init_rng(Rng::derive(cfg.seed, 0));
    Rng shuffle_rng(Rng::derive(cfg.seed, 1));
    Rng dropout_rng(Rng::derive(cfg.seed, 2));

    std::vector<LayerSpec> spec;
    for (std::size_t h : cfg.hidden) spec.push_back({h, Activation::Relu, cfg.dropout_p});
    spec.push_back({n_out, Activation::Softmax, 0.0});
    model.net = make_mlp(train.n_features(), spec, init_rng);

    AdamState adam = make_adam_state(model.net, cfg.adam);

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<std::size_t> batch_rows;
    std::vector<std::size_t> batch_targets;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t correct = 0, seen = 0, batches = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch_rows.assign(order.begin() + start, order.begin() + end);
            batch_targets.resize(batch_rows.size());
            for (std::size_t i = 0; i < batch_rows.size(); ++i) {
                batch_targets[i] = labels[batch_rows[i]];
            }
            const Matrix batch = train.features.take_rows(batch_rows);

            auto fwd = forward(model.net, batch, true, &dropout_rng);
            const auto loss = cfg.loss == ClassifierLoss::Focal
                                  ? focal_loss(fwd.output, batch_targets, cfg.focal)
                                  : cross_entropy_loss(fwd.output, batch_targets);
            if (!std::isfinite(loss.loss)) {
                throw TrainingError("classifier: loss diverged at epoch " +
                                    std::to_string(epoch));
            }
            auto back = backward(model.net, fwd.cache, loss.logit_gradient);
            adam_step(model.net, back.grads, adam);

            loss_sum += loss.loss;
            ++batches;
        }

        // loss curve tracks the optimization; accuracy is measured on the
        // training set in inference mode at epoch end
        const Matrix probs = forward(model.net, train.features, false).output;
        for (std::size_t i = 0; i < probs.rows(); ++i) {
            const auto row = probs.row(i);
            const std::size_t pred = static_cast<std::size_t>(
                std::max_element(row.begin(), row.end()) - row.begin());
            correct += pred == labels[i];
        }
        seen = probs.rows();
        model.history.loss.push_back(loss_sum / static_cast<double>(batches));
        model.history.accuracy.push_back(static_cast<double>(correct) /
                                         static_cast<double>(seen));
    }
    return model;
}

Matrix predict_proba(const Classifier& model, const Matrix& features) {
    return forward(model.net, features, false).output;
}

std::vector<std::size_t> predict(const Classifier& model, const Matrix& features) {
    const Matrix probs = predict_proba(model, features);
    std::vector<std::size_t> out(probs.rows());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const auto row = probs.row(i);
        out[i] = static_cast<std::size_t>(
            std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

nlohmann::json classifier_to_json(const Classifier& model) {
    return {{"mode", model.mode == ClassifierMode::Binary ? "binary" : "multiclass"},
            {"class_names", model.class_names},
            {"net", mlp_to_json(model.net)},
            {"history", {{"loss", model.history.loss}, {"accuracy", model.history.accuracy}}}};
}

Classifier classifier_from_json(const nlohmann::json& j) {
    Classifier model;
    model.mode = j.at("mode").get<std::string>() == "binary" ? ClassifierMode::Binary
                                                             : ClassifierMode::Multiclass;
    model.class_names = j.at("class_names").get<std::vector<std::string>>();
    model.net = mlp_from_json(j.at("net"));
    if (j.contains("history")) {
        model.history.loss = j["history"].at("loss").get<std::vector<double>>();
        model.history.accuracy = j["history"].at("accuracy").get<std::vector<double>>();
    }
    return model;
}

}  // namespace ctgsm
