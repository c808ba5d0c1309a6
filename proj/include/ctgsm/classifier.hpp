#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctgsm/nn.hpp"
#include "ctgsm/tabular.hpp"

namespace ctgsm {

enum class ClassifierLoss { Focal, CrossEntropy };
enum class ClassifierMode { Binary, Multiclass };

struct ClassifierConfig {
    std::vector<std::size_t> hidden = {128, 64};
    double dropout_p = 0.4;
    std::size_t epochs = 30;
    std::size_t batch_size = 512;
    AdamConfig adam;  // lr 1e-3, beta1 0.9, beta2 0.999
    ClassifierLoss loss = ClassifierLoss::Focal;
    FocalLossConfig focal;
    ClassifierMode mode = ClassifierMode::Multiclass;
    std::uint64_t seed = 0;
};

struct TrainingHistory {
    std::vector<double> loss;      // per-epoch mean batch loss
    std::vector<double> accuracy;  // per-epoch mean batch accuracy
};

struct Classifier {
    Mlp net;
    ClassifierMode mode = ClassifierMode::Multiclass;
    std::vector<std::string> class_names;  // output-unit names
    TrainingHistory history;
};

// class 0 stays 0, everything else becomes 1
std::vector<std::size_t> binary_relabel(const std::vector<std::size_t>& labels);

// Feed-forward softmax classifier: relu hidden layers with inverted dropout,
// Adam, focal or cross-entropy loss, epoch-level shuffling seeded
// independently of weight init.
Classifier fit_classifier(const Dataset& train, const ClassifierConfig& cfg);

Matrix predict_proba(const Classifier& model, const Matrix& features);
// row argmax, ties to the lower class ID
std::vector<std::size_t> predict(const Classifier& model, const Matrix& features);

nlohmann::json classifier_to_json(const Classifier& model);
Classifier classifier_from_json(const nlohmann::json& j);

}  // namespace ctgsm
