#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctgsm/benchmark.hpp"
#include "ctgsm/classifier.hpp"
#include "ctgsm/ctgan.hpp"
#include "ctgsm/metrics.hpp"
#include "ctgsm/resampling.hpp"
#include "ctgsm/tabular.hpp"

namespace ctgsm {

struct InputConfig {
    std::vector<std::string> paths;
    std::string label_column = "Label";
};

enum class CtganFitScope { TrainingSet, RareOnly };

struct CtganStageConfig {
    bool enabled = true;
    CtganConfig ctgan;
    std::size_t gmm_components = 10;
    std::size_t samples_per_rare_class = 1000;
    // fit on the whole training partition (default) or on rare-class rows only
    CtganFitScope fit_scope = CtganFitScope::TrainingSet;
};

enum class ResampleMethod { SmoteEnn, SmoteOnly };
enum class ResampleTarget { AllMinority, RareOnly };

struct ResampleStageConfig {
    bool enabled = true;
    ResampleMethod method = ResampleMethod::SmoteEnn;
    ResampleTarget target = ResampleTarget::AllMinority;
    std::size_t smote_k = 5;
    std::size_t enn_k = 3;
    std::optional<std::size_t> n_per_sample;  // unset -> balance to the majority count
};

struct PipelineConfig {
    InputConfig input;
    std::optional<BenchmarkSpec> benchmark;  // in-memory alternative to input paths
    std::vector<std::string> rare_classes;
    double train_fraction = 0.7;
    std::size_t folds = 5;  // 0 disables cross-validation
    CtganStageConfig ctgan;
    ResampleStageConfig resample;
    ClassifierConfig classifier;
    std::uint64_t seed = 42;
    std::string output_dir = "out";
};

PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::string& path);

// Fixed seed streams per stage, mixed with the master seed, so toggling one
// stage never shifts another stage's randomness.
namespace seed_stream {
inline constexpr std::uint64_t kBenchmark = 0;
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kCodec = 2;
inline constexpr std::uint64_t kCtgan = 3;
inline constexpr std::uint64_t kGenerate = 4;
inline constexpr std::uint64_t kSmote = 5;
inline constexpr std::uint64_t kClassifier = 6;
inline constexpr std::uint64_t kCrossValidation = 7;
}  // namespace seed_stream

// --- stage functions ---------------------------------------------------------

// Fit CTGAN on the (scaled) training partition per fit scope, synthesize the
// configured number of rows for each rare class, clamp them to the scaled
// [0,1] domain and append them to the training set.
std::pair<Dataset, Ctgan> augment_with_ctgan(const Dataset& scaled_train,
                                             const std::vector<std::size_t>& rare_ids,
                                             const CtganStageConfig& cfg,
                                             std::uint64_t master_seed);

Dataset resample_dataset(const Dataset& train, const std::vector<std::size_t>& rare_ids,
                         const ResampleStageConfig& cfg, std::uint64_t master_seed);

struct Evaluation {
    ConfusionMatrix confusion;
    MetricsReport metrics;
    std::vector<RocCurve> roc;       // aligned with class names
    std::vector<bool> roc_valid;     // false when a class lacks pos or neg rows
    std::vector<std::string> class_names;
};

Evaluation evaluate_classifier(const Classifier& model, const Dataset& test);
void write_evaluation(const Evaluation& eval, const std::string& out_dir);

// --- orchestration ------------------------------------------------------------

struct RunResult {
    nlohmann::json manifest;
    MetricsReport metrics;  // held-out test metrics
    Evaluation evaluation;
    std::vector<std::size_t> rare_class_ids;
};

// The four sequential steps end to end: preprocess, CTGAN augmentation,
// SMOTEENN, classifier training (with optional leakage-free CV), evaluation
// on the untouched test partition. Writes the full report bundle; on stage
// failure the manifest records the stages completed so far, then rethrows.
RunResult run_pipeline(const PipelineConfig& cfg);

struct CvResult {
    std::vector<MetricsReport> folds;
    double mean_accuracy = 0.0, std_accuracy = 0.0;
    double mean_macro_f1 = 0.0, std_macro_f1 = 0.0;
};

// k independent fits; augmentation and resampling are refit inside each
// fold's training portion only, so fold-validation rows never leak.
CvResult cross_validate(const Dataset& scaled_train, const PipelineConfig& cfg);

// comparison runs: proposed, cross-entropy ablation, plain DNN, DNN+SMOTE
struct VariantResult {
    std::string name;
    MetricsReport metrics;
    double rare_recall_mean = 0.0;
};

std::vector<VariantResult> run_comparison(const PipelineConfig& base);

// --- small utilities ------------------------------------------------------------

std::string sanitize_filename(const std::string& name);
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t h = 14695981039346656037ULL);
std::string file_digest_hex(const std::string& path);
std::uint64_t row_digest(std::span<const double> features, std::size_t label);

}  // namespace ctgsm
