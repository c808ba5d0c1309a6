// ctgsm: CTGAN + SMOTEENN + DNN intrusion-detection pipeline CLI.
//
// Stage subcommands share artifacts through the output directory using the
// snapshot names the full `run` emits (train_scaled, augmented, resampled,
// classifier.json, ...), so any stage can be rerun in isolation.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctgsm/benchmark.hpp"
#include "ctgsm/classifier.hpp"
#include "ctgsm/ctgan.hpp"
#include "ctgsm/errors.hpp"
#include "ctgsm/pipeline.hpp"
#include "ctgsm/projection.hpp"
#include "ctgsm/rng.hpp"

namespace fs = std::filesystem;
using namespace ctgsm;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool has_seed = false;
    bool skip_ctgan = false;
    bool skip_smoteenn = false;
    std::string loss;
    std::string mode;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
    auto* opt = cmd->add_option("--config", flags.config_path, "pipeline config JSON");
    if (config_required) opt->required();
    cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", flags.seed, "master seed (overrides config)")
        ->each([&](const std::string&) { flags.has_seed = true; });
    cmd->add_flag("--skip-ctgan", flags.skip_ctgan, "disable the CTGAN stage");
    cmd->add_flag("--skip-smoteenn", flags.skip_smoteenn, "disable the resampling stage");
    cmd->add_option("--loss", flags.loss, "classifier loss: focal|ce")
        ->check(CLI::IsMember({"focal", "ce"}));
    cmd->add_option("--mode", flags.mode, "classifier mode: binary|multiclass")
        ->check(CLI::IsMember({"binary", "multiclass"}));
}

PipelineConfig resolve_config(const CommonFlags& flags) {
    PipelineConfig cfg =
        flags.config_path.empty() ? PipelineConfig{} : load_config(flags.config_path);
    if (!flags.out_dir.empty()) cfg.output_dir = flags.out_dir;
    if (flags.has_seed) cfg.seed = flags.seed;
    if (flags.skip_ctgan) cfg.ctgan.enabled = false;
    if (flags.skip_smoteenn) cfg.resample.enabled = false;
    if (flags.loss == "focal") cfg.classifier.loss = ClassifierLoss::Focal;
    if (flags.loss == "ce") cfg.classifier.loss = ClassifierLoss::CrossEntropy;
    if (flags.mode == "binary") cfg.classifier.mode = ClassifierMode::Binary;
    if (flags.mode == "multiclass") cfg.classifier.mode = ClassifierMode::Multiclass;
    return cfg;
}

Dataset ingest_from_config(const PipelineConfig& cfg, std::size_t* raw_rows = nullptr) {
    if (cfg.benchmark) {
        Dataset data = make_benchmark(*cfg.benchmark,
                                      Rng::derive(cfg.seed, seed_stream::kBenchmark));
        if (raw_rows) *raw_rows = data.size();
        return data;
    }
    if (cfg.input.paths.empty()) throw ConfigError("no input configured");
    const RawTable raw = load_csv(cfg.input.paths);
    if (raw_rows) *raw_rows = raw.rows.size();
    return clean(raw, cfg.input.label_column);
}

void print_class_counts(const Dataset& data) {
    const auto counts = data.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        std::printf("  %-28s %10zu\n", data.class_names[c].c_str(), counts[c]);
    }
}

// first existing snapshot among the processed-training candidates
std::string training_snapshot(const std::string& dir) {
    for (const char* base : {"resampled", "augmented", "train_scaled"}) {
        if (fs::exists(dir + "/" + std::string(base) + ".csv")) {
            return dir + "/" + base;
        }
    }
    throw DataError("no training snapshot found under " + dir +
                    " (run preprocess/augment/resample first)");
}

int cmd_ingest(const CommonFlags& flags) {
    const PipelineConfig cfg = resolve_config(flags);
    std::size_t raw_rows = 0;
    const Dataset data = ingest_from_config(cfg, &raw_rows);
    fs::create_directories(cfg.output_dir);
    save_dataset(data, cfg.output_dir + "/cleaned");
    std::printf("ingested %zu raw rows, %zu after cleaning, %zu features, %zu classes\n",
                raw_rows, data.size(), data.n_features(), data.n_classes());
    print_class_counts(data);
    return 0;
}

int cmd_preprocess(const CommonFlags& flags) {
    const PipelineConfig cfg = resolve_config(flags);
    const Dataset data = ingest_from_config(cfg);
    auto [train_raw, test_raw] = stratified_split(
        data, cfg.train_fraction, Rng::derive(cfg.seed, seed_stream::kSplit));
    const MinMaxScaler scaler = fit_scaler(train_raw);
    fs::create_directories(cfg.output_dir);
    save_dataset(apply_scaler(scaler, train_raw), cfg.output_dir + "/train_scaled", scaler);
    save_dataset(apply_scaler(scaler, test_raw), cfg.output_dir + "/test_scaled", scaler);
    std::printf("split %zu rows into train=%zu test=%zu (fraction %.2f)\n", data.size(),
                train_raw.size(), test_raw.size(), cfg.train_fraction);
    return 0;
}

int cmd_augment(const CommonFlags& flags) {
    const PipelineConfig cfg = resolve_config(flags);
    auto [train, scaler] = load_dataset(cfg.output_dir + "/train_scaled");
    const auto rare_ids = [&] {
        std::vector<std::size_t> ids;
        for (const auto& name : cfg.rare_classes) {
            const auto it = std::find(train.class_names.begin(), train.class_names.end(), name);
            if (it == train.class_names.end()) {
                throw ConfigError("rare class '" + name + "' not in training snapshot");
            }
            ids.push_back(static_cast<std::size_t>(it - train.class_names.begin()));
        }
        std::sort(ids.begin(), ids.end());
        return ids;
    }();
    auto [augmented, model] = augment_with_ctgan(train, rare_ids, cfg.ctgan, cfg.seed);
    save_dataset(augmented, cfg.output_dir + "/augmented", scaler);
    std::ofstream out(cfg.output_dir + "/ctgan.json");
    out << ctgan_to_json(model).dump() << '\n';
    std::printf("augmented %zu -> %zu rows (%zu per rare class)\n", train.size(),
                augmented.size(), cfg.ctgan.samples_per_rare_class);
    return 0;
}

int cmd_resample(const CommonFlags& flags) {
    const PipelineConfig cfg = resolve_config(flags);
    std::string base = cfg.output_dir + "/augmented";
    if (!fs::exists(base + ".csv")) base = cfg.output_dir + "/train_scaled";
    auto [train, scaler] = load_dataset(base);
    std::vector<std::size_t> rare_ids;
    for (const auto& name : cfg.rare_classes) {
        const auto it = std::find(train.class_names.begin(), train.class_names.end(), name);
        if (it != train.class_names.end()) {
            rare_ids.push_back(static_cast<std::size_t>(it - train.class_names.begin()));
        }
    }
    const Dataset resampled = resample_dataset(train, rare_ids, cfg.resample, cfg.seed);
    save_dataset(resampled, cfg.output_dir + "/resampled", scaler);
    std::printf("resampled %zu -> %zu rows\n", train.size(), resampled.size());
    print_class_counts(resampled);
    return 0;
}

int cmd_train(const CommonFlags& flags) {
    const PipelineConfig cfg = resolve_config(flags);
    auto [train, scaler] = load_dataset(training_snapshot(cfg.output_dir));
    (void)scaler;
    ClassifierConfig ccfg = cfg.classifier;
    ccfg.seed = Rng::derive(cfg.seed, seed_stream::kClassifier);
    const Classifier model = fit_classifier(train, ccfg);
    std::ofstream out(cfg.output_dir + "/classifier.json");
    out << classifier_to_json(model).dump() << '\n';
    std::ofstream curves(cfg.output_dir + "/curves.csv");
    curves << "epoch,loss,accuracy\n";
    for (std::size_t e = 0; e < model.history.loss.size(); ++e) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", e + 1, model.history.loss[e],
                      model.history.accuracy[e]);
        curves << buf;
    }
    std::printf("trained on %zu rows; final epoch loss %.6f accuracy %.4f\n", train.size(),
                model.history.loss.back(), model.history.accuracy.back());
    return 0;
}

int cmd_evaluate(const CommonFlags& flags) {
    const PipelineConfig cfg = resolve_config(flags);
    std::ifstream in(cfg.output_dir + "/classifier.json");
    if (!in) throw DataError("no classifier.json under " + cfg.output_dir);
    const Classifier model = classifier_from_json(nlohmann::json::parse(in));
    auto [test, scaler] = load_dataset(cfg.output_dir + "/test_scaled");
    (void)scaler;
    const Evaluation eval = evaluate_classifier(model, test);
    write_evaluation(eval, cfg.output_dir);
    std::printf("accuracy %.4f macro-F1 %.4f (%zu test rows)\n", eval.metrics.accuracy,
                eval.metrics.macro_f1, test.size());
    for (std::size_t c = 0; c < eval.class_names.size(); ++c) {
        const auto& m = eval.metrics.per_class[c];
        std::printf("  %-28s P=%.4f R=%.4f F1=%.4f\n", eval.class_names[c].c_str(),
                    m.precision, m.recall, m.f1);
    }
    return 0;
}

int cmd_run(const CommonFlags& flags) {
    const PipelineConfig cfg = resolve_config(flags);
    const RunResult result = run_pipeline(cfg);
    std::printf("pipeline complete: accuracy %.4f macro-F1 %.4f\n", result.metrics.accuracy,
                result.metrics.macro_f1);
    for (std::size_t c = 0; c < result.evaluation.class_names.size(); ++c) {
        const auto& m = result.metrics.per_class[c];
        std::printf("  %-28s P=%.4f R=%.4f F1=%.4f\n",
                    result.evaluation.class_names[c].c_str(), m.precision, m.recall, m.f1);
    }
    std::printf("report bundle written to %s\n", cfg.output_dir.c_str());
    return 0;
}

int cmd_benchmark(const CommonFlags& flags) {
    const PipelineConfig cfg = resolve_config(flags);
    const BenchmarkSpec spec = cfg.benchmark ? *cfg.benchmark : default_benchmark_spec();
    const Dataset data =
        make_benchmark(spec, Rng::derive(cfg.seed, seed_stream::kBenchmark));
    fs::create_directories(cfg.output_dir);
    save_dataset(data, cfg.output_dir + "/benchmark");
    std::printf("benchmark dataset: %zu rows, %zu features\n", data.size(), data.n_features());
    print_class_counts(data);
    return 0;
}

int cmd_project(const CommonFlags& flags, const std::string& before, const std::string& after) {
    const PipelineConfig cfg = resolve_config(flags);
    fs::create_directories(cfg.output_dir);
    const Dataset before_ds = load_dataset(before).first;
    const Dataset after_ds = load_dataset(after).first;
    const PcaModel model =
        emit_projection(before_ds, after_ds, cfg.output_dir + "/projection_before.csv",
                        cfg.output_dir + "/projection_after.csv");
    std::printf("projected %zu + %zu rows; explained variance %.3f + %.3f\n",
                before_ds.size(), after_ds.size(), model.explained_ratio[0],
                model.explained_ratio[1]);
    return 0;
}

int cmd_compare(const CommonFlags& flags) {
    const PipelineConfig cfg = resolve_config(flags);
    const auto results = run_comparison(cfg);
    std::printf("%-16s %9s %9s %9s %9s %11s\n", "model", "macro-P", "macro-R", "macro-F1",
                "accuracy", "rare-recall");
    for (const auto& r : results) {
        std::printf("%-16s %9.4f %9.4f %9.4f %9.4f %11.4f\n", r.name.c_str(),
                    r.metrics.macro_precision, r.metrics.macro_recall, r.metrics.macro_f1,
                    r.metrics.accuracy, r.rare_recall_mean);
    }
    std::printf("comparison.csv written to %s\n", cfg.output_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional tabular GAN + SMOTEENN + DNN pipeline for rare-attack detection"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string project_before, project_after;

    auto* ingest = app.add_subcommand("ingest", "load and clean CSV input");
    add_common(ingest, flags, true);
    auto* preprocess = app.add_subcommand("preprocess", "ingest, split 70/30 and scale");
    add_common(preprocess, flags, true);
    auto* augment = app.add_subcommand("augment", "CTGAN synthesis for the rare classes");
    add_common(augment, flags, true);
    auto* resample = app.add_subcommand("resample", "SMOTEENN resampling");
    add_common(resample, flags, true);
    auto* train = app.add_subcommand("train", "train the classifier");
    add_common(train, flags, true);
    auto* evaluate = app.add_subcommand("evaluate", "evaluate on the held-out test snapshot");
    add_common(evaluate, flags, true);
    auto* run = app.add_subcommand("run", "full pipeline end to end");
    add_common(run, flags, true);
    auto* benchmark = app.add_subcommand("benchmark", "emit the synthetic benchmark dataset");
    add_common(benchmark, flags, false);
    auto* project = app.add_subcommand("project", "PCA plot data for two dataset snapshots");
    add_common(project, flags, false);
    project->add_option("--before", project_before, "snapshot base path (before)")->required();
    project->add_option("--after", project_after, "snapshot base path (after)")->required();
    auto* compare = app.add_subcommand("compare",
                                       "run proposed / CE-ablation / DNN / DNN+SMOTE variants");
    add_common(compare, flags, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(flags);
        if (preprocess->parsed()) return cmd_preprocess(flags);
        if (augment->parsed()) return cmd_augment(flags);
        if (resample->parsed()) return cmd_resample(flags);
        if (train->parsed()) return cmd_train(flags);
        if (evaluate->parsed()) return cmd_evaluate(flags);
        if (run->parsed()) return cmd_run(flags);
        if (benchmark->parsed()) return cmd_benchmark(flags);
        if (project->parsed()) return cmd_project(flags, project_before, project_after);
        if (compare->parsed()) return cmd_compare(flags);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const TrainingError& e) {
        std::fprintf(stderr, "training error: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
