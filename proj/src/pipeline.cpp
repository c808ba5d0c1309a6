#include "ctgsm/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "ctgsm/errors.hpp"
#include "ctgsm/projection.hpp"
#include "ctgsm/rng.hpp"

namespace fs = std::filesystem;

namespace ctgsm {
namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double stage_seconds(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

nlohmann::json class_count_json(const Dataset& data) {
    nlohmann::json arr = nlohmann::json::array();
    const auto counts = data.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        arr.push_back({{"name", data.class_names[c]}, {"count", counts[c]}});
    }
    return arr;
}

std::vector<std::size_t> resolve_rare_ids(const std::vector<std::string>& names,
                                          const std::vector<std::string>& class_names) {
    std::vector<std::size_t> ids;
    for (const auto& name : names) {
        const auto it = std::find(class_names.begin(), class_names.end(), name);
        if (it == class_names.end()) {
            throw ConfigError("rare class '" + name + "' not present in the ingested classes");
        }
        ids.push_back(static_cast<std::size_t>(it - class_names.begin()));
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

MetricsReport evaluate_on(const Classifier& model, const Dataset& data) {
    const auto y_true = model.mode == ClassifierMode::Binary ? binary_relabel(data.labels)
                                                             : data.labels;
    const auto y_pred = predict(model, data.features);
    return per_class_metrics(confusion(y_true, y_pred, model.class_names.size(),
                                       model.class_names));
}

}  // namespace

// --- utilities -----------------------------------------------------------------

std::string sanitize_filename(const std::string& name) {
    std::string out;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            out.push_back('_');
        }
    }
    return out;
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::string file_digest_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::uint64_t h = 14695981039346656037ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

std::uint64_t row_digest(std::span<const double> features, std::size_t label) {
    std::uint64_t h = 14695981039346656037ULL;
    char buf[32];
    for (double v : features) {
        const int len = std::snprintf(buf, sizeof(buf), "%.17g,", v);
        h = fnv1a64(buf, static_cast<std::size_t>(len), h);
    }
    const int len = std::snprintf(buf, sizeof(buf), "%zu", label);
    return fnv1a64(buf, static_cast<std::size_t>(len), h);
}

// --- config --------------------------------------------------------------------

PipelineConfig config_from_json(const nlohmann::json& j) {
    PipelineConfig cfg;
    if (j.contains("input")) {
        const auto& ij = j["input"];
        if (ij.contains("paths")) cfg.input.paths = ij["paths"].get<std::vector<std::string>>();
        if (ij.contains("label_column")) cfg.input.label_column = ij["label_column"];
    }
    if (j.contains("benchmark")) {
        const auto& bj = j["benchmark"];
        if (bj.is_string()) {
            if (bj.get<std::string>() != "default") {
                throw ConfigError("benchmark must be \"default\" or an object");
            }
            cfg.benchmark = default_benchmark_spec();
        } else {
            BenchmarkSpec spec;
            spec.n_features = bj.value("n_features", std::size_t{20});
            for (const auto& cj : bj.at("classes")) {
                BenchmarkClass cls;
                cls.name = cj.at("name").get<std::string>();
                cls.count = cj.at("count").get<std::size_t>();
                cls.mean = cj.at("mean").get<std::vector<double>>();
                cls.stddev = cj.value("stddev", 1.0);
                spec.classes.push_back(std::move(cls));
            }
            cfg.benchmark = std::move(spec);
        }
    }
    if (j.contains("rare_classes")) {
        cfg.rare_classes = j["rare_classes"].get<std::vector<std::string>>();
    }
    cfg.train_fraction = j.value("train_fraction", 0.7);
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie in (0,1)");
    }
    cfg.folds = j.value("folds", std::size_t{5});

    if (j.contains("ctgan")) {
        const auto& cj = j["ctgan"];
        cfg.ctgan.enabled = cj.value("enabled", true);
        cfg.ctgan.ctgan.epochs = cj.value("epochs", std::size_t{700});
        cfg.ctgan.ctgan.batch_size = cj.value("batch_size", std::size_t{64});
        cfg.ctgan.ctgan.noise_dim = cj.value("noise_dim", std::size_t{128});
        if (cj.contains("generator_hidden")) {
            cfg.ctgan.ctgan.generator_hidden =
                cj["generator_hidden"].get<std::vector<std::size_t>>();
        }
        if (cj.contains("discriminator_hidden")) {
            cfg.ctgan.ctgan.discriminator_hidden =
                cj["discriminator_hidden"].get<std::vector<std::size_t>>();
        }
        cfg.ctgan.ctgan.discriminator_dropout = cj.value("discriminator_dropout", 0.5);
        cfg.ctgan.ctgan.adam.lr = cj.value("lr", 2e-4);
        cfg.ctgan.ctgan.adam.beta1 = cj.value("beta1", 0.5);
        cfg.ctgan.ctgan.adam.beta2 = cj.value("beta2", 0.9);
        cfg.ctgan.gmm_components = cj.value("gmm_components", std::size_t{10});
        cfg.ctgan.samples_per_rare_class =
            cj.value("samples_per_rare_class", std::size_t{1000});
        const std::string scope = cj.value("fit_scope", "train");
        if (scope == "train") cfg.ctgan.fit_scope = CtganFitScope::TrainingSet;
        else if (scope == "rare") cfg.ctgan.fit_scope = CtganFitScope::RareOnly;
        else throw ConfigError("ctgan.fit_scope must be 'train' or 'rare'");
        if (cfg.ctgan.ctgan.epochs < 1) throw ConfigError("ctgan.epochs must be >= 1");
        if (cfg.ctgan.ctgan.batch_size < 2) throw ConfigError("ctgan.batch_size must be >= 2");
    }

    if (j.contains("smoteenn")) {
        const auto& sj = j["smoteenn"];
        cfg.resample.enabled = sj.value("enabled", true);
        const std::string method = sj.value("method", "smoteenn");
        if (method == "smoteenn") cfg.resample.method = ResampleMethod::SmoteEnn;
        else if (method == "smote") cfg.resample.method = ResampleMethod::SmoteOnly;
        else throw ConfigError("smoteenn.method must be 'smoteenn' or 'smote'");
        const std::string target = sj.value("target", "minority");
        if (target == "minority") cfg.resample.target = ResampleTarget::AllMinority;
        else if (target == "rare") cfg.resample.target = ResampleTarget::RareOnly;
        else throw ConfigError("smoteenn.target must be 'minority' or 'rare'");
        cfg.resample.smote_k = sj.value("smote_k", std::size_t{5});
        cfg.resample.enn_k = sj.value("enn_k", std::size_t{3});
        if (sj.contains("n_per_sample") && !sj["n_per_sample"].is_null()) {
            cfg.resample.n_per_sample = sj["n_per_sample"].get<std::size_t>();
        }
        if (cfg.resample.smote_k < 1 || cfg.resample.enn_k < 1) {
            throw ConfigError("smoteenn neighbor counts must be >= 1");
        }
    }

    if (j.contains("classifier")) {
        const auto& cj = j["classifier"];
        if (cj.contains("hidden")) {
            cfg.classifier.hidden = cj["hidden"].get<std::vector<std::size_t>>();
        }
        cfg.classifier.dropout_p = cj.value("dropout", 0.4);
        cfg.classifier.epochs = cj.value("epochs", std::size_t{30});
        cfg.classifier.batch_size = cj.value("batch_size", std::size_t{512});
        cfg.classifier.adam.lr = cj.value("lr", 1e-3);
        const std::string loss = cj.value("loss", "focal");
        if (loss == "focal") cfg.classifier.loss = ClassifierLoss::Focal;
        else if (loss == "ce") cfg.classifier.loss = ClassifierLoss::CrossEntropy;
        else throw ConfigError("classifier.loss must be 'focal' or 'ce'");
        cfg.classifier.focal.alpha = cj.value("focal_alpha", 1.0);
        cfg.classifier.focal.gamma = cj.value("focal_gamma", 2.0);
        const std::string mode = cj.value("mode", "multiclass");
        if (mode == "multiclass") cfg.classifier.mode = ClassifierMode::Multiclass;
        else if (mode == "binary") cfg.classifier.mode = ClassifierMode::Binary;
        else throw ConfigError("classifier.mode must be 'binary' or 'multiclass'");
        if (cfg.classifier.focal.gamma < 0.0 || cfg.classifier.focal.alpha <= 0.0) {
            throw ConfigError("focal loss needs alpha > 0 and gamma >= 0");
        }
    }

    cfg.seed = j.value("seed", std::uint64_t{42});
    cfg.output_dir = j.value("output_dir", "out");
    return cfg;
}

nlohmann::json config_to_json(const PipelineConfig& cfg) {
    nlohmann::json j;
    j["input"] = {{"paths", cfg.input.paths}, {"label_column", cfg.input.label_column}};
    if (cfg.benchmark) {
        nlohmann::json classes = nlohmann::json::array();
        for (const auto& cls : cfg.benchmark->classes) {
            classes.push_back({{"name", cls.name},
                               {"count", cls.count},
                               {"mean", cls.mean},
                               {"stddev", cls.stddev}});
        }
        j["benchmark"] = {{"n_features", cfg.benchmark->n_features}, {"classes", classes}};
    }
    j["rare_classes"] = cfg.rare_classes;
    j["train_fraction"] = cfg.train_fraction;
    j["folds"] = cfg.folds;
    j["ctgan"] = {{"enabled", cfg.ctgan.enabled},
                  {"epochs", cfg.ctgan.ctgan.epochs},
                  {"batch_size", cfg.ctgan.ctgan.batch_size},
                  {"noise_dim", cfg.ctgan.ctgan.noise_dim},
                  {"generator_hidden", cfg.ctgan.ctgan.generator_hidden},
                  {"discriminator_hidden", cfg.ctgan.ctgan.discriminator_hidden},
                  {"discriminator_dropout", cfg.ctgan.ctgan.discriminator_dropout},
                  {"lr", cfg.ctgan.ctgan.adam.lr},
                  {"beta1", cfg.ctgan.ctgan.adam.beta1},
                  {"beta2", cfg.ctgan.ctgan.adam.beta2},
                  {"gmm_components", cfg.ctgan.gmm_components},
                  {"samples_per_rare_class", cfg.ctgan.samples_per_rare_class},
                  {"fit_scope",
                   cfg.ctgan.fit_scope == CtganFitScope::TrainingSet ? "train" : "rare"}};
    j["smoteenn"] = {
        {"enabled", cfg.resample.enabled},
        {"method", cfg.resample.method == ResampleMethod::SmoteEnn ? "smoteenn" : "smote"},
        {"target", cfg.resample.target == ResampleTarget::AllMinority ? "minority" : "rare"},
        {"smote_k", cfg.resample.smote_k},
        {"enn_k", cfg.resample.enn_k}};
    if (cfg.resample.n_per_sample) {
        j["smoteenn"]["n_per_sample"] = *cfg.resample.n_per_sample;
    } else {
        j["smoteenn"]["n_per_sample"] = nullptr;
    }
    j["classifier"] = {
        {"hidden", cfg.classifier.hidden},
        {"dropout", cfg.classifier.dropout_p},
        {"epochs", cfg.classifier.epochs},
        {"batch_size", cfg.classifier.batch_size},
        {"lr", cfg.classifier.adam.lr},
        {"loss", cfg.classifier.loss == ClassifierLoss::Focal ? "focal" : "ce"},
        {"focal_alpha", cfg.classifier.focal.alpha},
        {"focal_gamma", cfg.classifier.focal.gamma},
        {"mode", cfg.classifier.mode == ClassifierMode::Binary ? "binary" : "multiclass"}};
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    return j;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    try {
        return config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config field error: " + std::string(e.what()));
    }
}

// --- stages --------------------------------------------------------------------

std::pair<Dataset, Ctgan> augment_with_ctgan(const Dataset& scaled_train,
                                             const std::vector<std::size_t>& rare_ids,
                                             const CtganStageConfig& cfg,
                                             std::uint64_t master_seed) {
    if (rare_ids.empty()) throw ConfigError("ctgan stage: no rare classes configured");

    Dataset fit_data = scaled_train;
    if (cfg.fit_scope == CtganFitScope::RareOnly) {
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < scaled_train.size(); ++i) {
            if (std::find(rare_ids.begin(), rare_ids.end(), scaled_train.labels[i]) !=
                rare_ids.end()) {
                keep.push_back(i);
            }
        }
        if (keep.empty()) throw DataError("ctgan stage: no rows in the rare classes");
        fit_data = scaled_train.take(keep);
    }

    RowCodec codec = fit_codec(fit_data, cfg.gmm_components, Rng::derive(master_seed,
                                                                         seed_stream::kCodec));
    CtganConfig tc = cfg.ctgan;
    tc.seed = Rng::derive(master_seed, seed_stream::kCtgan);
    Ctgan model = train_ctgan(fit_data, std::move(codec), tc);

    Dataset augmented = scaled_train;
    Rng gen_rng(Rng::derive(master_seed, seed_stream::kGenerate));
    for (std::size_t cls : rare_ids) {
        Dataset synth = ctgan_generate(model, cls, cfg.samples_per_rare_class, gen_rng);
        // inputs are min-max scaled, so decoded rows stay in that domain
        for (double& v : synth.features.values()) v = std::clamp(v, 0.0, 1.0);
        augmented.append(synth);
    }
    return {std::move(augmented), std::move(model)};
}

Dataset resample_dataset(const Dataset& train, const std::vector<std::size_t>& rare_ids,
                         const ResampleStageConfig& cfg, std::uint64_t master_seed) {
    SmoteParams sp;
    sp.k_neighbors = cfg.smote_k;
    sp.n_per_sample = cfg.n_per_sample;
    sp.seed = Rng::derive(master_seed, seed_stream::kSmote);
    if (cfg.target == ResampleTarget::AllMinority) {
        const auto counts = train.class_counts();
        const std::size_t majority = static_cast<std::size_t>(
            std::max_element(counts.begin(), counts.end()) - counts.begin());
        for (std::size_t c = 0; c < counts.size(); ++c) {
            if (c != majority && counts[c] > 0) sp.target_classes.insert(c);
        }
    } else {
        sp.target_classes.insert(rare_ids.begin(), rare_ids.end());
    }

    if (cfg.method == ResampleMethod::SmoteEnn) {
        return smoteenn(train, sp, EnnParams{cfg.enn_k});
    }
    Dataset out = train;
    out.append(smote(train, sp).synthetic);
    return out;
}

Evaluation evaluate_classifier(const Classifier& model, const Dataset& test) {
    Evaluation eval;
    eval.class_names = model.class_names;
    const auto y_true = model.mode == ClassifierMode::Binary ? binary_relabel(test.labels)
                                                             : test.labels;
    const Matrix probs = predict_proba(model, test.features);
    std::vector<std::size_t> y_pred(probs.rows());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const auto row = probs.row(i);
        y_pred[i] = static_cast<std::size_t>(
            std::max_element(row.begin(), row.end()) - row.begin());
    }
    eval.confusion = confusion(y_true, y_pred, model.class_names.size(), model.class_names);
    eval.metrics = per_class_metrics(eval.confusion);

    eval.roc.resize(model.class_names.size());
    eval.roc_valid.assign(model.class_names.size(), false);
    for (std::size_t c = 0; c < model.class_names.size(); ++c) {
        std::vector<double> scores(probs.rows());
        std::vector<int> labels(probs.rows());
        for (std::size_t i = 0; i < probs.rows(); ++i) {
            scores[i] = probs(i, c);
            labels[i] = y_true[i] == c ? 1 : 0;
        }
        try {
            eval.roc[c] = roc_auc(scores, labels);
            eval.roc_valid[c] = true;
        } catch (const DataError&) {
            // class absent from the test rows; no curve to draw
        }
    }
    return eval;
}

void write_evaluation(const Evaluation& eval, const std::string& out_dir) {
    fs::create_directories(out_dir);

    {
        std::ofstream out(out_dir + "/confusion.csv");
        if (!out) throw DataError("cannot write confusion.csv");
        out << "class";
        for (const auto& name : eval.class_names) out << ',' << name;
        out << '\n';
        for (std::size_t i = 0; i < eval.confusion.n_classes(); ++i) {
            out << eval.class_names[i];
            for (std::size_t j = 0; j < eval.confusion.n_classes(); ++j) {
                out << ',' << eval.confusion.counts[i][j];
            }
            out << '\n';
        }
    }

    nlohmann::json mj;
    mj["accuracy"] = eval.metrics.accuracy;
    mj["macro"] = {{"precision", eval.metrics.macro_precision},
                   {"recall", eval.metrics.macro_recall},
                   {"f1", eval.metrics.macro_f1}};
    mj["micro"] = {{"precision", eval.metrics.micro_precision},
                   {"recall", eval.metrics.micro_recall},
                   {"f1", eval.metrics.micro_f1}};
    nlohmann::json per_class = nlohmann::json::array();
    std::size_t support_total = 0;
    for (std::size_t c = 0; c < eval.class_names.size(); ++c) {
        const auto& m = eval.metrics.per_class[c];
        std::size_t support = 0;
        for (std::size_t j = 0; j < eval.confusion.n_classes(); ++j) {
            support += eval.confusion.counts[c][j];
        }
        support_total += support;
        nlohmann::json cj = {{"name", eval.class_names[c]},
                             {"precision", m.precision},
                             {"recall", m.recall},
                             {"f1", m.f1},
                             {"accuracy", m.accuracy},
                             {"support", support}};
        if (m.precision_undefined || m.recall_undefined || m.f1_undefined) {
            cj["zero_denominator"] = true;
        }
        if (eval.roc_valid[c]) cj["auc"] = eval.roc[c].auc;
        per_class.push_back(std::move(cj));
    }
    mj["per_class"] = std::move(per_class);
    mj["support"] = support_total;
    std::ofstream mf(out_dir + "/metrics.json");
    if (!mf) throw DataError("cannot write metrics.json");
    mf << mj.dump(2) << '\n';

    for (std::size_t c = 0; c < eval.class_names.size(); ++c) {
        if (!eval.roc_valid[c]) continue;
        std::ofstream out(out_dir + "/roc_" + sanitize_filename(eval.class_names[c]) + ".csv");
        if (!out) throw DataError("cannot write roc csv");
        out << "fpr,tpr,threshold\n";
        const auto& curve = eval.roc[c];
        for (std::size_t i = 0; i < curve.fpr.size(); ++i) {
            out << format_double(curve.fpr[i]) << ',' << format_double(curve.tpr[i]) << ','
                << format_double(curve.thresholds[i]) << '\n';
        }
    }
}

// --- cross-validation -------------------------------------------------------------

CvResult cross_validate(const Dataset& scaled_train, const PipelineConfig& cfg) {
    if (cfg.folds < 2) throw ConfigError("cross_validate: folds must be >= 2");
    const std::uint64_t cv_seed = Rng::derive(cfg.seed, seed_stream::kCrossValidation);
    const auto folds = stratified_kfold(scaled_train, cfg.folds, cv_seed);
    const auto rare_ids = resolve_rare_ids(cfg.rare_classes, scaled_train.class_names);

    CvResult result;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const std::uint64_t fold_seed = Rng::derive(cv_seed, f);
        Dataset fold_train = scaled_train.take(folds[f].train);
        const Dataset fold_val = scaled_train.take(folds[f].validation);

        if (cfg.ctgan.enabled && !rare_ids.empty()) {
            fold_train = augment_with_ctgan(fold_train, rare_ids, cfg.ctgan, fold_seed).first;
        }
        if (cfg.resample.enabled) {
            fold_train = resample_dataset(fold_train, rare_ids, cfg.resample, fold_seed);
        }
        ClassifierConfig ccfg = cfg.classifier;
        ccfg.seed = Rng::derive(fold_seed, seed_stream::kClassifier);
        const Classifier model = fit_classifier(fold_train, ccfg);
        result.folds.push_back(evaluate_on(model, fold_val));
    }

    const double n = static_cast<double>(result.folds.size());
    for (const auto& m : result.folds) {
        result.mean_accuracy += m.accuracy / n;
        result.mean_macro_f1 += m.macro_f1 / n;
    }
    for (const auto& m : result.folds) {
        result.std_accuracy += (m.accuracy - result.mean_accuracy) *
                               (m.accuracy - result.mean_accuracy) / n;
        result.std_macro_f1 += (m.macro_f1 - result.mean_macro_f1) *
                               (m.macro_f1 - result.mean_macro_f1) / n;
    }
    result.std_accuracy = std::sqrt(result.std_accuracy);
    result.std_macro_f1 = std::sqrt(result.std_macro_f1);
    return result;
}

// --- full pipeline ------------------------------------------------------------------

RunResult run_pipeline(const PipelineConfig& cfg) {
    if (cfg.benchmark && !cfg.input.paths.empty()) {
        throw ConfigError("configure either input paths or a benchmark, not both");
    }
    if (!cfg.benchmark && cfg.input.paths.empty()) {
        throw ConfigError("no input configured");
    }
    fs::create_directories(cfg.output_dir);

    nlohmann::json manifest;
    manifest["config"] = config_to_json(cfg);
    manifest["stages"] = nlohmann::json::array();
    manifest["timings"] = nlohmann::json::object();

    auto write_manifest = [&] {
        std::ofstream out(cfg.output_dir + "/manifest.json");
        out << manifest.dump(2) << '\n';
    };
    auto artifact = [&](nlohmann::json& stage, const std::string& file) {
        stage["artifacts"][file] = file_digest_hex(cfg.output_dir + "/" + file);
    };

    try {
        // 1. ingest + clean
        auto t0 = std::chrono::steady_clock::now();
        Dataset full;
        std::size_t raw_rows = 0;
        if (cfg.benchmark) {
            full = make_benchmark(*cfg.benchmark,
                                  Rng::derive(cfg.seed, seed_stream::kBenchmark));
            raw_rows = full.size();
        } else {
            const RawTable raw = load_csv(cfg.input.paths);
            raw_rows = raw.rows.size();
            full = clean(raw, cfg.input.label_column);
        }
        const auto rare_ids = resolve_rare_ids(cfg.rare_classes, full.class_names);
        {
            nlohmann::json stage;
            stage["name"] = "ingest";
            stage["rows_in"] = raw_rows;
            stage["rows_out"] = full.size();
            stage["class_counts"] = class_count_json(full);
            manifest["stages"].push_back(std::move(stage));
            manifest["timings"]["ingest"] = stage_seconds(t0);
        }

        // 2. split + 3. scale
        t0 = std::chrono::steady_clock::now();
        const std::uint64_t split_seed = Rng::derive(cfg.seed, seed_stream::kSplit);
        auto [train_raw, test_raw] = stratified_split(full, cfg.train_fraction, split_seed);
        const MinMaxScaler scaler = fit_scaler(train_raw);
        const Dataset train = apply_scaler(scaler, train_raw);
        const Dataset test = apply_scaler(scaler, test_raw);
        save_dataset(train, cfg.output_dir + "/train_scaled", scaler);
        save_dataset(test, cfg.output_dir + "/test_scaled", scaler);
        {
            nlohmann::json stage;
            stage["name"] = "preprocess";
            stage["seed"] = split_seed;
            stage["rows_in"] = full.size();
            stage["rows_out"] = train.size();
            stage["test_rows"] = test.size();
            stage["train_class_counts"] = class_count_json(train);
            artifact(stage, "train_scaled.csv");
            artifact(stage, "train_scaled.meta.json");
            artifact(stage, "test_scaled.csv");
            artifact(stage, "test_scaled.meta.json");
            manifest["stages"].push_back(std::move(stage));
            manifest["timings"]["preprocess"] = stage_seconds(t0);
        }

        // 4. CTGAN augmentation
        t0 = std::chrono::steady_clock::now();
        Dataset augmented = train;
        if (cfg.ctgan.enabled && !rare_ids.empty()) {
            auto [aug, model] = augment_with_ctgan(train, rare_ids, cfg.ctgan, cfg.seed);
            augmented = std::move(aug);
            {
                std::ofstream out(cfg.output_dir + "/ctgan.json");
                out << ctgan_to_json(model).dump() << '\n';
            }
            save_dataset(augmented, cfg.output_dir + "/augmented");
            nlohmann::json stage;
            stage["name"] = "ctgan";
            stage["seed"] = Rng::derive(cfg.seed, seed_stream::kCtgan);
            stage["codec_seed"] = Rng::derive(cfg.seed, seed_stream::kCodec);
            stage["generate_seed"] = Rng::derive(cfg.seed, seed_stream::kGenerate);
            stage["rows_in"] = train.size();
            stage["rows_out"] = augmented.size();
            stage["class_counts"] = class_count_json(augmented);
            artifact(stage, "ctgan.json");
            artifact(stage, "augmented.csv");
            artifact(stage, "augmented.meta.json");
            manifest["stages"].push_back(std::move(stage));
        } else {
            manifest["stages"].push_back({{"name", "ctgan"}, {"skipped", true}});
        }
        manifest["timings"]["ctgan"] = stage_seconds(t0);

        // 5. SMOTEENN resampling
        t0 = std::chrono::steady_clock::now();
        Dataset processed = augmented;
        if (cfg.resample.enabled) {
            processed = resample_dataset(augmented, rare_ids, cfg.resample, cfg.seed);
            save_dataset(processed, cfg.output_dir + "/resampled");
            nlohmann::json stage;
            stage["name"] = "resample";
            stage["seed"] = Rng::derive(cfg.seed, seed_stream::kSmote);
            stage["rows_in"] = augmented.size();
            stage["rows_out"] = processed.size();
            stage["class_counts"] = class_count_json(processed);
            artifact(stage, "resampled.csv");
            artifact(stage, "resampled.meta.json");
            manifest["stages"].push_back(std::move(stage));
        } else {
            manifest["stages"].push_back({{"name", "resample"}, {"skipped", true}});
        }
        manifest["timings"]["resample"] = stage_seconds(t0);

        // 6. cross-validation (leakage-free: stages refit per fold)
        t0 = std::chrono::steady_clock::now();
        if (cfg.folds >= 2) {
            const CvResult cv = cross_validate(train, cfg);
            {
                std::ofstream out(cfg.output_dir + "/cv.csv");
                out << "fold,accuracy,macro_precision,macro_recall,macro_f1\n";
                for (std::size_t f = 0; f < cv.folds.size(); ++f) {
                    out << f << ',' << format_double(cv.folds[f].accuracy) << ','
                        << format_double(cv.folds[f].macro_precision) << ','
                        << format_double(cv.folds[f].macro_recall) << ','
                        << format_double(cv.folds[f].macro_f1) << '\n';
                }
            }
            nlohmann::json stage;
            stage["name"] = "cross_validation";
            stage["seed"] = Rng::derive(cfg.seed, seed_stream::kCrossValidation);
            stage["folds"] = cfg.folds;
            stage["mean_accuracy"] = cv.mean_accuracy;
            stage["std_accuracy"] = cv.std_accuracy;
            stage["mean_macro_f1"] = cv.mean_macro_f1;
            stage["std_macro_f1"] = cv.std_macro_f1;
            artifact(stage, "cv.csv");
            manifest["stages"].push_back(std::move(stage));
        } else {
            manifest["stages"].push_back({{"name", "cross_validation"}, {"skipped", true}});
        }
        manifest["timings"]["cross_validation"] = stage_seconds(t0);

        // 7. final classifier on the processed training set
        t0 = std::chrono::steady_clock::now();
        ClassifierConfig ccfg = cfg.classifier;
        ccfg.seed = Rng::derive(cfg.seed, seed_stream::kClassifier);
        const Classifier model = fit_classifier(processed, ccfg);
        {
            std::ofstream out(cfg.output_dir + "/classifier.json");
            out << classifier_to_json(model).dump() << '\n';
        }
        {
            std::ofstream out(cfg.output_dir + "/curves.csv");
            out << "epoch,loss,accuracy\n";
            for (std::size_t e = 0; e < model.history.loss.size(); ++e) {
                out << (e + 1) << ',' << format_double(model.history.loss[e]) << ','
                    << format_double(model.history.accuracy[e]) << '\n';
            }
        }
        {
            nlohmann::json stage;
            stage["name"] = "train";
            stage["seed"] = ccfg.seed;
            stage["init_seed"] = Rng::derive(ccfg.seed, 0);
            stage["shuffle_seed"] = Rng::derive(ccfg.seed, 1);
            stage["dropout_seed"] = Rng::derive(ccfg.seed, 2);
            stage["rows_in"] = processed.size();
            artifact(stage, "classifier.json");
            artifact(stage, "curves.csv");
            manifest["stages"].push_back(std::move(stage));
            manifest["timings"]["train"] = stage_seconds(t0);
        }

        // 8. evaluation on the untouched 30% + projection files
        t0 = std::chrono::steady_clock::now();
        RunResult result;
        result.evaluation = evaluate_classifier(model, test);
        result.metrics = result.evaluation.metrics;
        result.rare_class_ids = rare_ids;
        write_evaluation(result.evaluation, cfg.output_dir);
        emit_projection(train, processed, cfg.output_dir + "/projection_before.csv",
                        cfg.output_dir + "/projection_after.csv");
        {
            nlohmann::json stage;
            stage["name"] = "evaluate";
            stage["rows_in"] = test.size();
            stage["accuracy"] = result.metrics.accuracy;
            stage["macro_f1"] = result.metrics.macro_f1;
            artifact(stage, "confusion.csv");
            artifact(stage, "metrics.json");
            artifact(stage, "curves.csv");
            artifact(stage, "projection_before.csv");
            artifact(stage, "projection_after.csv");
            manifest["stages"].push_back(std::move(stage));
            manifest["timings"]["evaluate"] = stage_seconds(t0);
        }

        manifest["results"] = {{"accuracy", result.metrics.accuracy},
                               {"macro_f1", result.metrics.macro_f1},
                               {"macro_precision", result.metrics.macro_precision},
                               {"macro_recall", result.metrics.macro_recall}};
        write_manifest();
        result.manifest = manifest;
        return result;
    } catch (...) {
        // keep the partial stage log for post-mortem inspection
        manifest["aborted"] = true;
        write_manifest();
        throw;
    }
}

// --- comparison ---------------------------------------------------------------------

std::vector<VariantResult> run_comparison(const PipelineConfig& base) {
    struct VariantSpec {
        std::string name;
        bool ctgan;
        bool resample;
        ResampleMethod method;
        ClassifierLoss loss;
    };
    const std::vector<VariantSpec> variants = {
        {"proposed", true, true, ResampleMethod::SmoteEnn, ClassifierLoss::Focal},
        {"ctgsm_dnn_ce", true, true, ResampleMethod::SmoteEnn, ClassifierLoss::CrossEntropy},
        {"dnn", false, false, ResampleMethod::SmoteEnn, ClassifierLoss::CrossEntropy},
        {"dnn_smote", false, true, ResampleMethod::SmoteOnly, ClassifierLoss::CrossEntropy},
    };

    std::vector<VariantResult> results;
    for (const auto& v : variants) {
        PipelineConfig cfg = base;
        cfg.ctgan.enabled = v.ctgan;
        cfg.resample.enabled = v.resample;
        cfg.resample.method = v.method;
        cfg.classifier.loss = v.loss;
        cfg.output_dir = base.output_dir + "/" + v.name;
        const RunResult run = run_pipeline(cfg);

        VariantResult out;
        out.name = v.name;
        out.metrics = run.metrics;
        if (!run.rare_class_ids.empty() &&
            cfg.classifier.mode == ClassifierMode::Multiclass) {
            for (std::size_t id : run.rare_class_ids) {
                out.rare_recall_mean += run.metrics.per_class[id].recall;
            }
            out.rare_recall_mean /= static_cast<double>(run.rare_class_ids.size());
        }
        results.push_back(std::move(out));
    }

    fs::create_directories(base.output_dir);
    std::ofstream out(base.output_dir + "/comparison.csv");
    out << "model,macro_precision,macro_recall,macro_f1,accuracy,rare_recall\n";
    for (const auto& r : results) {
        out << r.name << ',' << format_double(r.metrics.macro_precision) << ','
            << format_double(r.metrics.macro_recall) << ','
            << format_double(r.metrics.macro_f1) << ','
            << format_double(r.metrics.accuracy) << ','
            << format_double(r.rare_recall_mean) << '\n';
    }
    return results;
}

}  // namespace ctgsm
