#include "ctgsm/ctgan.hpp"

#include <algorithm>
#include <cmath>

#include "ctgsm/errors.hpp"
#include "ctgsm/parallel.hpp"

namespace ctgsm {
namespace {

// tanh on alpha slots, softmax per mode group and on the label group
void grouped_activation(const RowCodec& codec, std::span<double> row) {
    auto softmax_span = [](std::span<double> s) {
        double mx = s[0];
        for (double v : s) mx = std::max(mx, v);
        double sum = 0.0;
        for (double& v : s) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : s) v /= sum;
    };
    for (std::size_t j = 0; j < codec.n_features(); ++j) {
        row[codec.feature_offset(j)] = std::tanh(row[codec.feature_offset(j)]);
        softmax_span(row.subspan(codec.mode_offset(j), codec.feature_gmms[j].n_components()));
    }
    softmax_span(row.subspan(codec.label_offset(), codec.n_classes()));
}

// gradient w.r.t. the raw pre-activation row, given the activated row and the
// gradient w.r.t. the activated values
void grouped_activation_gradient(const RowCodec& codec, std::span<const double> activated,
                                 std::span<const double> grad_out, std::span<double> grad_raw) {
    auto softmax_grad = [](std::span<const double> p, std::span<const double> g,
                           std::span<double> out) {
        double dot = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) dot += p[i] * g[i];
        for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] * (g[i] - dot);
    };
    for (std::size_t j = 0; j < codec.n_features(); ++j) {
        const std::size_t a = codec.feature_offset(j);
        const double t = activated[a];
        grad_raw[a] = grad_out[a] * (1.0 - t * t);
        const std::size_t m = codec.mode_offset(j);
        const std::size_t k = codec.feature_gmms[j].n_components();
        softmax_grad(activated.subspan(m, k), grad_out.subspan(m, k), grad_raw.subspan(m, k));
    }
    const std::size_t lo = codec.label_offset();
    const std::size_t c = codec.n_classes();
    softmax_grad(activated.subspan(lo, c), grad_out.subspan(lo, c), grad_raw.subspan(lo, c));
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row(i);
        const auto ra = a.row(i);
        const auto rb = b.row(i);
        std::copy(ra.begin(), ra.end(), dst.begin());
        std::copy(rb.begin(), rb.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
    }
    return out;
}

}  // namespace

std::size_t RowCodec::encoded_width() const {
    std::size_t w = 0;
    for (const auto& g : feature_gmms) w += g.n_components() + 1;
    return w + n_classes();
}

std::size_t RowCodec::feature_offset(std::size_t j) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < j; ++i) off += feature_gmms[i].n_components() + 1;
    return off;
}

std::size_t RowCodec::mode_offset(std::size_t j) const { return feature_offset(j) + 1; }

std::size_t RowCodec::label_offset() const {
    return encoded_width() - n_classes();
}

RowCodec fit_codec(const Dataset& train, std::size_t gmm_components, std::uint64_t seed) {
    RowCodec codec;
    codec.class_names = train.class_names;
    codec.schema = train.schema;
    codec.feature_gmms.resize(train.n_features());
    parallel_for(train.n_features(), [&](std::size_t j) {
        std::vector<double> column(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) column[i] = train.features(i, j);
        GmmFitOptions options;
        options.seed = Rng::derive(seed, j);
        codec.feature_gmms[j] =
            fit_gmm(column, std::min(gmm_components, column.size()), options);
    }, 1);
    return codec;
}

std::vector<double> encode_row(const RowCodec& codec, std::span<const double> features,
                               std::size_t label, Rng& rng, bool deterministic) {
    if (features.size() != codec.n_features()) throw DataError("encode: width mismatch");
    if (label >= codec.n_classes()) throw DataError("encode: label out of range");
    std::vector<double> row(codec.encoded_width(), 0.0);
    for (std::size_t j = 0; j < codec.n_features(); ++j) {
        const auto enc = encode_value(codec.feature_gmms[j], features[j], rng, deterministic);
        row[codec.feature_offset(j)] = enc.alpha;
        row[codec.mode_offset(j) + enc.mode] = 1.0;
    }
    row[codec.label_offset() + label] = 1.0;
    return row;
}

std::pair<std::vector<double>, std::size_t> decode_row(const RowCodec& codec,
                                                       std::span<const double> encoded) {
    if (encoded.size() != codec.encoded_width()) throw DataError("decode: width mismatch");
    std::vector<double> features(codec.n_features());
    for (std::size_t j = 0; j < codec.n_features(); ++j) {
        const auto modes =
            encoded.subspan(codec.mode_offset(j), codec.feature_gmms[j].n_components());
        const std::size_t mode = static_cast<std::size_t>(
            std::max_element(modes.begin(), modes.end()) - modes.begin());
        const double alpha = std::clamp(encoded[codec.feature_offset(j)], -1.0, 1.0);
        features[j] = decode_value(codec.feature_gmms[j], {mode, alpha});
    }
    const auto label_group = encoded.subspan(codec.label_offset(), codec.n_classes());
    const std::size_t label = static_cast<std::size_t>(
        std::max_element(label_group.begin(), label_group.end()) - label_group.begin());
    return {std::move(features), label};
}

CondSampler::CondSampler(const std::vector<std::size_t>& labels, std::size_t n_classes,
                         CondStrategy strategy, const std::set<std::size_t>& restrict_to)
    : n_classes_(n_classes), rows_by_class_(n_classes) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= n_classes) throw DataError("cond sampler: label out of range");
        rows_by_class_[labels[i]].push_back(i);
    }
    if (strategy == CondStrategy::UniformOver) {
        for (std::size_t c : restrict_to) {
            if (c >= n_classes) throw DataError("cond sampler: unknown class in subset");
            if (rows_by_class_[c].empty()) {
                throw DataError("cond sampler: class " + std::to_string(c) + " has no rows");
            }
            eligible_.push_back(c);
        }
        if (eligible_.empty()) throw DataError("cond sampler: empty class subset");
        cumulative_.resize(eligible_.size());
        for (std::size_t i = 0; i < eligible_.size(); ++i) {
            cumulative_[i] = static_cast<double>(i + 1) / static_cast<double>(eligible_.size());
        }
    } else {
        double total = 0.0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            if (!rows_by_class_[c].empty()) eligible_.push_back(c);
        }
        if (eligible_.empty()) throw DataError("cond sampler: no labeled rows");
        cumulative_.resize(eligible_.size());
        for (std::size_t i = 0; i < eligible_.size(); ++i) {
            total += std::log1p(static_cast<double>(rows_by_class_[eligible_[i]].size()));
            cumulative_[i] = total;
        }
        for (double& v : cumulative_) v /= total;
    }
}

double CondSampler::class_probability(std::size_t class_id) const {
    for (std::size_t i = 0; i < eligible_.size(); ++i) {
        if (eligible_[i] == class_id) {
            return cumulative_[i] - (i == 0 ? 0.0 : cumulative_[i - 1]);
        }
    }
    return 0.0;
}

std::pair<CondVector, std::size_t> CondSampler::sample(Rng& rng) const {
    const double u = rng.uniform();
    std::size_t pick = eligible_.size() - 1;
    for (std::size_t i = 0; i < eligible_.size(); ++i) {
        if (u < cumulative_[i]) {
            pick = i;
            break;
        }
    }
    const std::size_t cls = eligible_[pick];
    const auto& rows = rows_by_class_[cls];
    return {CondVector{cls, n_classes_}, rows[rng.uniform_index(rows.size())]};
}

Ctgan train_ctgan(const Dataset& train, RowCodec codec, const CtganConfig& cfg) {
    if (train.size() == 0) throw DataError("ctgan: empty training set");
    if (cfg.batch_size < 2) throw ConfigError("ctgan: batch size must be >= 2");

    const std::size_t width = codec.encoded_width();
    const std::size_t n_classes = codec.n_classes();

    Rng encode_rng(Rng::derive(cfg.seed, 0));
    Rng g_init(Rng::derive(cfg.seed, 1));
    Rng d_init(Rng::derive(cfg.seed, 2));
    Rng loop_rng(Rng::derive(cfg.seed, 3));

    // one-time encoding of the real rows
    Matrix real_enc(train.size(), width);
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto enc = encode_row(codec, train.features.row(i), train.labels[i], encode_rng);
        std::copy(enc.begin(), enc.end(), real_enc.row(i).begin());
    }

    std::vector<LayerSpec> g_spec;
    for (std::size_t h : cfg.generator_hidden) g_spec.push_back({h, Activation::Relu, 0.0});
    g_spec.push_back({width, Activation::Identity, 0.0});
    std::vector<LayerSpec> d_spec;
    for (std::size_t h : cfg.discriminator_hidden) {
        d_spec.push_back({h, Activation::LeakyRelu, cfg.discriminator_dropout});
    }
    d_spec.push_back({1, Activation::Identity, 0.0});

    Ctgan model;
    model.codec = std::move(codec);
    model.generator = make_mlp(cfg.noise_dim + n_classes, g_spec, g_init);
    model.discriminator = make_mlp(width + n_classes, d_spec, d_init);
    model.config = cfg;

    AdamState g_adam = make_adam_state(model.generator, cfg.adam);
    AdamState d_adam = make_adam_state(model.discriminator, cfg.adam);

    CondSampler sampler(train.labels, n_classes, CondStrategy::LogFrequency);
    const std::size_t B = cfg.batch_size;
    const std::size_t steps = std::max<std::size_t>(1, train.size() / B);
    const std::vector<double> ones(B, 1.0), zeros(B, 0.0);

    auto sample_batch = [&](Matrix& cond, std::vector<std::size_t>& classes,
                            std::vector<std::size_t>& rows) {
        cond = Matrix(B, n_classes);
        classes.resize(B);
        rows.resize(B);
        for (std::size_t i = 0; i < B; ++i) {
            auto [cv, row] = sampler.sample(loop_rng);
            classes[i] = cv.class_id;
            rows[i] = row;
            cond(i, cv.class_id) = 1.0;
        }
    };
    auto make_noise = [&](const Matrix& cond) {
        Matrix z(B, cfg.noise_dim + n_classes);
        for (std::size_t i = 0; i < B; ++i) {
            auto row = z.row(i);
            for (std::size_t j = 0; j < cfg.noise_dim; ++j) row[j] = loop_rng.normal();
            const auto crow = cond.row(i);
            std::copy(crow.begin(), crow.end(),
                      row.begin() + static_cast<std::ptrdiff_t>(cfg.noise_dim));
        }
        return z;
    };
    auto add_grads = [](MlpGradients& acc, const MlpGradients& inc) {
        for (std::size_t l = 0; l < acc.weights.size(); ++l) {
            auto& w = acc.weights[l].values();
            const auto& iw = inc.weights[l].values();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] += iw[i];
            for (std::size_t i = 0; i < acc.biases[l].size(); ++i) {
                acc.biases[l][i] += inc.biases[l][i];
            }
        }
    };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double d_sum = 0.0, g_sum = 0.0;
        for (std::size_t step = 0; step < steps; ++step) {
            // --- discriminator update ---
            Matrix cond;
            std::vector<std::size_t> classes, rows;
            sample_batch(cond, classes, rows);

            Matrix real_batch = real_enc.take_rows(rows);
            Matrix fake_pre = forward(model.generator, make_noise(cond), false).output;
            for (std::size_t i = 0; i < B; ++i) {
                grouped_activation(model.codec, fake_pre.row(i));
            }

            auto d_real = forward(model.discriminator, concat_cols(real_batch, cond), true,
                                  &loop_rng);
            const auto real_loss = bce_with_logits(d_real.output, ones);
            auto real_back = backward(model.discriminator, d_real.cache,
                                      real_loss.logit_gradient);

            auto d_fake = forward(model.discriminator, concat_cols(fake_pre, cond), true,
                                  &loop_rng);
            const auto fake_loss = bce_with_logits(d_fake.output, zeros);
            auto fake_back = backward(model.discriminator, d_fake.cache,
                                      fake_loss.logit_gradient);

            add_grads(real_back.grads, fake_back.grads);
            adam_step(model.discriminator, real_back.grads, d_adam);
            const double d_loss = real_loss.loss + fake_loss.loss;

            // --- generator update ---
            sample_batch(cond, classes, rows);
            auto g_fwd = forward(model.generator, make_noise(cond), false);
            Matrix fake_act = g_fwd.output;
            for (std::size_t i = 0; i < B; ++i) {
                grouped_activation(model.codec, fake_act.row(i));
            }

            auto d_on_fake = forward(model.discriminator, concat_cols(fake_act, cond), true,
                                     &loop_rng);
            const auto adv_loss = bce_with_logits(d_on_fake.output, ones);
            auto adv_back = backward(model.discriminator, d_on_fake.cache,
                                     adv_loss.logit_gradient);

            // conditioning term: label group must match the cond class
            const std::size_t lo = model.codec.label_offset();
            Matrix label_probs(B, n_classes);
            for (std::size_t i = 0; i < B; ++i) {
                for (std::size_t c = 0; c < n_classes; ++c) {
                    label_probs(i, c) = fake_act(i, lo + c);
                }
            }
            const auto cond_loss = cross_entropy_loss(label_probs, classes);

            Matrix g_raw_grad(B, width);
            for (std::size_t i = 0; i < B; ++i) {
                grouped_activation_gradient(
                    model.codec, fake_act.row(i),
                    adv_back.input_gradient.row(i).subspan(0, width), g_raw_grad.row(i));
                // cross-entropy gradient lands directly on the label logits
                for (std::size_t c = 0; c < n_classes; ++c) {
                    g_raw_grad(i, lo + c) += cond_loss.logit_gradient(i, c);
                }
            }
            const double g_loss = adv_loss.loss + cond_loss.loss;
            if (cfg.train_generator) {
                auto g_back = backward(model.generator, g_fwd.cache, g_raw_grad);
                adam_step(model.generator, g_back.grads, g_adam);
            }

            if (!std::isfinite(d_loss) || !std::isfinite(g_loss)) {
                throw TrainingError("ctgan: loss diverged at epoch " + std::to_string(epoch));
            }
            d_sum += d_loss;
            g_sum += g_loss;
        }
        model.history.d_loss.push_back(d_sum / static_cast<double>(steps));
        model.history.g_loss.push_back(g_sum / static_cast<double>(steps));
    }
    return model;
}

Matrix ctgan_generate_encoded(const Ctgan& model, std::size_t class_id, std::size_t n,
                              Rng& rng) {
    if (class_id >= model.codec.n_classes()) throw DataError("generate: unknown class id");
    const std::size_t noise_dim = model.config.noise_dim;
    const std::size_t n_classes = model.codec.n_classes();
    Matrix z(n, noise_dim + n_classes);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = z.row(i);
        for (std::size_t j = 0; j < noise_dim; ++j) row[j] = rng.normal();
        row[noise_dim + class_id] = 1.0;
    }
    Matrix out = forward(model.generator, z, false).output;
    for (std::size_t i = 0; i < n; ++i) grouped_activation(model.codec, out.row(i));
    return out;
}

Dataset ctgan_generate(const Ctgan& model, std::size_t class_id, std::size_t n, Rng& rng) {
    const Matrix encoded = ctgan_generate_encoded(model, class_id, n, rng);
    Dataset out;
    out.class_names = model.codec.class_names;
    out.schema = model.codec.schema;
    out.features = Matrix(n, model.codec.n_features());
    out.labels.assign(n, class_id);
    for (std::size_t i = 0; i < n; ++i) {
        auto [features, label] = decode_row(model.codec, encoded.row(i));
        (void)label;  // the cond vector, not the soft label group, fixes the class
        std::copy(features.begin(), features.end(), out.features.row(i).begin());
    }
    return out;
}

nlohmann::json ctgan_to_json(const Ctgan& model) {
    nlohmann::json gmms = nlohmann::json::array();
    for (const auto& g : model.codec.feature_gmms) {
        gmms.push_back({{"weights", g.weights}, {"means", g.means}, {"variances", g.variances}});
    }
    nlohmann::json schema = nlohmann::json::array();
    for (const auto& col : model.codec.schema) {
        const char* kind = "continuous";
        if (col.kind == ColumnKind::Label) kind = "label";
        else if (col.kind == ColumnKind::Dropped) kind = "dropped";
        else if (col.kind == ColumnKind::Discrete) kind = "discrete";
        schema.push_back({{"name", col.name}, {"kind", kind}});
    }
    return {{"codec",
             {{"gmms", gmms}, {"class_names", model.codec.class_names}, {"schema", schema}}},
            {"generator", mlp_to_json(model.generator)},
            {"discriminator", mlp_to_json(model.discriminator)},
            {"config",
             {{"noise_dim", model.config.noise_dim},
              {"generator_hidden", model.config.generator_hidden},
              {"discriminator_hidden", model.config.discriminator_hidden},
              {"discriminator_dropout", model.config.discriminator_dropout},
              {"epochs", model.config.epochs},
              {"batch_size", model.config.batch_size},
              {"seed", model.config.seed}}}};
}

Ctgan ctgan_from_json(const nlohmann::json& j) {
    Ctgan model;
    const auto& cj = j.at("codec");
    for (const auto& gj : cj.at("gmms")) {
        Gmm g;
        g.weights = gj.at("weights").get<std::vector<double>>();
        g.means = gj.at("means").get<std::vector<double>>();
        g.variances = gj.at("variances").get<std::vector<double>>();
        model.codec.feature_gmms.push_back(std::move(g));
    }
    model.codec.class_names = cj.at("class_names").get<std::vector<std::string>>();
    for (const auto& sj : cj.at("schema")) {
        const auto kind = sj.at("kind").get<std::string>();
        ColumnSchema col{sj.at("name").get<std::string>(), ColumnKind::Continuous};
        if (kind == "label") col.kind = ColumnKind::Label;
        else if (kind == "dropped") col.kind = ColumnKind::Dropped;
        else if (kind == "discrete") col.kind = ColumnKind::Discrete;
        model.codec.schema.push_back(std::move(col));
    }
    model.generator = mlp_from_json(j.at("generator"));
    model.discriminator = mlp_from_json(j.at("discriminator"));
    const auto& fj = j.at("config");
    model.config.noise_dim = fj.at("noise_dim").get<std::size_t>();
    model.config.generator_hidden = fj.at("generator_hidden").get<std::vector<std::size_t>>();
    model.config.discriminator_hidden =
        fj.at("discriminator_hidden").get<std::vector<std::size_t>>();
    model.config.discriminator_dropout = fj.at("discriminator_dropout").get<double>();
    model.config.epochs = fj.at("epochs").get<std::size_t>();
    model.config.batch_size = fj.at("batch_size").get<std::size_t>();
    model.config.seed = fj.at("seed").get<std::uint64_t>();
    return model;
}

}  // namespace ctgsm
