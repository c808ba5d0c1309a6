#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctgsm/gmm.hpp"
#include "ctgsm/nn.hpp"
#include "ctgsm/tabular.hpp"

namespace ctgsm {

// Row encoder: each continuous feature becomes [alpha, mode one-hot(K_j)]
// via its fitted mixture, followed by a one-hot over class labels (the only
// discrete column in this dataset family).
struct RowCodec {
    std::vector<Gmm> feature_gmms;
    std::vector<std::string> class_names;
    std::vector<ColumnSchema> schema;

    std::size_t n_features() const { return feature_gmms.size(); }
    std::size_t n_classes() const { return class_names.size(); }
    std::size_t encoded_width() const;

    // slot layout of one encoded row
    std::size_t feature_offset(std::size_t j) const;       // alpha slot
    std::size_t mode_offset(std::size_t j) const;          // first mode slot
    std::size_t label_offset() const;                      // first label slot
};

RowCodec fit_codec(const Dataset& train, std::size_t gmm_components, std::uint64_t seed);

std::vector<double> encode_row(const RowCodec& codec, std::span<const double> features,
                               std::size_t label, Rng& rng, bool deterministic = false);
// features from mode argmax + alpha; returns (features, label argmax)
std::pair<std::vector<double>, std::size_t> decode_row(const RowCodec& codec,
                                                       std::span<const double> encoded);

// one-hot condition over class IDs
struct CondVector {
    std::size_t class_id = 0;
    std::size_t n_classes = 0;

    std::vector<double> one_hot() const {
        std::vector<double> v(n_classes, 0.0);
        v[class_id] = 1.0;
        return v;
    }
};

enum class CondStrategy { LogFrequency, UniformOver };

// Training-by-sampling: pick a class (log-frequency over counts, or uniform
// over a restricted set), then a uniform real row of that class.
class CondSampler {
public:
    CondSampler(const std::vector<std::size_t>& labels, std::size_t n_classes,
                CondStrategy strategy, const std::set<std::size_t>& restrict_to = {});

    std::pair<CondVector, std::size_t> sample(Rng& rng) const;
    double class_probability(std::size_t class_id) const;

private:
    std::size_t n_classes_;
    std::vector<std::vector<std::size_t>> rows_by_class_;
    std::vector<std::size_t> eligible_;
    std::vector<double> cumulative_;
};

struct CtganConfig {
    std::size_t noise_dim = 128;
    std::vector<std::size_t> generator_hidden = {256, 256};
    std::vector<std::size_t> discriminator_hidden = {256, 256};
    double discriminator_dropout = 0.5;
    std::size_t epochs = 700;
    std::size_t batch_size = 64;
    AdamConfig adam = gan_adam_config();
    std::uint64_t seed = 0;
    // diagnostic switch: keep the generator frozen and train only the
    // discriminator (used by the separability check)
    bool train_generator = true;
};

struct CtganHistory {
    std::vector<double> d_loss;  // per-epoch means
    std::vector<double> g_loss;
};

struct Ctgan {
    RowCodec codec;
    Mlp generator;
    Mlp discriminator;
    CtganConfig config;
    CtganHistory history;
};

// Adversarial training: per batch, sample cond vectors with matching real
// rows; the discriminator minimizes real-vs-fake binary cross-entropy and the
// generator minimizes -log D(fake) plus a cross-entropy term tying its label
// group to the cond vector. Discrete groups stay soft during training; hard
// sampling happens only at generation. Throws TrainingError if a loss goes
// non-finite.
Ctgan train_ctgan(const Dataset& train, RowCodec codec, const CtganConfig& cfg);

// n rows conditioned on class_id, decoded through the codec; the label comes
// from the cond vector by construction
Dataset ctgan_generate(const Ctgan& model, std::size_t class_id, std::size_t n, Rng& rng);

// raw encoded generator outputs (kept soft), for well-formedness checks
Matrix ctgan_generate_encoded(const Ctgan& model, std::size_t class_id, std::size_t n,
                              Rng& rng);

nlohmann::json ctgan_to_json(const Ctgan& model);
Ctgan ctgan_from_json(const nlohmann::json& j);

}  // namespace ctgsm
