#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctgsm/matrix.hpp"
#include "ctgsm/rng.hpp"

namespace ctgsm {

enum class Activation { Identity, Relu, LeakyRelu, Tanh, Sigmoid, Softmax };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// y = f(x W + b), with inverted dropout on the activation when training.
// Weight matrix is (in_dim x out_dim).
struct DenseLayer {
    Matrix weights;
    std::vector<double> bias;
    Activation activation = Activation::Identity;
    double dropout_p = 0.0;

    std::size_t in_dim() const { return weights.rows(); }
    std::size_t out_dim() const { return weights.cols(); }
};

struct Mlp {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }
    // adjacent dimensions must chain; softmax only as the final activation
    void validate() const;
};

struct LayerSpec {
    std::size_t size;
    Activation activation;
    double dropout_p = 0.0;
};

// He initialization for relu family, Xavier otherwise, seeded via rng
Mlp make_mlp(std::size_t input_dim, const std::vector<LayerSpec>& layers, Rng& rng);

// --- forward / backward ------------------------------------------------------

struct ForwardCache {
    Matrix input;
    std::vector<Matrix> preact;      // z_l
    std::vector<Matrix> act;         // f(z_l), before dropout
    std::vector<Matrix> mask;        // inverted-dropout masks, empty when unused
    bool training = false;
};

struct ForwardResult {
    Matrix output;
    ForwardCache cache;
};

// Inverted dropout scales by 1/(1-p) at train time, so inference needs no
// correction. rng is only touched when training and some dropout_p > 0.
ForwardResult forward(const Mlp& net, const Matrix& batch, bool training, Rng* rng = nullptr);

struct MlpGradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

struct BackwardResult {
    MlpGradients grads;
    Matrix input_gradient;
};

// Reverse-mode pass. When the final activation is softmax, output_gradient is
// interpreted as the gradient w.r.t. the final pre-activation (the loss
// functions below fold the softmax derivative in); otherwise it is the
// gradient w.r.t. the network output.
BackwardResult backward(const Mlp& net, const ForwardCache& cache,
                        const Matrix& output_gradient);

// --- losses --------------------------------------------------------------------

struct FocalLossConfig {
    double alpha = 1.0;
    double gamma = 2.0;
};

struct LossResult {
    double loss;
    Matrix logit_gradient;  // w.r.t. pre-softmax logits, averaged over the batch
};

// FL = -alpha (1 - p)^gamma log(p) with p the probability of the true class,
// floored at 1e-12. Gradient is taken through the composed softmax.
LossResult focal_loss(const Matrix& probs, const std::vector<std::size_t>& targets,
                      const FocalLossConfig& cfg);

// plain categorical cross-entropy; implemented directly so it doubles as an
// independent check of the focal path at alpha=1, gamma=0
LossResult cross_entropy_loss(const Matrix& probs, const std::vector<std::size_t>& targets);

// binary cross-entropy over raw scores (n x 1 logits), numerically stable
LossResult bce_with_logits(const Matrix& logits, const std::vector<double>& targets);

// --- Adam -----------------------------------------------------------------------

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// the settings used for adversarial training
inline AdamConfig gan_adam_config() { return {2e-4, 0.5, 0.9, 1e-8}; }

struct AdamState {
    std::vector<Matrix> m_weights, v_weights;
    std::vector<std::vector<double>> m_biases, v_biases;
    std::size_t step = 0;
    AdamConfig config;
};

AdamState make_adam_state(const Mlp& net, const AdamConfig& config);
void adam_step(Mlp& net, const MlpGradients& grads, AdamState& state);

// --- snapshots --------------------------------------------------------------------

nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace ctgsm
