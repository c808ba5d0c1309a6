#include "ctgsm/nn.hpp"

#include <algorithm>
#include <cmath>

#include "ctgsm/errors.hpp"
#include "ctgsm/parallel.hpp"

namespace ctgsm {
namespace {

constexpr double kLeakySlope = 0.2;
constexpr double kProbFloor = 1e-12;

void apply_activation(Activation a, Matrix& m) {
    switch (a) {
        case Activation::Identity:
            return;
        case Activation::Relu:
            for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
            return;
        case Activation::LeakyRelu:
            for (double& v : m.values()) v = v > 0.0 ? v : kLeakySlope * v;
            return;
        case Activation::Tanh:
            for (double& v : m.values()) v = std::tanh(v);
            return;
        case Activation::Sigmoid:
            for (double& v : m.values()) v = 1.0 / (1.0 + std::exp(-v));
            return;
        case Activation::Softmax:
            for (std::size_t i = 0; i < m.rows(); ++i) {
                auto row = m.row(i);
                double mx = row[0];
                for (double v : row) mx = std::max(mx, v);
                double sum = 0.0;
                for (double& v : row) {
                    v = std::exp(v - mx);
                    sum += v;
                }
                for (double& v : row) v /= sum;
            }
            return;
    }
}

// dZ = dA * f'(z), using whichever of preact/act makes the derivative cheap
void apply_activation_gradient(Activation a, const Matrix& preact, const Matrix& act,
                               Matrix& grad) {
    switch (a) {
        case Activation::Identity:
            return;
        case Activation::Relu:
            for (std::size_t i = 0; i < grad.values().size(); ++i) {
                if (preact.values()[i] <= 0.0) grad.values()[i] = 0.0;
            }
            return;
        case Activation::LeakyRelu:
            for (std::size_t i = 0; i < grad.values().size(); ++i) {
                if (preact.values()[i] <= 0.0) grad.values()[i] *= kLeakySlope;
            }
            return;
        case Activation::Tanh:
            for (std::size_t i = 0; i < grad.values().size(); ++i) {
                const double t = act.values()[i];
                grad.values()[i] *= 1.0 - t * t;
            }
            return;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < grad.values().size(); ++i) {
                const double s = act.values()[i];
                grad.values()[i] *= s * (1.0 - s);
            }
            return;
        case Activation::Softmax:
            throw TrainingError("softmax gradient must be folded into the loss");
    }
}

}  // namespace

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::LeakyRelu: return "leaky_relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softmax: return "softmax";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "leaky_relu") return Activation::LeakyRelu;
    if (name == "tanh") return Activation::Tanh;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "softmax") return Activation::Softmax;
    throw DataError("unknown activation: " + name);
}

void Mlp::validate() const {
    if (layers.empty()) throw TrainingError("mlp has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (layer.bias.size() != layer.out_dim()) {
            throw TrainingError("bias width mismatch at layer " + std::to_string(l));
        }
        if (l > 0 && layers[l - 1].out_dim() != layer.in_dim()) {
            throw TrainingError("layer dimensions do not chain at layer " + std::to_string(l));
        }
        if (layer.activation == Activation::Softmax && l + 1 != layers.size()) {
            throw TrainingError("softmax is only allowed as the final activation");
        }
        if (!(layer.dropout_p >= 0.0 && layer.dropout_p < 1.0)) {
            throw TrainingError("dropout_p must lie in [0,1)");
        }
    }
}

Mlp make_mlp(std::size_t input_dim, const std::vector<LayerSpec>& specs, Rng& rng) {
    Mlp net;
    std::size_t fan_in = input_dim;
    for (const auto& spec : specs) {
        DenseLayer layer;
        layer.weights = Matrix(fan_in, spec.size);
        layer.bias.assign(spec.size, 0.0);
        layer.activation = spec.activation;
        layer.dropout_p = spec.dropout_p;
        const bool he = spec.activation == Activation::Relu ||
                        spec.activation == Activation::LeakyRelu;
        const double scale = he ? std::sqrt(2.0 / static_cast<double>(fan_in))
                                : std::sqrt(1.0 / static_cast<double>(fan_in));
        for (double& w : layer.weights.values()) w = scale * rng.normal();
        net.layers.push_back(std::move(layer));
        fan_in = spec.size;
    }
    net.validate();
    return net;
}

ForwardResult forward(const Mlp& net, const Matrix& batch, bool training, Rng* rng) {
    if (batch.cols() != net.input_dim()) {
        throw TrainingError("batch width " + std::to_string(batch.cols()) +
                            " does not match input dim " + std::to_string(net.input_dim()));
    }
    ForwardResult res;
    res.cache.input = batch;
    res.cache.training = training;
    res.cache.preact.reserve(net.layers.size());
    res.cache.act.reserve(net.layers.size());
    res.cache.mask.resize(net.layers.size());

    const Matrix* x = &res.cache.input;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        Matrix z = matmul(*x, layer.weights);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            auto row = z.row(i);
            for (std::size_t j = 0; j < row.size(); ++j) row[j] += layer.bias[j];
        }
        res.cache.preact.push_back(z);
        apply_activation(layer.activation, z);

        if (training && layer.dropout_p > 0.0) {
            if (!rng) throw TrainingError("dropout requires an rng in training mode");
            const double keep = 1.0 - layer.dropout_p;
            Matrix mask(z.rows(), z.cols());
            for (double& m : mask.values()) {
                m = rng->uniform() < keep ? 1.0 / keep : 0.0;
            }
            for (std::size_t i = 0; i < z.values().size(); ++i) {
                z.values()[i] *= mask.values()[i];
            }
            res.cache.mask[l] = std::move(mask);
        }
        res.cache.act.push_back(std::move(z));
        x = &res.cache.act.back();
    }
    res.output = res.cache.act.back();
    return res;
}

BackwardResult backward(const Mlp& net, const ForwardCache& cache,
                        const Matrix& output_gradient) {
    const std::size_t L = net.layers.size();
    if (cache.act.size() != L) throw TrainingError("stale forward cache");

    BackwardResult res;
    res.grads.weights.resize(L);
    res.grads.biases.resize(L);

    Matrix dz = output_gradient;
    for (std::size_t l = L; l-- > 0;) {
        const auto& layer = net.layers[l];
        if (l + 1 == L) {
            // softmax is fused into the loss gradient; everything else chains
            if (layer.activation != Activation::Softmax) {
                apply_activation_gradient(layer.activation, cache.preact[l], cache.act[l], dz);
            }
        }

        const Matrix& layer_input = l == 0 ? cache.input : cache.act[l - 1];
        res.grads.weights[l] = matmul_tn(layer_input, dz);
        auto& db = res.grads.biases[l];
        db.assign(layer.out_dim(), 0.0);
        for (std::size_t i = 0; i < dz.rows(); ++i) {
            const auto row = dz.row(i);
            for (std::size_t j = 0; j < row.size(); ++j) db[j] += row[j];
        }

        Matrix dx = matmul_nt(dz, layer.weights);
        if (l == 0) {
            res.input_gradient = std::move(dx);
            break;
        }
        // previous layer: undo its dropout, then its activation
        if (!cache.mask[l - 1].empty()) {
            for (std::size_t i = 0; i < dx.values().size(); ++i) {
                dx.values()[i] *= cache.mask[l - 1].values()[i];
            }
        }
        apply_activation_gradient(net.layers[l - 1].activation, cache.preact[l - 1],
                                  cache.act[l - 1], dx);
        dz = std::move(dx);
    }
    return res;
}

LossResult focal_loss(const Matrix& probs, const std::vector<std::size_t>& targets,
                      const FocalLossConfig& cfg) {
    const std::size_t n = probs.rows(), c = probs.cols();
    if (targets.size() != n) throw TrainingError("focal loss: target length mismatch");
    const double inv_n = 1.0 / static_cast<double>(n);

    LossResult res;
    res.loss = 0.0;
    res.logit_gradient = Matrix(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t t = targets[i];
        if (t >= c) throw TrainingError("focal loss: target out of range");
        const double p = std::max(probs(i, t), kProbFloor);
        const double u = 1.0 - p;
        res.loss += -cfg.alpha * std::pow(u, cfg.gamma) * std::log(p);

        // dL/dz_j = coeff * (delta_tj - p_j), with
        // coeff = alpha (1-p)^(gamma-1) [gamma p log p - (1-p)]
        double coeff;
        if (cfg.gamma == 0.0) {
            coeff = -cfg.alpha;
        } else if (u < 1e-15) {
            coeff = 0.0;  // limit of u^gamma terms as p -> 1
        } else {
            coeff = cfg.alpha * (cfg.gamma * p * std::log(p) * std::pow(u, cfg.gamma - 1.0) -
                                 std::pow(u, cfg.gamma));
        }
        for (std::size_t j = 0; j < c; ++j) {
            const double indicator = j == t ? 1.0 : 0.0;
            res.logit_gradient(i, j) = coeff * (indicator - probs(i, j)) * inv_n;
        }
    }
    res.loss *= inv_n;
    return res;
}

LossResult cross_entropy_loss(const Matrix& probs, const std::vector<std::size_t>& targets) {
    const std::size_t n = probs.rows(), c = probs.cols();
    if (targets.size() != n) throw TrainingError("cross entropy: target length mismatch");
    const double inv_n = 1.0 / static_cast<double>(n);

    LossResult res;
    res.loss = 0.0;
    res.logit_gradient = Matrix(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t t = targets[i];
        if (t >= c) throw TrainingError("cross entropy: target out of range");
        res.loss += -std::log(std::max(probs(i, t), kProbFloor));
        for (std::size_t j = 0; j < c; ++j) {
            const double indicator = j == t ? 1.0 : 0.0;
            res.logit_gradient(i, j) = (probs(i, j) - indicator) * inv_n;
        }
    }
    res.loss *= inv_n;
    return res;
}

LossResult bce_with_logits(const Matrix& logits, const std::vector<double>& targets) {
    const std::size_t n = logits.rows();
    if (logits.cols() != 1) throw TrainingError("bce: expected a single score column");
    if (targets.size() != n) throw TrainingError("bce: target length mismatch");
    const double inv_n = 1.0 / static_cast<double>(n);

    LossResult res;
    res.loss = 0.0;
    res.logit_gradient = Matrix(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = logits(i, 0);
        const double y = targets[i];
        // max(z,0) - z*y + log(1 + exp(-|z|))
        res.loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
        const double sigma = 1.0 / (1.0 + std::exp(-z));
        res.logit_gradient(i, 0) = (sigma - y) * inv_n;
    }
    res.loss *= inv_n;
    return res;
}

AdamState make_adam_state(const Mlp& net, const AdamConfig& config) {
    AdamState state;
    state.config = config;
    for (const auto& layer : net.layers) {
        state.m_weights.emplace_back(layer.in_dim(), layer.out_dim());
        state.v_weights.emplace_back(layer.in_dim(), layer.out_dim());
        state.m_biases.emplace_back(layer.out_dim(), 0.0);
        state.v_biases.emplace_back(layer.out_dim(), 0.0);
    }
    return state;
}

void adam_step(Mlp& net, const MlpGradients& grads, AdamState& state) {
    if (grads.weights.size() != net.layers.size()) {
        throw TrainingError("adam: gradient layer count mismatch");
    }
    ++state.step;
    const auto& cfg = state.config;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& w = net.layers[l].weights.values();
        const auto& gw = grads.weights[l].values();
        if (gw.size() != w.size()) throw TrainingError("adam: weight shape mismatch");
        auto& mw = state.m_weights[l].values();
        auto& vw = state.v_weights[l].values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            mw[i] = cfg.beta1 * mw[i] + (1.0 - cfg.beta1) * gw[i];
            vw[i] = cfg.beta2 * vw[i] + (1.0 - cfg.beta2) * gw[i] * gw[i];
            w[i] -= cfg.lr * (mw[i] / bc1) / (std::sqrt(vw[i] / bc2) + cfg.eps);
        }

        auto& b = net.layers[l].bias;
        const auto& gb = grads.biases[l];
        if (gb.size() != b.size()) throw TrainingError("adam: bias shape mismatch");
        auto& mb = state.m_biases[l];
        auto& vb = state.v_biases[l];
        for (std::size_t i = 0; i < b.size(); ++i) {
            mb[i] = cfg.beta1 * mb[i] + (1.0 - cfg.beta1) * gb[i];
            vb[i] = cfg.beta2 * vb[i] + (1.0 - cfg.beta2) * gb[i] * gb[i];
            b[i] -= cfg.lr * (mb[i] / bc1) / (std::sqrt(vb[i] / bc2) + cfg.eps);
        }
    }
}

nlohmann::json mlp_to_json(const Mlp& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        layers.push_back({{"in", layer.in_dim()},
                          {"out", layer.out_dim()},
                          {"activation", activation_name(layer.activation)},
                          {"dropout_p", layer.dropout_p},
                          {"weights", layer.weights.values()},
                          {"bias", layer.bias}});
    }
    return {{"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
    Mlp net;
    for (const auto& lj : j.at("layers")) {
        DenseLayer layer;
        const auto in = lj.at("in").get<std::size_t>();
        const auto out = lj.at("out").get<std::size_t>();
        layer.weights = Matrix(in, out);
        const auto values = lj.at("weights").get<std::vector<double>>();
        if (values.size() != in * out) throw DataError("mlp snapshot: weight size mismatch");
        std::copy(values.begin(), values.end(), layer.weights.values().begin());
        layer.bias = lj.at("bias").get<std::vector<double>>();
        layer.activation = activation_from_name(lj.at("activation").get<std::string>());
        layer.dropout_p = lj.at("dropout_p").get<double>();
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

}  // namespace ctgsm
