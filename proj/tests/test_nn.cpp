#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "ctgsm/errors.hpp"
#include "ctgsm/nn.hpp"

using namespace ctgsm;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (double& v : m.values()) v = scale * rng.normal();
    return m;
}

Matrix random_probs(std::size_t r, std::size_t c, Rng& rng) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            m(i, j) = std::exp(rng.normal());
            sum += m(i, j);
        }
        for (std::size_t j = 0; j < c; ++j) m(i, j) /= sum;
    }
    return m;
}

std::vector<std::size_t> random_targets(std::size_t n, std::size_t c, Rng& rng) {
    std::vector<std::size_t> t(n);
    for (auto& v : t) v = rng.uniform_index(c);
    return t;
}

// central finite-difference gradient of `loss_of_net` w.r.t. every parameter;
// compares against the analytic gradients. Near-zero pairs are treated as
// matching since the finite-difference noise floor dominates there.
double max_gradient_rel_error(Mlp& net, const std::function<double()>& loss_of_net,
                              const MlpGradients& analytic, double h = 1e-5) {
    double worst = 0.0;
    auto probe = [&](double& param, double analytic_g) {
        const double saved = param;
        param = saved + h;
        const double up = loss_of_net();
        param = saved - h;
        const double down = loss_of_net();
        param = saved;
        const double numeric = (up - down) / (2.0 * h);
        if (std::abs(numeric) < 1e-7 && std::abs(analytic_g) < 1e-7) return;
        worst = std::max(worst,
                         std::abs(numeric - analytic_g) / (std::abs(numeric) +
                                                           std::abs(analytic_g)));
    };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& w = net.layers[l].weights.values();
        for (std::size_t i = 0; i < w.size(); ++i) probe(w[i], analytic.weights[l].values()[i]);
        auto& b = net.layers[l].bias;
        for (std::size_t i = 0; i < b.size(); ++i) probe(b[i], analytic.biases[l][i]);
    }
    return worst;
}

}  // namespace

TEST_CASE("identity layer passes the batch through") {
    Mlp net;
    DenseLayer layer;
    layer.weights = Matrix(3, 3);
    for (std::size_t i = 0; i < 3; ++i) layer.weights(i, i) = 1.0;
    layer.bias.assign(3, 0.0);
    layer.activation = Activation::Identity;
    net.layers.push_back(layer);

    Rng rng(1);
    const Matrix batch = random_matrix(4, 3, rng);
    CHECK(forward(net, batch, false).output == batch);
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(2);
    Mlp net = make_mlp(5, {{8, Activation::Relu, 0.0}, {4, Activation::Softmax, 0.0}}, rng);
    const Matrix out = forward(net, random_matrix(16, 5, rng), false).output;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < out.cols(); ++j) {
            sum += out(i, j);
            CHECK(out(i, j) >= 0.0);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("zero dropout makes training and inference identical") {
    Rng rng(3);
    Mlp net = make_mlp(6, {{10, Activation::Tanh, 0.0}, {3, Activation::Softmax, 0.0}}, rng);
    const Matrix batch = random_matrix(8, 6, rng);
    Rng drop(99);
    CHECK(forward(net, batch, true, &drop).output == forward(net, batch, false).output);
}

TEST_CASE("inverted dropout is unbiased in expectation") {
    Rng rng(4);
    Mlp net = make_mlp(4, {{6, Activation::Tanh, 0.5}, {2, Activation::Identity, 0.0}}, rng);
    const Matrix batch = random_matrix(1, 4, rng);
    const Matrix reference = forward(net, batch, false).output;

    const std::size_t draws = 20000;
    Rng drop(5);
    std::vector<double> sums(2, 0.0), sq(2, 0.0);
    for (std::size_t d = 0; d < draws; ++d) {
        const Matrix out = forward(net, batch, true, &drop).output;
        for (std::size_t j = 0; j < 2; ++j) {
            sums[j] += out(0, j);
            sq[j] += out(0, j) * out(0, j);
        }
    }
    for (std::size_t j = 0; j < 2; ++j) {
        const double mean = sums[j] / static_cast<double>(draws);
        const double var = sq[j] / static_cast<double>(draws) - mean * mean;
        const double se = std::sqrt(var / static_cast<double>(draws));
        CHECK(std::abs(mean - reference(0, j)) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("focal loss with gamma 0 alpha 1 is cross-entropy") {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(32), c = 2 + rng.uniform_index(8);
        const Matrix probs = random_probs(n, c, rng);
        const auto targets = random_targets(n, c, rng);
        const auto focal = focal_loss(probs, targets, {1.0, 0.0});
        const auto ce = cross_entropy_loss(probs, targets);
        CHECK(std::abs(focal.loss - ce.loss) <= 1e-12);
        for (std::size_t i = 0; i < focal.logit_gradient.values().size(); ++i) {
            CHECK(std::abs(focal.logit_gradient.values()[i] - ce.logit_gradient.values()[i]) <=
                  1e-12);
        }
    }
}

TEST_CASE("focal loss closed-form values") {
    // p=0.5, alpha=0.25, gamma=2 -> -0.25 * 0.25 * ln(0.5)
    Matrix probs(1, 2);
    probs(0, 0) = 0.5;
    probs(0, 1) = 0.5;
    const auto fl = focal_loss(probs, {0}, {0.25, 2.0});
    CHECK(fl.loss == doctest::Approx(0.043321698784996581).epsilon(1e-12));

    // perfect predictions cost nothing
    Matrix perfect(3, 2);
    for (std::size_t i = 0; i < 3; ++i) perfect(i, 1) = 1.0;
    CHECK(focal_loss(perfect, {1, 1, 1}, {1.0, 2.0}).loss == doctest::Approx(0.0));

    Matrix bad(1, 2);
    bad(0, 0) = 1.0;
    CHECK_THROWS_AS(focal_loss(bad, {5}, {1.0, 2.0}), TrainingError);
}

TEST_CASE("focal logit gradients are bounded by alpha(1+gamma)") {
    Rng rng(7);
    for (const double gamma : {0.0, 0.5, 1.0, 2.0, 5.0}) {
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t n = 1 + rng.uniform_index(16), c = 2 + rng.uniform_index(6);
            const Matrix probs = random_probs(n, c, rng);
            const auto targets = random_targets(n, c, rng);
            const double alpha = 0.1 + rng.uniform(0.0, 2.0);
            const auto fl = focal_loss(probs, targets, {alpha, gamma});
            for (double g : fl.logit_gradient.values()) {
                CHECK(std::abs(g) <= alpha * (1.0 + gamma) + 1e-12);
            }
        }
    }
}

TEST_CASE("cross-entropy closed forms") {
    const std::size_t c = 7;
    Matrix uniform(4, c, 1.0 / static_cast<double>(c));
    const auto loss = cross_entropy_loss(uniform, {0, 1, 2, 3});
    CHECK(loss.loss == doctest::Approx(std::log(static_cast<double>(c))).epsilon(1e-12));

    Matrix onehot(2, 3);
    onehot(0, 1) = 1.0;
    onehot(1, 2) = 1.0;
    CHECK(cross_entropy_loss(onehot, {1, 2}).loss <= 1e-10);
}

TEST_CASE("zero output gradient yields zero parameter gradients") {
    Rng rng(8);
    Mlp net = make_mlp(5, {{7, Activation::Relu, 0.0}, {3, Activation::Softmax, 0.0}}, rng);
    const auto fwd = forward(net, random_matrix(6, 5, rng), false);
    const auto back = backward(net, fwd.cache, Matrix(6, 3));
    for (const auto& w : back.grads.weights) {
        for (double v : w.values()) CHECK(v == 0.0);
    }
}

TEST_CASE("single linear layer gradient equals the finite-difference oracle") {
    Rng rng(9);
    Mlp net = make_mlp(4, {{1, Activation::Identity, 0.0}}, rng);
    const Matrix x = random_matrix(10, 4, rng);
    const Matrix target = random_matrix(10, 1, rng);

    auto loss_fn = [&] {
        const Matrix out = forward(net, x, false).output;
        double acc = 0.0;
        for (std::size_t i = 0; i < out.rows(); ++i) {
            acc += 0.5 * (out(i, 0) - target(i, 0)) * (out(i, 0) - target(i, 0));
        }
        return acc / static_cast<double>(out.rows());
    };
    const auto fwd = forward(net, x, false);
    Matrix out_grad(10, 1);
    for (std::size_t i = 0; i < 10; ++i) {
        out_grad(i, 0) = (fwd.output(i, 0) - target(i, 0)) / 10.0;
    }
    const auto back = backward(net, fwd.cache, out_grad);
    CHECK(max_gradient_rel_error(net, loss_fn, back.grads) < 1e-6);
}

TEST_CASE("focal-loss networks pass the gradient check") {
    Rng rng(10);
    const std::vector<std::vector<LayerSpec>> shapes = {
        {{8, Activation::Relu, 0.0}, {4, Activation::Softmax, 0.0}},
        {{10, Activation::Tanh, 0.0}, {6, Activation::LeakyRelu, 0.0},
         {3, Activation::Softmax, 0.0}},
        {{16, Activation::Relu, 0.0}, {8, Activation::Relu, 0.0},
         {6, Activation::Softmax, 0.0}},
    };
    for (std::size_t s = 0; s < shapes.size(); ++s) {
        const std::size_t in_dim = 4 + s * 3;
        Mlp net = make_mlp(in_dim, shapes[s], rng);
        const Matrix x = random_matrix(5, in_dim, rng);
        const auto targets = random_targets(5, net.output_dim(), rng);
        const FocalLossConfig cfg{1.0, 2.0};

        auto loss_fn = [&] {
            return focal_loss(forward(net, x, false).output, targets, cfg).loss;
        };
        const auto fwd = forward(net, x, false);
        const auto loss = focal_loss(fwd.output, targets, cfg);
        const auto back = backward(net, fwd.cache, loss.logit_gradient);
        CHECK(max_gradient_rel_error(net, loss_fn, back.grads) < 1e-4);
    }
}

TEST_CASE("bce-with-logits matches its finite-difference oracle") {
    Rng rng(11);
    Mlp net = make_mlp(6, {{8, Activation::LeakyRelu, 0.0}, {1, Activation::Identity, 0.0}},
                       rng);
    const Matrix x = random_matrix(7, 6, rng);
    std::vector<double> targets(7);
    for (auto& t : targets) t = rng.uniform() < 0.5 ? 0.0 : 1.0;

    auto loss_fn = [&] { return bce_with_logits(forward(net, x, false).output, targets).loss; };
    const auto fwd = forward(net, x, false);
    const auto loss = bce_with_logits(fwd.output, targets);
    const auto back = backward(net, fwd.cache, loss.logit_gradient);
    CHECK(max_gradient_rel_error(net, loss_fn, back.grads) < 1e-4);
}

TEST_CASE("adam fixed point, limit step size and step counting") {
    Rng rng(12);
    Mlp net = make_mlp(3, {{2, Activation::Identity, 0.0}}, rng);
    const Mlp before = net;
    AdamState state = make_adam_state(net, {});

    MlpGradients zero;
    zero.weights.emplace_back(3, 2);
    zero.biases.emplace_back(2, 0.0);
    adam_step(net, zero, state);
    CHECK(state.step == 1);
    CHECK(net.layers[0].weights == before.layers[0].weights);
    CHECK(net.layers[0].bias == before.layers[0].bias);

    // constant gradient: per-step movement approaches lr * sign(g)
    MlpGradients constant = zero;
    for (double& v : constant.weights[0].values()) v = 0.37;
    double prev = net.layers[0].weights(0, 0);
    for (int i = 0; i < 200; ++i) adam_step(net, constant, state);
    const double step_size = prev - net.layers[0].weights(0, 0);
    CHECK(step_size / 200.0 == doctest::Approx(state.config.lr).epsilon(1e-3));
    CHECK(state.step == 201);
}

TEST_CASE("training updates are bit-reproducible for a fixed seed") {
    auto run_once = [] {
        Rng rng(77);
        Mlp net = make_mlp(4, {{6, Activation::Relu, 0.2}, {3, Activation::Softmax, 0.0}},
                           rng);
        AdamState state = make_adam_state(net, {});
        Rng data_rng(5);
        Rng drop(9);
        for (int step = 0; step < 25; ++step) {
            const Matrix x = random_matrix(8, 4, data_rng);
            const auto targets = random_targets(8, 3, data_rng);
            auto fwd = forward(net, x, true, &drop);
            const auto loss = focal_loss(fwd.output, targets, {1.0, 2.0});
            auto back = backward(net, fwd.cache, loss.logit_gradient);
            adam_step(net, back.grads, state);
        }
        return net;
    };
    const Mlp a = run_once();
    const Mlp b = run_once();
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        CHECK(a.layers[l].weights == b.layers[l].weights);
        CHECK(a.layers[l].bias == b.layers[l].bias);
    }
}

TEST_CASE("mlp snapshot round trips exactly") {
    Rng rng(13);
    const Mlp net = make_mlp(
        5, {{7, Activation::LeakyRelu, 0.3}, {4, Activation::Softmax, 0.0}}, rng);
    const Mlp loaded = mlp_from_json(mlp_to_json(net));
    REQUIRE(loaded.layers.size() == net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        CHECK(loaded.layers[l].weights == net.layers[l].weights);
        CHECK(loaded.layers[l].bias == net.layers[l].bias);
        CHECK(loaded.layers[l].activation == net.layers[l].activation);
        CHECK(loaded.layers[l].dropout_p == net.layers[l].dropout_p);
    }
}

TEST_CASE("structural validation catches bad networks") {
    Rng rng(14);
    // softmax anywhere but the final layer is rejected at construction
    CHECK_THROWS_AS(
        make_mlp(4, {{5, Activation::Softmax, 0.0}, {3, Activation::Identity, 0.0}}, rng),
        TrainingError);
    Mlp ok = make_mlp(4, {{5, Activation::Relu, 0.0}}, rng);
    CHECK_THROWS_AS(forward(ok, Matrix(2, 7), false), TrainingError);
}
