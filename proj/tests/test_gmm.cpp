#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ctgsm/errors.hpp"
#include "ctgsm/gmm.hpp"

using namespace ctgsm;

namespace {

// naive reference EM, linear-space, quantile init; independent of the
// implementation under test
Gmm reference_em(const std::vector<double>& values, std::size_t k, std::size_t iters) {
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    Gmm g;
    g.weights.assign(k, 1.0 / static_cast<double>(k));
    g.variances.assign(k, 1.0);
    for (std::size_t c = 0; c < k; ++c) {
        g.means.push_back(sorted[(2 * c + 1) * sorted.size() / (2 * k)]);
    }
    const std::size_t n = values.size();
    std::vector<double> resp(n * k);
    for (std::size_t it = 0; it < iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double total = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                const double d = values[i] - g.means[c];
                resp[i * k + c] = g.weights[c] / std::sqrt(6.2831853071795862 * g.variances[c]) *
                                  std::exp(-0.5 * d * d / g.variances[c]);
                total += resp[i * k + c];
            }
            for (std::size_t c = 0; c < k; ++c) resp[i * k + c] /= total;
        }
        for (std::size_t c = 0; c < k; ++c) {
            double mass = 0.0, mu = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                mass += resp[i * k + c];
                mu += resp[i * k + c] * values[i];
            }
            mu /= mass;
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                var += resp[i * k + c] * (values[i] - mu) * (values[i] - mu);
            }
            g.weights[c] = mass / static_cast<double>(n);
            g.means[c] = mu;
            g.variances[c] = std::max(var / mass, 1e-6);
        }
    }
    return g;
}

}  // namespace

TEST_CASE("single-component fit is the sample mean and variance") {
    const std::vector<double> values = {1.0, 2.0, 3.0, 4.0, 10.0};
    const Gmm g = fit_gmm(values, 1);
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= 5.0;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= 5.0;
    CHECK(g.means[0] == doctest::Approx(mean).epsilon(1e-12));
    CHECK(g.variances[0] == doctest::Approx(var).epsilon(1e-9));
    CHECK(g.weights[0] == doctest::Approx(1.0));

    // constant data collapses onto the variance floor instead of erroring
    const Gmm flat = fit_gmm({5.0, 5.0, 5.0, 5.0}, 2);
    for (double v : flat.variances) CHECK(v >= kVarianceFloor);
    CHECK_THROWS_AS(fit_gmm({1.0}, 2), DataError);
}

TEST_CASE("well-separated clusters are recovered, agreeing with a reference EM") {
    Rng rng(42);
    std::vector<double> values;
    for (int i = 0; i < 500; ++i) values.push_back(rng.normal(0.0, 1.0));
    for (int i = 0; i < 500; ++i) values.push_back(rng.normal(100.0, 1.0));

    GmmFitOptions options;
    options.seed = 3;
    const Gmm g = fit_gmm(values, 2, options);
    std::vector<double> means = g.means;
    std::sort(means.begin(), means.end());
    CHECK(std::abs(means[0] - 0.0) < 0.5);
    CHECK(std::abs(means[1] - 100.0) < 0.5);

    const Gmm ref = reference_em(values, 2, 100);
    std::vector<double> ref_means = ref.means;
    std::sort(ref_means.begin(), ref_means.end());
    CHECK(std::abs(means[0] - ref_means[0]) < 0.5);
    CHECK(std::abs(means[1] - ref_means[1]) < 0.5);
}

TEST_CASE("EM log-likelihood never decreases") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> values;
        const std::size_t n = 60 + rng.uniform_index(200);
        for (std::size_t i = 0; i < n; ++i) {
            values.push_back(rng.uniform() < 0.4 ? rng.normal(-2.0, 0.5)
                                                 : rng.normal(3.0, 2.0));
        }
        for (std::size_t k : {1ul, 2ul, 5ul}) {
            std::vector<double> history;
            GmmFitOptions options;
            options.seed = trial;
            options.log_likelihood_history = &history;
            fit_gmm(values, k, options);
            for (std::size_t i = 1; i < history.size(); ++i) {
                CHECK(history[i] >= history[i - 1] - 1e-9);
            }
        }
    }
}

TEST_CASE("weights stay on the probability simplex") {
    Rng rng(15);
    std::vector<double> values;
    for (int i = 0; i < 300; ++i) values.push_back(rng.normal(0.0, 2.0));
    for (std::size_t k : {2ul, 5ul, 10ul}) {
        GmmFitOptions options;
        options.seed = k;
        const Gmm g = fit_gmm(values, k, options);
        double sum = 0.0;
        for (double w : g.weights) {
            CHECK(w >= 0.0);
            sum += w;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        for (double v : g.variances) CHECK(v >= kVarianceFloor);
    }
}

TEST_CASE("pdf matches the standard normal at its mean") {
    Gmm g;
    g.weights = {1.0};
    g.means = {0.0};
    g.variances = {1.0};
    CHECK(gmm_pdf(g, 0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-9));
}

TEST_CASE("symmetric mixture component terms agree at the symmetry point") {
    Gmm g;
    g.weights = {0.5, 0.5};
    g.means = {-1.0, 1.0};
    g.variances = {0.8, 0.8};
    // each component contributes identically at 0
    const double component = 0.5 / std::sqrt(6.2831853071795862 * 0.8) *
                             std::exp(-0.5 / 0.8);
    CHECK(gmm_pdf(g, 0.0) == doctest::Approx(2.0 * component).epsilon(1e-12));
    const auto post = gmm_posterior(g, 0.0);
    CHECK(post[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(post[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("pdf is non-negative and integrates to one") {
    Rng rng(4);
    std::vector<double> values;
    for (int i = 0; i < 400; ++i) {
        values.push_back(rng.uniform() < 0.5 ? rng.normal(-1.0, 0.7) : rng.normal(4.0, 1.5));
    }
    GmmFitOptions options;
    options.seed = 9;
    const Gmm g = fit_gmm(values, 3, options);

    // trapezoidal quadrature over +-10 sigma around the extreme means
    double lo = 1e300, hi = -1e300, sigma_max = 0.0;
    for (std::size_t k = 0; k < g.n_components(); ++k) {
        lo = std::min(lo, g.means[k]);
        hi = std::max(hi, g.means[k]);
        sigma_max = std::max(sigma_max, std::sqrt(g.variances[k]));
    }
    lo -= 10.0 * sigma_max;
    hi += 10.0 * sigma_max;
    const std::size_t steps = 20000;
    const double h = (hi - lo) / static_cast<double>(steps);
    double integral = 0.0;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double x = lo + h * static_cast<double>(i);
        const double p = gmm_pdf(g, x);
        CHECK(p >= 0.0);
        integral += (i == 0 || i == steps) ? 0.5 * p : p;
    }
    integral *= h;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("posteriors sum to one and concentrate on the near mode") {
    Gmm g;
    g.weights = {0.5, 0.5};
    g.means = {0.0, 10.0};
    g.variances = {1.0, 1.0};
    const auto at_mode = gmm_posterior(g, 0.0);
    CHECK(at_mode[0] > 0.999);

    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto post = gmm_posterior(g, rng.uniform(-30.0, 40.0));
        double sum = 0.0;
        for (double p : post) sum += p;
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }

    Gmm single;
    single.weights = {1.0};
    single.means = {2.0};
    single.variances = {1.0};
    CHECK(gmm_posterior(single, 123.0)[0] == doctest::Approx(1.0));
}

TEST_CASE("encode centers, round trips and clamps") {
    Gmm g;
    g.weights = {0.5, 0.5};
    g.means = {0.0, 10.0};
    g.variances = {1.0, 4.0};
    Rng rng(2);

    // x at a mode mean encodes with alpha 0
    const auto at_mean = encode_value(g, 10.0, rng, true);
    CHECK(at_mean.mode == 1);
    CHECK(at_mean.alpha == doctest::Approx(0.0).epsilon(1e-12));

    // round trip inside the 4-sigma band
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(-3.9, 13.9);
        const auto enc = encode_value(g, x, rng);
        if (std::abs(enc.alpha) < 1.0) {
            CHECK(decode_value(g, enc) == doctest::Approx(x).epsilon(1e-9));
        }
    }

    // beyond 4 sigma of every mode: clamped, decode returns the band edge
    const auto clamped = encode_value(g, -100.0, rng, true);
    CHECK(std::abs(clamped.alpha) == 1.0);
    CHECK(decode_value(g, clamped) == doctest::Approx(g.means[clamped.mode] -
                                                      4.0 * std::sqrt(g.variances[clamped.mode])));
}
