#include "ctgsm/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ctgsm/errors.hpp"

namespace ctgsm {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_normal_pdf(double x, double mean, double var) {
    const double diff = x - mean;
    return -0.5 * (kLog2Pi + std::log(var) + diff * diff / var);
}

// log(sum_k exp(v_k)) with the usual max shift
double log_sum_exp(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - m);
    return m + std::log(acc);
}

// per-sample log joint terms log(pi_k) + log N(x|...)
void log_joint(const Gmm& g, double x, std::vector<double>& out) {
    out.resize(g.n_components());
    for (std::size_t k = 0; k < g.n_components(); ++k) {
        out[k] = g.weights[k] > 0.0
                     ? std::log(g.weights[k]) + log_normal_pdf(x, g.means[k], g.variances[k])
                     : -std::numeric_limits<double>::infinity();
    }
}

}  // namespace

Gmm fit_gmm(const std::vector<double>& values, std::size_t n_components,
            const GmmFitOptions& options) {
    const std::size_t n = values.size();
    const std::size_t K = n_components;
    if (K < 1) throw DataError("gmm: need at least one component");
    if (n < K) throw DataError("gmm: fewer samples than components");

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var = std::max(var / static_cast<double>(n), kVarianceFloor);

    Gmm g;
    g.weights.assign(K, 1.0 / static_cast<double>(K));
    g.variances.assign(K, var);
    g.means.resize(K);

    // distinct sample indices for the initial means
    Rng rng(options.seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t k = 0; k < K; ++k) g.means[k] = values[order[k]];

    std::vector<double> joint(K);
    std::vector<double> resp(n * K);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
        // E step
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            log_joint(g, values[i], joint);
            const double norm = log_sum_exp(joint);
            ll += norm;
            for (std::size_t k = 0; k < K; ++k) {
                resp[i * K + k] = std::exp(joint[k] - norm);
            }
        }
        if (options.log_likelihood_history) options.log_likelihood_history->push_back(ll);

        // M step
        for (std::size_t k = 0; k < K; ++k) {
            double mass = 0.0, mu_acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                mass += resp[i * K + k];
                mu_acc += resp[i * K + k] * values[i];
            }
            if (mass < 1e-300) {
                // collapsed component: keep parameters, zero its weight
                g.weights[k] = 0.0;
                continue;
            }
            g.weights[k] = mass / static_cast<double>(n);
            const double mu = mu_acc / mass;
            double var_acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double diff = values[i] - mu;
                var_acc += resp[i * K + k] * diff * diff;
            }
            g.means[k] = mu;
            g.variances[k] = std::max(var_acc / mass, kVarianceFloor);
        }

        if (std::isfinite(prev_ll)) {
            const double rel = (ll - prev_ll) / (std::abs(prev_ll) + 1e-12);
            if (rel < options.tol) break;
        }
        prev_ll = ll;
    }
    return g;
}

double gmm_pdf(const Gmm& g, double x) {
    std::vector<double> joint;
    log_joint(g, x, joint);
    const double lse = log_sum_exp(joint);
    return std::isfinite(lse) ? std::exp(lse) : 0.0;
}

double gmm_log_likelihood(const Gmm& g, const std::vector<double>& values) {
    std::vector<double> joint;
    double ll = 0.0;
    for (double x : values) {
        log_joint(g, x, joint);
        ll += log_sum_exp(joint);
    }
    return ll;
}

std::vector<double> gmm_posterior(const Gmm& g, double x) {
    std::vector<double> joint;
    log_joint(g, x, joint);
    const double norm = log_sum_exp(joint);
    std::vector<double> post(g.n_components(), 0.0);
    if (!std::isfinite(norm)) {
        // all components underflow: fall back to the nearest mean
        std::size_t best = 0;
        for (std::size_t k = 1; k < g.n_components(); ++k) {
            if (std::abs(x - g.means[k]) < std::abs(x - g.means[best])) best = k;
        }
        post[best] = 1.0;
        return post;
    }
    for (std::size_t k = 0; k < g.n_components(); ++k) {
        post[k] = std::exp(joint[k] - norm);
    }
    return post;
}

ModeEncoding encode_value(const Gmm& g, double x, Rng& rng, bool deterministic) {
    const auto post = gmm_posterior(g, x);
    std::size_t mode = 0;
    if (deterministic) {
        mode = static_cast<std::size_t>(
            std::max_element(post.begin(), post.end()) - post.begin());
    } else {
        const double u = rng.uniform();
        double acc = 0.0;
        mode = g.n_components() - 1;
        for (std::size_t k = 0; k < g.n_components(); ++k) {
            acc += post[k];
            if (u < acc) {
                mode = k;
                break;
            }
        }
    }
    const double sigma = std::sqrt(g.variances[mode]);
    const double alpha = std::clamp((x - g.means[mode]) / (4.0 * sigma), -1.0, 1.0);
    return {mode, alpha};
}

double decode_value(const Gmm& g, const ModeEncoding& enc) {
    const double sigma = std::sqrt(g.variances[enc.mode]);
    return g.means[enc.mode] + 4.0 * sigma * enc.alpha;
}

}  // namespace ctgsm
