#pragma once

#include <cstdint>
#include <vector>

#include "ctgsm/rng.hpp"

namespace ctgsm {

// Univariate Gaussian mixture: p(x) = sum_k pi_k N(x | mu_k, var_k).
// Weights stay on the probability simplex; variances are floored at
// kVarianceFloor so single-point components cannot collapse.
struct Gmm {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> variances;

    std::size_t n_components() const { return weights.size(); }
};

inline constexpr double kVarianceFloor = 1e-6;

// one continuous value as (mixture mode, scaled offset alpha in [-1,1])
struct ModeEncoding {
    std::size_t mode = 0;
    double alpha = 0.0;
};

struct GmmFitOptions {
    double tol = 1e-6;        // relative log-likelihood improvement
    std::size_t max_iter = 200;
    std::uint64_t seed = 0;
    // when set, receives the log-likelihood after each EM iteration
    std::vector<double>* log_likelihood_history = nullptr;
};

// EM estimate with means initialized from K distinct sample draws, variances
// from the global variance and uniform weights. Components whose
// responsibility mass vanishes keep zero weight rather than being re-fit.
Gmm fit_gmm(const std::vector<double>& values, std::size_t n_components,
            const GmmFitOptions& options = {});

double gmm_pdf(const Gmm& g, double x);
double gmm_log_likelihood(const Gmm& g, const std::vector<double>& values);

// responsibilities r_k = pi_k N(x|mu_k,var_k) / p(x), computed in log space
std::vector<double> gmm_posterior(const Gmm& g, double x);

// Mode sampled from the posterior (or argmax when deterministic);
// alpha = clamp((x - mu_k) / (4 sigma_k), -1, 1).
ModeEncoding encode_value(const Gmm& g, double x, Rng& rng, bool deterministic = false);
double decode_value(const Gmm& g, const ModeEncoding& enc);

}  // namespace ctgsm
