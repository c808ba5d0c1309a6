#include "ctgsm/projection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "ctgsm/errors.hpp"

namespace ctgsm {
namespace {

// cyclic Jacobi eigendecomposition of a symmetric matrix; returns
// (eigenvalues, eigenvectors as columns)
std::pair<std::vector<double>, Matrix> jacobi_eigen(Matrix a) {
    const std::size_t n = a.rows();
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    for (std::size_t sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        }
        if (off < 1e-24) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<double> eigenvalues(n);
    for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a(i, i);
    return {eigenvalues, v};
}

}  // namespace

PcaModel fit_pca2(const Matrix& features) {
    const std::size_t n = features.rows(), d = features.cols();
    if (d < 2) throw DataError("pca: need at least 2 features");
    if (n < 2) throw DataError("pca: need at least 2 rows");

    PcaModel model;
    model.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) model.mean[j] += features(i, j);
    }
    for (double& m : model.mean) m /= static_cast<double>(n);

    Matrix cov(d, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double xj = features(i, j) - model.mean[j];
            for (std::size_t k = j; k < d; ++k) {
                cov(j, k) += xj * (features(i, k) - model.mean[k]);
            }
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = j; k < d; ++k) {
            cov(j, k) /= static_cast<double>(n - 1);
            cov(k, j) = cov(j, k);
        }
    }

    auto [eigenvalues, vectors] = jacobi_eigen(cov);
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return eigenvalues[a] > eigenvalues[b]; });

    const double total = std::max(
        std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0), 1e-300);
    model.explained_ratio.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        model.explained_ratio[i] = std::max(eigenvalues[order[i]], 0.0) / total;
    }

    model.components = Matrix(d, 2);
    for (std::size_t c = 0; c < 2; ++c) {
        // sign fixed by the largest-magnitude loading
        std::size_t arg = 0;
        for (std::size_t j = 1; j < d; ++j) {
            if (std::abs(vectors(j, order[c])) > std::abs(vectors(arg, order[c]))) arg = j;
        }
        const double sign = vectors(arg, order[c]) >= 0.0 ? 1.0 : -1.0;
        for (std::size_t j = 0; j < d; ++j) {
            model.components(j, c) = sign * vectors(j, order[c]);
        }
    }
    return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& features) {
    if (features.cols() != model.mean.size()) throw DataError("pca: dimension mismatch");
    Matrix out(features.rows(), 2);
    for (std::size_t i = 0; i < features.rows(); ++i) {
        for (std::size_t c = 0; c < 2; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < features.cols(); ++j) {
                acc += (features(i, j) - model.mean[j]) * model.components(j, c);
            }
            out(i, c) = acc;
        }
    }
    return out;
}

PcaModel emit_projection(const Dataset& before, const Dataset& after,
                         const std::string& before_csv_path,
                         const std::string& after_csv_path) {
    Matrix all(before.size() + after.size(), before.n_features());
    std::copy(before.features.values().begin(), before.features.values().end(),
              all.values().begin());
    std::copy(after.features.values().begin(), after.features.values().end(),
              all.values().begin() + static_cast<std::ptrdiff_t>(before.features.values().size()));

    const PcaModel model = fit_pca2(all);

    auto write = [&](const Dataset& data, const std::string& path) {
        std::ofstream out(path);
        if (!out) throw DataError("cannot write " + path);
        out << "x,y,label\n";
        const Matrix coords = pca_transform(model, data.features);
        char buf[80];
        for (std::size_t i = 0; i < data.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,", coords(i, 0), coords(i, 1));
            out << buf << data.class_names[data.labels[i]] << '\n';
        }
    };
    write(before, before_csv_path);
    write(after, after_csv_path);
    return model;
}

}  // namespace ctgsm
