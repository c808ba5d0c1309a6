#include "ctgsm/resampling.hpp"

#include <algorithm>
#include <cmath>

#include "ctgsm/errors.hpp"
#include "ctgsm/parallel.hpp"
#include "ctgsm/rng.hpp"

namespace ctgsm {
namespace {

// candidate indices sorted by (distance, index), truncated to k
std::vector<std::size_t> knn_over(const Matrix& points, std::size_t query_index,
                                  std::size_t k, const std::vector<std::size_t>& candidates) {
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(candidates.size());
    const auto query = points.row(query_index);
    for (std::size_t idx : candidates) {
        ranked.emplace_back(squared_distance(query, points.row(idx)), idx);
    }
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k),
                      ranked.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = ranked[i].second;
    return out;
}

std::size_t majority_class(const Dataset& data) {
    const auto counts = data.class_counts();
    return static_cast<std::size_t>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace

std::vector<std::size_t> knn_indices(const Matrix& points, std::size_t query_index,
                                     std::size_t k, bool exclude_self,
                                     const std::vector<std::size_t>* restrict_to) {
    std::vector<std::size_t> candidates;
    if (restrict_to) {
        candidates.reserve(restrict_to->size());
        for (std::size_t idx : *restrict_to) {
            if (exclude_self && idx == query_index) continue;
            candidates.push_back(idx);
        }
    } else {
        candidates.reserve(points.rows());
        for (std::size_t idx = 0; idx < points.rows(); ++idx) {
            if (exclude_self && idx == query_index) continue;
            candidates.push_back(idx);
        }
    }
    if (candidates.size() < k) {
        throw DataError("knn: only " + std::to_string(candidates.size()) +
                        " candidates for k=" + std::to_string(k));
    }
    return knn_over(points, query_index, k, candidates);
}

SmoteResult smote(const Dataset& data, const SmoteParams& params) {
    if (params.k_neighbors < 1) throw DataError("smote: k must be >= 1");

    const std::set<std::size_t>& targets = params.target_classes;
    const auto counts = data.class_counts();
    const std::size_t majority_count = counts[majority_class(data)];

    SmoteResult result;
    result.synthetic.class_names = data.class_names;
    result.synthetic.schema = data.schema;

    const std::size_t d = data.n_features();
    std::vector<double> rows;
    std::vector<std::size_t> labels;

    Rng rng(params.seed);
    for (std::size_t cls : targets) {
        if (cls >= data.n_classes()) throw DataError("smote: unknown target class");
        const auto members = data.indices_of_class(cls);
        if (members.empty()) throw DataError("smote: empty target class");
        if (members.size() < params.k_neighbors + 1) {
            throw DataError("smote: class '" + data.class_names[cls] + "' has " +
                            std::to_string(members.size()) + " rows, need k+1=" +
                            std::to_string(params.k_neighbors + 1));
        }

        // per-row synthetic counts: explicit N, or derived to reach the
        // majority count exactly (remainder spread over the first rows)
        std::vector<std::size_t> per_row(members.size(), 0);
        if (params.n_per_sample) {
            std::fill(per_row.begin(), per_row.end(), *params.n_per_sample);
        } else {
            const std::size_t deficit =
                majority_count > members.size() ? majority_count - members.size() : 0;
            const std::size_t base = deficit / members.size();
            const std::size_t extra = deficit % members.size();
            for (std::size_t i = 0; i < members.size(); ++i) {
                per_row[i] = base + (i < extra ? 1 : 0);
            }
        }

        // within-class neighbor lists, computed once per source row
        std::vector<std::vector<std::size_t>> neighbors(members.size());
        parallel_for(members.size(), [&](std::size_t i) {
            neighbors[i] = knn_indices(data.features, members[i], params.k_neighbors,
                                       /*exclude_self=*/true, &members);
        }, 16);

        for (std::size_t i = 0; i < members.size(); ++i) {
            const std::size_t src = members[i];
            for (std::size_t j = 0; j < per_row[i]; ++j) {
                const std::size_t nbr = neighbors[i][rng.uniform_index(params.k_neighbors)];
                const double lambda = rng.uniform();
                for (std::size_t f = 0; f < d; ++f) {
                    const double a = data.features(src, f);
                    rows.push_back(a + lambda * (data.features(nbr, f) - a));
                }
                labels.push_back(cls);
                result.lineage.push_back({src, nbr, lambda});
            }
        }
    }

    result.synthetic.features = Matrix(labels.size(), d);
    std::copy(rows.begin(), rows.end(), result.synthetic.features.values().begin());
    result.synthetic.labels = std::move(labels);
    return result;
}

Dataset enn_filter(const Dataset& data, const EnnParams& params) {
    const std::size_t k = params.k_neighbors;
    if (k < 1) throw DataError("enn: k must be >= 1");
    if (data.size() <= k + 1) throw DataError("enn: dataset must have more than k+1 rows");

    const std::size_t n = data.size();
    std::vector<char> keep(n, 1);

    // all removal decisions are taken against the original dataset
    parallel_for(n, [&](std::size_t i) {
        const auto nbrs = knn_indices(data.features, i, k, /*exclude_self=*/true);
        std::vector<std::size_t> votes(data.n_classes(), 0);
        for (std::size_t idx : nbrs) ++votes[data.labels[idx]];
        const std::size_t top = *std::max_element(votes.begin(), votes.end());
        const bool strict =
            std::count(votes.begin(), votes.end(), top) == 1;
        if (strict && votes[data.labels[i]] != top) keep[i] = 0;
    }, 16);

    std::vector<std::size_t> kept;
    kept.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (keep[i]) kept.push_back(i);
    }
    return data.take(kept);
}

Dataset smoteenn(const Dataset& data, const SmoteParams& smote_params,
                 const EnnParams& enn_params) {
    Dataset combined = data;
    combined.append(smote(data, smote_params).synthetic);
    return enn_filter(combined, enn_params);
}

}  // namespace ctgsm
