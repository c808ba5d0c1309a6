#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "ctgsm/tabular.hpp"

namespace ctgsm {

struct SmoteParams {
    // synthetic samples per source row; unset means "balance": per-class N is
    // derived so each target class reaches the majority-class count
    std::optional<std::size_t> n_per_sample;
    std::size_t k_neighbors = 5;
    // classes to oversample; an empty set generates nothing
    std::set<std::size_t> target_classes;
    std::uint64_t seed = 0;
};

struct EnnParams {
    std::size_t k_neighbors = 3;
};

// k nearest rows to points[query_index] by Euclidean distance, ties broken by
// lower row index. Candidates may be restricted to an index subset.
std::vector<std::size_t> knn_indices(const Matrix& points, std::size_t query_index,
                                     std::size_t k, bool exclude_self,
                                     const std::vector<std::size_t>* restrict_to = nullptr);

// one synthetic row's lineage: x_new = source + lambda * (neighbor - source)
struct SmoteLineage {
    std::size_t source_row;
    std::size_t neighbor_row;
    double lambda;
};

struct SmoteResult {
    Dataset synthetic;
    std::vector<SmoteLineage> lineage;
};

// Interpolates synthetic minority rows between each source row and one of its
// k within-class neighbors. Draw order is part of the contract: one Rng
// seeded with params.seed, target classes ascending, source rows in dataset
// order, and per synthetic row first the neighbor pick then lambda in [0,1).
SmoteResult smote(const Dataset& data, const SmoteParams& params);

// Removes every row whose class differs from the strict majority class of its
// k nearest neighbors (self excluded, all classes eligible). Votes are taken
// against the original dataset and applied at once; a tied vote keeps the row.
Dataset enn_filter(const Dataset& data, const EnnParams& params);

// SMOTE then ENN over the union of original and synthetic rows
Dataset smoteenn(const Dataset& data, const SmoteParams& smote_params,
                 const EnnParams& enn_params);

}  // namespace ctgsm
