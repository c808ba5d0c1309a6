#pragma once

#include <string>
#include <vector>

#include "ctgsm/tabular.hpp"

namespace ctgsm {

// 2-D PCA basis from the covariance eigendecomposition; component signs are
// fixed by making each component's largest-magnitude loading positive.
struct PcaModel {
    std::vector<double> mean;
    Matrix components;                     // d x 2, columns are the basis
    std::vector<double> explained_ratio;   // all d ratios, non-increasing
};

PcaModel fit_pca2(const Matrix& features);
Matrix pca_transform(const PcaModel& model, const Matrix& features);

// Both datasets projected into one basis fitted on their union; each CSV row
// is x,y,label-name.
PcaModel emit_projection(const Dataset& before, const Dataset& after,
                         const std::string& before_csv_path,
                         const std::string& after_csv_path);

}  // namespace ctgsm
