#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctgsm/tabular.hpp"

namespace ctgsm {

struct BenchmarkClass {
    std::string name;
    std::size_t count = 0;
    std::vector<double> mean;  // cluster center, length n_features
    double stddev = 1.0;       // isotropic
};

struct BenchmarkSpec {
    std::size_t n_features = 20;
    std::vector<BenchmarkClass> classes;
};

// Desk-scale stand-in for the selected-files class mix: a large benign
// cluster, two mid-size attack clusters, and two rare attack clusters that
// partially overlap the attack clusters they hide inside.
BenchmarkSpec default_benchmark_spec();

// Gaussian-cluster multiclass dataset; deterministic for a fixed seed.
Dataset make_benchmark(const BenchmarkSpec& spec, std::uint64_t seed);

}  // namespace ctgsm
