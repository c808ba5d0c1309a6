#include "ctgsm/benchmark.hpp"

#include <cstdio>
#include <utility>

#include "ctgsm/errors.hpp"
#include "ctgsm/rng.hpp"

namespace ctgsm {

BenchmarkSpec default_benchmark_spec() {
    BenchmarkSpec spec;
    spec.n_features = 20;
    auto center = [&](std::initializer_list<std::pair<std::size_t, double>> entries) {
        std::vector<double> m(spec.n_features, 0.0);
        for (const auto& [dim, v] : entries) m[dim] = v;
        return m;
    };
    // two bulk attack clusters away from benign; each rare class hides on the
    // shoulder of one of them, offset along an otherwise quiet dimension
    spec.classes = {
        {"Benign", 20000, center({}), 1.0},
        {"Flood", 2000, center({{0, 3.5}, {1, 3.5}, {2, 3.5}, {3, 3.5}, {4, 3.5}}), 1.0},
        {"Bot", 1500, center({{5, -3.5}, {6, -3.5}, {7, -3.5}, {8, -3.5}, {9, -3.5}}), 1.0},
        {"XSS", 30,
         center({{0, 3.5}, {1, 3.5}, {2, 3.5}, {3, 3.5}, {4, 3.5}, {10, 1.8}}), 0.6},
        {"SQLi", 20,
         center({{5, -3.5}, {6, -3.5}, {7, -3.5}, {8, -3.5}, {9, -3.5}, {11, -1.8}}), 0.6},
    };
    return spec;
}

Dataset make_benchmark(const BenchmarkSpec& spec, std::uint64_t seed) {
    if (spec.classes.empty()) throw ConfigError("benchmark: no classes");
    std::size_t total = 0;
    for (const auto& cls : spec.classes) {
        if (cls.count == 0) throw ConfigError("benchmark: class '" + cls.name + "' is empty");
        if (cls.mean.size() != spec.n_features) {
            throw ConfigError("benchmark: mean length mismatch for class '" + cls.name + "'");
        }
        if (cls.stddev <= 0.0) throw ConfigError("benchmark: stddev must be positive");
        total += cls.count;
    }

    Dataset data;
    data.features = Matrix(total, spec.n_features);
    data.labels.reserve(total);
    for (std::size_t j = 0; j < spec.n_features; ++j) {
        char name[16];
        std::snprintf(name, sizeof(name), "f%02zu", j);
        data.schema.push_back({name, ColumnKind::Continuous});
    }
    data.schema.push_back({"Label", ColumnKind::Label});

    Rng rng(seed);
    std::size_t row = 0;
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        const auto& cls = spec.classes[c];
        data.class_names.push_back(cls.name);
        for (std::size_t i = 0; i < cls.count; ++i, ++row) {
            auto out = data.features.row(row);
            for (std::size_t j = 0; j < spec.n_features; ++j) {
                out[j] = cls.mean[j] + cls.stddev * rng.normal();
            }
            data.labels.push_back(c);
        }
    }
    return data;
}

}  // namespace ctgsm
