#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctgsm/matrix.hpp"

namespace ctgsm {

enum class ColumnKind { Continuous, Discrete, Label, Dropped };

struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
};

// exactly one label column; any column named "Timestamp" (case-insensitive)
// must be dropped
void validate_schema(const std::vector<ColumnSchema>& schema);

// raw CSV contents: header names plus rows of text cells
struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// The universal currency between pipeline stages: cleaned numeric features,
// integer class labels and the naming metadata needed to interpret them.
struct Dataset {
    Matrix features;                        // rows x d
    std::vector<std::size_t> labels;        // class IDs, 0-based
    std::vector<std::string> class_names;   // ID -> name
    std::vector<ColumnSchema> schema;

    std::size_t size() const { return labels.size(); }
    std::size_t n_features() const { return features.cols(); }
    std::size_t n_classes() const { return class_names.size(); }

    std::vector<std::string> feature_names() const;
    std::vector<std::size_t> class_counts() const;
    std::vector<std::size_t> indices_of_class(std::size_t class_id) const;
    Dataset take(std::span<const std::size_t> indices) const;
    // append rows of a dataset sharing this schema and class list
    void append(const Dataset& other);
};

struct MinMaxScaler {
    std::vector<double> min;
    std::vector<double> max;
};

// --- ingestion -------------------------------------------------------------

// Parse one or more CSV files with identical headers into a single table.
// First row of each file is the header; later files must match it exactly.
RawTable load_csv(const std::vector<std::string>& paths);
RawTable load_csv(const std::string& path);

// label column and timestamp rule applied to a raw header
std::vector<ColumnSchema> auto_schema(const std::vector<std::string>& header,
                                      const std::string& label_column = "Label");

// Drop dropped-kind columns, remove rows with NaN/inf/unparseable numerics,
// and integer-encode labels (Benign -> 0, then first-appearance order).
Dataset clean(const RawTable& raw, const std::vector<ColumnSchema>& schema);
Dataset clean(const RawTable& raw, const std::string& label_column = "Label");

// --- scaling ---------------------------------------------------------------

MinMaxScaler fit_scaler(const Dataset& train);
// maps to [0,1]; constant features go to 0; out-of-range values are clamped
Dataset apply_scaler(const MinMaxScaler& scaler, const Dataset& data);
Dataset invert_scaler(const MinMaxScaler& scaler, const Dataset& data);

// --- partitioning ----------------------------------------------------------

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double train_fraction,
                                             std::uint64_t seed);

struct FoldIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

std::vector<FoldIndices> stratified_kfold(const Dataset& data, std::size_t k,
                                          std::uint64_t seed);

// --- snapshots -------------------------------------------------------------

// Two-file pair: `<base>.csv` holds features plus a label-name column,
// `<base>.meta.json` holds class names, schema and (optionally) the scaler.
void save_dataset(const Dataset& data, const std::string& base_path,
                  const std::optional<MinMaxScaler>& scaler = std::nullopt);
std::pair<Dataset, std::optional<MinMaxScaler>> load_dataset(const std::string& base_path);

}  // namespace ctgsm
