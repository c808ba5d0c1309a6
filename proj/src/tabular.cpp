#include "ctgsm/tabular.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "ctgsm/errors.hpp"
#include "ctgsm/rng.hpp"

namespace ctgsm {
namespace {

std::string trim(const std::string& s) {
    std::size_t lo = 0, hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

bool iequals(const std::string& a, const std::string& b) { return lower(a) == lower(b); }

// comma-separated with minimal double-quote support
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

bool parse_double(const std::string& cell, double& out) {
    const std::string t = trim(cell);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += "\"\"";
        else quoted.push_back(c);
    }
    quoted.push_back('"');
    return quoted;
}

ColumnKind kind_from_string(const std::string& s) {
    if (s == "continuous") return ColumnKind::Continuous;
    if (s == "discrete") return ColumnKind::Discrete;
    if (s == "label") return ColumnKind::Label;
    if (s == "dropped") return ColumnKind::Dropped;
    throw DataError("unknown column kind: " + s);
}

std::string kind_to_string(ColumnKind k) {
    switch (k) {
        case ColumnKind::Continuous: return "continuous";
        case ColumnKind::Discrete: return "discrete";
        case ColumnKind::Label: return "label";
        case ColumnKind::Dropped: return "dropped";
    }
    return "continuous";
}

}  // namespace

void validate_schema(const std::vector<ColumnSchema>& schema) {
    std::size_t labels = 0;
    for (const auto& col : schema) {
        if (col.kind == ColumnKind::Label) ++labels;
        if (iequals(col.name, "timestamp") && col.kind != ColumnKind::Dropped) {
            throw DataError("column '" + col.name + "' must have kind dropped");
        }
    }
    if (labels != 1) {
        throw DataError("schema must contain exactly one label column, found " +
                        std::to_string(labels));
    }
}

std::vector<std::string> Dataset::feature_names() const {
    std::vector<std::string> names;
    for (const auto& col : schema) {
        if (col.kind == ColumnKind::Continuous || col.kind == ColumnKind::Discrete) {
            names.push_back(col.name);
        }
    }
    return names;
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (std::size_t id : labels) ++counts[id];
    return counts;
}

std::vector<std::size_t> Dataset::indices_of_class(std::size_t class_id) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == class_id) idx.push_back(i);
    }
    return idx;
}

Dataset Dataset::take(std::span<const std::size_t> indices) const {
    Dataset out;
    out.features = features.take_rows(indices);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) out.labels.push_back(labels[i]);
    out.class_names = class_names;
    out.schema = schema;
    return out;
}

void Dataset::append(const Dataset& other) {
    if (other.size() == 0) return;
    if (other.features.cols() != features.cols()) {
        throw DataError("append: feature dimension mismatch");
    }
    if (other.class_names != class_names) {
        throw DataError("append: class name mismatch");
    }
    Matrix merged(features.rows() + other.features.rows(), features.cols());
    std::copy(features.values().begin(), features.values().end(), merged.values().begin());
    std::copy(other.features.values().begin(), other.features.values().end(),
              merged.values().begin() + static_cast<std::ptrdiff_t>(features.values().size()));
    features = std::move(merged);
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

RawTable load_csv(const std::vector<std::string>& paths) {
    if (paths.empty()) throw DataError("no input files given");
    RawTable table;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open file: " + path);
        std::string line;
        if (!std::getline(in, line)) throw DataError("empty file: " + path);
        auto header = split_csv_line(line);
        for (auto& h : header) h = trim(h);
        if (table.header.empty()) {
            table.header = header;
        } else if (header != table.header) {
            throw DataError("header mismatch in file: " + path);
        }
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            auto cells = split_csv_line(line);
            if (cells.size() != table.header.size()) {
                throw DataError("ragged row at " + path + ":" + std::to_string(line_no) +
                                " (" + std::to_string(cells.size()) + " cells, expected " +
                                std::to_string(table.header.size()) + ")");
            }
            table.rows.push_back(std::move(cells));
        }
    }
    return table;
}

RawTable load_csv(const std::string& path) { return load_csv(std::vector<std::string>{path}); }

std::vector<ColumnSchema> auto_schema(const std::vector<std::string>& header,
                                      const std::string& label_column) {
    std::vector<ColumnSchema> schema;
    schema.reserve(header.size());
    for (const auto& name : header) {
        ColumnSchema col{name, ColumnKind::Continuous};
        if (iequals(name, "timestamp")) {
            col.kind = ColumnKind::Dropped;
        } else if (iequals(name, label_column)) {
            col.kind = ColumnKind::Label;
        }
        schema.push_back(col);
    }
    validate_schema(schema);
    return schema;
}

Dataset clean(const RawTable& raw, const std::vector<ColumnSchema>& schema) {
    validate_schema(schema);
    if (raw.rows.empty()) throw DataError("raw table has no rows");
    if (schema.size() != raw.header.size()) {
        throw DataError("schema size does not match header width");
    }

    std::vector<std::size_t> feature_cols;
    std::size_t label_col = 0;
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (schema[c].kind == ColumnKind::Label) label_col = c;
        if (schema[c].kind == ColumnKind::Continuous || schema[c].kind == ColumnKind::Discrete) {
            feature_cols.push_back(c);
        }
    }

    const std::size_t d = feature_cols.size();
    std::vector<double> values;
    std::vector<std::string> row_labels;
    values.reserve(raw.rows.size() * d);

    std::vector<double> parsed(d);
    for (const auto& row : raw.rows) {
        bool ok = true;
        for (std::size_t j = 0; j < d && ok; ++j) {
            double v = 0.0;
            ok = parse_double(row[feature_cols[j]], v) && std::isfinite(v);
            parsed[j] = v;
        }
        const std::string label = trim(row[label_col]);
        if (!ok || label.empty()) continue;
        values.insert(values.end(), parsed.begin(), parsed.end());
        row_labels.push_back(label);
    }
    if (row_labels.empty()) throw DataError("cleaning removed all rows");

    // Benign pinned to class 0; other classes in first-appearance order
    Dataset out;
    std::unordered_map<std::string, std::size_t> class_ids;
    for (const auto& name : row_labels) {
        if (iequals(name, "benign") && out.class_names.empty()) {
            class_ids.emplace(name, 0);
            out.class_names.push_back(name);
            break;
        }
    }
    out.labels.reserve(row_labels.size());
    for (const auto& name : row_labels) {
        auto it = class_ids.find(name);
        if (it == class_ids.end()) {
            it = class_ids.emplace(name, out.class_names.size()).first;
            out.class_names.push_back(name);
        }
        out.labels.push_back(it->second);
    }

    out.features = Matrix(row_labels.size(), d);
    std::copy(values.begin(), values.end(), out.features.values().begin());
    out.schema = schema;
    return out;
}

Dataset clean(const RawTable& raw, const std::string& label_column) {
    return clean(raw, auto_schema(raw.header, label_column));
}

MinMaxScaler fit_scaler(const Dataset& train) {
    const std::size_t d = train.n_features();
    MinMaxScaler scaler;
    scaler.min.assign(d, 0.0);
    scaler.max.assign(d, 0.0);
    if (train.size() == 0) throw DataError("cannot fit scaler on empty dataset");
    for (std::size_t j = 0; j < d; ++j) {
        double lo = train.features(0, j), hi = lo;
        for (std::size_t i = 1; i < train.size(); ++i) {
            lo = std::min(lo, train.features(i, j));
            hi = std::max(hi, train.features(i, j));
        }
        scaler.min[j] = lo;
        scaler.max[j] = hi;
    }
    return scaler;
}

Dataset apply_scaler(const MinMaxScaler& scaler, const Dataset& data) {
    if (scaler.min.size() != data.n_features()) {
        throw DataError("scaler dimension mismatch");
    }
    Dataset out = data;
    for (std::size_t j = 0; j < scaler.min.size(); ++j) {
        const double span = scaler.max[j] - scaler.min[j];
        for (std::size_t i = 0; i < out.size(); ++i) {
            double v = span > 0.0 ? (out.features(i, j) - scaler.min[j]) / span : 0.0;
            out.features(i, j) = std::clamp(v, 0.0, 1.0);
        }
    }
    return out;
}

Dataset invert_scaler(const MinMaxScaler& scaler, const Dataset& data) {
    if (scaler.min.size() != data.n_features()) {
        throw DataError("scaler dimension mismatch");
    }
    Dataset out = data;
    for (std::size_t j = 0; j < scaler.min.size(); ++j) {
        const double span = scaler.max[j] - scaler.min[j];
        for (std::size_t i = 0; i < out.size(); ++i) {
            out.features(i, j) = scaler.min[j] + out.features(i, j) * span;
        }
    }
    return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double train_fraction,
                                             std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw DataError("train fraction must lie in (0,1)");
    }
    const auto counts = data.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] < 2) {
            throw DataError("class '" + data.class_names[c] + "' has fewer than 2 samples");
        }
    }

    std::vector<std::size_t> train_idx, test_idx;
    Rng rng(seed);
    for (std::size_t c = 0; c < data.n_classes(); ++c) {
        auto members = data.indices_of_class(c);
        rng.shuffle(members);
        // round half up, but keep both partitions non-empty per class
        auto n_train = static_cast<std::size_t>(
            std::floor(train_fraction * static_cast<double>(members.size()) + 0.5));
        n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
        train_idx.insert(train_idx.end(), members.begin(), members.begin() + n_train);
        test_idx.insert(test_idx.end(), members.begin() + n_train, members.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {data.take(train_idx), data.take(test_idx)};
}

std::vector<FoldIndices> stratified_kfold(const Dataset& data, std::size_t k,
                                          std::uint64_t seed) {
    if (k < 2) throw DataError("k must be >= 2");
    const auto counts = data.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] < k) {
            throw DataError("class '" + data.class_names[c] + "' has fewer than k=" +
                            std::to_string(k) + " samples");
        }
    }

    std::vector<std::vector<std::size_t>> folds(k);
    Rng rng(seed);
    for (std::size_t c = 0; c < data.n_classes(); ++c) {
        auto members = data.indices_of_class(c);
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i) {
            folds[i % k].push_back(members[i]);
        }
    }

    std::vector<FoldIndices> out(k);
    for (std::size_t f = 0; f < k; ++f) {
        out[f].validation = folds[f];
        std::sort(out[f].validation.begin(), out[f].validation.end());
        for (std::size_t g = 0; g < k; ++g) {
            if (g == f) continue;
            out[f].train.insert(out[f].train.end(), folds[g].begin(), folds[g].end());
        }
        std::sort(out[f].train.begin(), out[f].train.end());
    }
    return out;
}

void save_dataset(const Dataset& data, const std::string& base_path,
                  const std::optional<MinMaxScaler>& scaler) {
    std::string label_name = "Label";
    for (const auto& col : data.schema) {
        if (col.kind == ColumnKind::Label) label_name = col.name;
    }

    std::ofstream csv(base_path + ".csv");
    if (!csv) throw DataError("cannot write " + base_path + ".csv");
    const auto names = data.feature_names();
    for (const auto& n : names) csv << csv_cell(n) << ',';
    csv << csv_cell(label_name) << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.n_features(); ++j) {
            csv << format_double(data.features(i, j)) << ',';
        }
        csv << csv_cell(data.class_names[data.labels[i]]) << '\n';
    }

    nlohmann::json meta;
    meta["class_names"] = data.class_names;
    auto& cols = meta["schema"];
    cols = nlohmann::json::array();
    for (const auto& col : data.schema) {
        cols.push_back({{"name", col.name}, {"kind", kind_to_string(col.kind)}});
    }
    if (scaler) {
        meta["scaler"] = {{"min", scaler->min}, {"max", scaler->max}};
    }
    std::ofstream js(base_path + ".meta.json");
    if (!js) throw DataError("cannot write " + base_path + ".meta.json");
    js << meta.dump(2) << '\n';
}

std::pair<Dataset, std::optional<MinMaxScaler>> load_dataset(const std::string& base_path) {
    std::ifstream js(base_path + ".meta.json");
    if (!js) throw DataError("cannot open " + base_path + ".meta.json");
    nlohmann::json meta = nlohmann::json::parse(js);

    std::vector<ColumnSchema> schema;
    for (const auto& col : meta.at("schema")) {
        schema.push_back({col.at("name").get<std::string>(),
                          kind_from_string(col.at("kind").get<std::string>())});
    }
    const auto class_names = meta.at("class_names").get<std::vector<std::string>>();

    RawTable raw = load_csv(base_path + ".csv");
    Dataset data = clean(raw, schema);

    // re-encode against the snapshot's authoritative class list
    std::unordered_map<std::string, std::size_t> ids;
    for (std::size_t c = 0; c < class_names.size(); ++c) ids[class_names[c]] = c;
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto it = ids.find(data.class_names[data.labels[i]]);
        if (it == ids.end()) throw DataError("snapshot row label not in class_names");
        data.labels[i] = it->second;
    }
    data.class_names = class_names;

    std::optional<MinMaxScaler> scaler;
    if (meta.contains("scaler")) {
        scaler = MinMaxScaler{meta["scaler"].at("min").get<std::vector<double>>(),
                              meta["scaler"].at("max").get<std::vector<double>>()};
    }
    return {std::move(data), std::move(scaler)};
}

}  // namespace ctgsm
