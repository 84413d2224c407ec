// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpbv/config.hpp"

namespace dpbv {

struct Record {
    uint64_t id = 0;
    std::vector<double> values;
    std::optional<int> label;  // ground truth for evaluation only
};

struct Dataset {
    std::vector<std::string> attribute_names;
    std::vector<Record> records;

    size_t size() const noexcept { return records.size(); }
    uint32_t dim() const noexcept { return static_cast<uint32_t>(attribute_names.size()); }

    bool has_labels() const {
        return !records.empty() && records.front().label.has_value();
    }

    std::vector<int> labels() const {
        std::vector<int> out;
        out.reserve(records.size());
        for (const auto& r : records) out.push_back(r.label.value_or(-1));
        return out;
    }
};

struct ValidationIssue {
    size_t record_index = 0;
    size_t attribute_index = 0;
    double value = 0.0;
    std::string reason;
};

struct ValidationReport {
    bool passed = true;
    std::vector<ValidationIssue> issues;
    std::vector<std::string> warnings;
};

enum class RangePolicy { Reject, Clamp };

/// Report-only scan for out-of-range values and dimension mismatches.
inline ValidationReport validate_dataset(const Dataset& data, const EncodingScheme& scheme) {
    ValidationReport report;
    if (data.records.empty()) {
        report.warnings.push_back("dataset is empty");
        return report;
    }
    if (data.dim() != scheme.dim()) {
        report.passed = false;
        report.issues.push_back({0, 0, 0.0,
                                 "dataset has " + std::to_string(data.dim()) +
                                     " attributes, scheme declares " + std::to_string(scheme.dim())});
        return report;
    }
    for (size_t i = 0; i < data.records.size(); ++i) {
        const auto& rec = data.records[i];
        if (rec.values.size() != data.dim()) {
            report.passed = false;
            report.issues.push_back({i, 0, 0.0, "record dimension mismatch"});
            continue;
        }
        for (size_t a = 0; a < rec.values.size(); ++a) {
            const auto& spec = scheme.attributes[a];
            const double v = rec.values[a];
            if (!(v >= spec.lower && v <= spec.upper)) {
                report.passed = false;
                report.issues.push_back({i, a, v, "value out of declared range"});
            }
        }
    }
    return report;
}

/// Default policy rejects out-of-range values; clamping silently distorts
/// distances, so it has to be asked for.
inline Dataset apply_range_policy(Dataset data, const EncodingScheme& scheme, RangePolicy policy) {
    const auto report = validate_dataset(data, scheme);
    if (report.passed) return data;
    if (policy == RangePolicy::Reject) {
        const auto& first = report.issues.front();
        throw InputError("dataset validation failed (record " + std::to_string(first.record_index) +
                         ", attribute " + std::to_string(first.attribute_index) + "): " + first.reason);
    }
    for (auto& rec : data.records)
        for (size_t a = 0; a < rec.values.size(); ++a)
            rec.values[a] = std::clamp(rec.values[a], scheme.attributes[a].lower,
                                       scheme.attributes[a].upper);
    return data;
}

struct AttributeScale {
    double source_lower = 0.0;
    double source_upper = 0.0;
    double target_lower = 0.0;
    double target_upper = 0.0;
};

struct ScaledDataset {
    Dataset data;
    std::vector<AttributeScale> scales;
};

/// Per-attribute min-max rescaling onto [lo, hi]. Constant attributes map to
/// lo. The returned scales make reported distances reconstructible.
inline ScaledDataset min_max_scale(const Dataset& data, double lo, double hi) {
    ScaledDataset out;
    out.data = data;
    const uint32_t d = data.dim();
    out.scales.resize(d);
    for (uint32_t a = 0; a < d; ++a) {
        double mn = std::numeric_limits<double>::infinity();
        double mx = -std::numeric_limits<double>::infinity();
        for (const auto& rec : data.records) {
            mn = std::min(mn, rec.values[a]);
            mx = std::max(mx, rec.values[a]);
        }
        out.scales[a] = {mn, mx, lo, hi};
        const double span = mx - mn;
        for (size_t i = 0; i < data.records.size(); ++i) {
            double& v = out.data.records[i].values[a];
            v = span > 0.0 ? lo + (v - mn) / span * (hi - lo) : lo;
        }
    }
    return out;
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}
}  // namespace detail

/// CSV loader. First row is a header; an optional leading "id" column and an
/// optional trailing "label" column are recognized by name, everything else
/// is a numeric attribute.
inline Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty dataset file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split_csv_line(line);
    if (header.empty()) throw InputError("missing header row: " + path);

    bool has_id = header.front() == "id";
    bool has_label = header.back() == "label";
    Dataset data;
    const size_t first_attr = has_id ? 1 : 0;
    const size_t last_attr = header.size() - (has_label ? 1 : 0);
    for (size_t i = first_attr; i < last_attr; ++i) data.attribute_names.push_back(header[i]);
    if (data.attribute_names.empty()) throw InputError("no attribute columns: " + path);

    uint64_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw InputError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                             " fields, expected " + std::to_string(header.size()));
        Record rec;
        rec.id = has_id ? std::stoull(fields[0]) : row;
        for (size_t i = first_attr; i < last_attr; ++i) rec.values.push_back(std::stod(fields[i]));
        if (has_label) rec.label = std::stoi(fields.back());
        data.records.push_back(std::move(rec));
        ++row;
    }
    return data;
}

inline void save_csv(const Dataset& data, const std::string& path, bool write_ids = false) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write dataset: " + path);
    out.precision(17);
    if (write_ids) out << "id,";
    for (size_t i = 0; i < data.attribute_names.size(); ++i) {
        out << data.attribute_names[i];
        out << (i + 1 < data.attribute_names.size() ? "," : "");
    }
    const bool labels = data.has_labels();
    if (labels) out << ",label";
    out << "\n";
    for (const auto& rec : data.records) {
        if (write_ids) out << rec.id << ",";
        for (size_t i = 0; i < rec.values.size(); ++i) {
            out << rec.values[i];
            out << (i + 1 < rec.values.size() ? "," : "");
        }
        if (labels) out << "," << rec.label.value_or(-1);
        out << "\n";
    }
}

}  // namespace dpbv
