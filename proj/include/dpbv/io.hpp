// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpbv/clustering.hpp"
#include "dpbv/config.hpp"
#include "dpbv/version.hpp"

namespace dpbv {

/// Everything needed to re-run a command and get bit-identical outputs.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::json parameters;
    std::string config_fingerprint;
    std::vector<uint64_t> seeds;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    double duration_ms = 0.0;
    std::string version = kVersionString;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["command"] = command;
        j["argv"] = argv;
        j["parameters"] = parameters;
        j["config_fingerprint"] = config_fingerprint;
        j["seeds"] = seeds;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["duration_ms"] = duration_ms;
        j["version"] = version;
        return j;
    }

    static RunManifest from_json(const nlohmann::json& j) {
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.argv = j.at("argv").get<std::vector<std::string>>();
        if (j.contains("parameters")) m.parameters = j.at("parameters");
        if (j.contains("config_fingerprint"))
            m.config_fingerprint = j.at("config_fingerprint").get<std::string>();
        if (j.contains("seeds")) m.seeds = j.at("seeds").get<std::vector<uint64_t>>();
        if (j.contains("inputs")) m.inputs = j.at("inputs").get<std::vector<std::string>>();
        if (j.contains("outputs")) m.outputs = j.at("outputs").get<std::vector<std::string>>();
        if (j.contains("duration_ms")) m.duration_ms = j.at("duration_ms").get<double>();
        if (j.contains("version")) m.version = j.at("version").get<std::string>();
        return m;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw InputError("cannot write manifest: " + path);
        out << to_json().dump(2) << "\n";
    }

    static RunManifest load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open manifest: " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }
};

inline std::string fingerprint_hex(uint64_t fp) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
    return buf;
}

inline void write_labels_csv(const std::vector<int>& labels, const std::string& path,
                             const std::vector<uint64_t>* ids = nullptr) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write labels: " + path);
    out << "id,label\n";
    for (size_t i = 0; i < labels.size(); ++i)
        out << (ids ? (*ids)[i] : static_cast<uint64_t>(i)) << "," << labels[i] << "\n";
}

inline std::vector<int> read_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open labels: " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<int> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        labels.push_back(std::stoi(line.substr(comma + 1)));
    }
    return labels;
}

inline void write_metrics_json(const nlohmann::json& metrics, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write metrics: " + path);
    out << metrics.dump(2) << "\n";
}

/// Simple timer for manifest durations.
class WallClock {
public:
    WallClock() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace dpbv
