#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dyson/errors.hpp"

#include <json.hpp>

namespace dyson {

inline constexpr const char* DYSON_VERSION = "0.1.0";

namespace io {

// RFC 4180: quote fields containing comma, quote, or newline
inline std::string csv_escape(const std::string& field) {
    bool needs = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvWriter {
    std::ofstream out;

    explicit CsvWriter(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw invalid_parameter("cannot open file for writing: " + path);
    }

    void row(const std::vector<std::string>& fields) {
        for (size_t i = 0; i < fields.size(); ++i) {
            if (i) out << ',';
            out << csv_escape(fields[i]);
        }
        out << "\r\n";
    }

    // digests are taken after close, so flush explicitly before manifests
    void close() { out.close(); }
};

inline uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_parameter("cannot open file for digest: " + path);
    uint64_t h = 1469598103934665603ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= uint64_t(uint8_t(buf[i]));
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)v);
    return buf;
}

struct RunManifest {
    std::string experiment;
    nlohmann::json params;
    uint64_t seed = 0;
    double wall_seconds = 0.0;
    std::vector<std::string> output_files;
};

// manifest is written after all listed outputs so the digests are final
inline void write_manifest(const std::string& path, const RunManifest& m) {
    nlohmann::json j;
    j["experiment"] = m.experiment;
    j["params"] = m.params;
    j["seed"] = m.seed;
    j["wall_seconds"] = m.wall_seconds;
    j["code_version"] = DYSON_VERSION;
    nlohmann::json files = nlohmann::json::array();
    for (const std::string& f : m.output_files) {
        nlohmann::json e;
        e["file"] = f;
        e["fnv1a64"] = hex64(fnv1a64_file(f));
        files.push_back(e);
    }
    j["outputs"] = files;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_parameter("cannot open manifest for writing: " + path);
    out << j.dump(2) << "\n";
}

} // namespace io
} // namespace dyson
