// io.hpp — CSV output, key=value configs, run manifests and output directories

#pragma once

#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef BTC_BUILD_HASH
#define BTC_BUILD_HASH "unknown"
#endif

namespace btc::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr const char* kManifestName = "manifest.json";

inline const char* build_hash() { return BTC_BUILD_HASH; }

// Round-trip precision; same bits in, same text out.
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
        columns_ = header.size();
        write_fields(header);
    }

    void row(const std::vector<double>& values) {
        std::vector<std::string> fields;
        fields.reserve(values.size());
        for (double v : values) fields.push_back(format_double(v));
        write_fields(fields);
    }

    void row(const std::vector<std::string>& fields) { write_fields(fields); }

    const fs::path& path() const { return path_; }

private:
    void write_fields(const std::vector<std::string>& fields) {
        if (fields.size() != columns_) throw std::logic_error("CsvWriter: row width does not match header");
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
        if (!out_) throw std::runtime_error("write failed on " + path_.string());
    }

    fs::path path_;
    std::ofstream out_;
    std::size_t columns_{0};
};

/// Reads a numeric CSV with one header line.
inline std::vector<std::vector<double>> read_csv(const fs::path& path, std::vector<std::string>* header = nullptr) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::vector<std::vector<double>> rows;
    if (std::getline(in, line) && header) {
        header->clear();
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) header->push_back(field);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Plain-text configuration: one `key = value` per line, `#` starts a
/// comment. Keys are long option names without the leading dashes.
inline std::map<std::string, std::string> parse_config(std::istream& in, const std::string& origin = "config") {
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string{};
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

inline std::map<std::string, std::string> load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path.string());
    return parse_config(in, path.string());
}

class OutputExists : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Creates `dir` for a fresh run. A directory that already holds a manifest
/// is refused unless `force`, in which case the files listed in that
/// manifest (and the manifest itself) are removed first.
inline void prepare_output_dir(const fs::path& dir, bool force) {
    const fs::path manifest = dir / kManifestName;
    if (fs::exists(manifest)) {
        if (!force)
            throw OutputExists(dir.string() + " already contains a run; pass --force to overwrite");
        std::ifstream in(manifest);
        const json old = json::parse(in, nullptr, false);
        if (!old.is_discarded() && old.contains("files"))
            for (const auto& f : old["files"]) fs::remove(dir / f.get<std::string>());
        fs::remove(manifest);
    }
    fs::create_directories(dir);
}

inline void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

} // namespace btc::io
