#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hst/core/error.hpp"

namespace hst {

struct ManifestRecord {
    std::string id;
    std::string path;
    int label = 0;  // 0 non-COVID, 1 COVID
    std::string modality = "unknown";  // cough | breath | unknown
    std::string group;
};

inline void validate_manifest(const std::vector<ManifestRecord>& records) {
    std::set<std::string> seen;
    for (const auto& r : records) {
        if (r.id.empty()) throw InputError("manifest: empty id");
        if (!seen.insert(r.id).second) throw InputError("manifest: duplicate id " + r.id);
        if (r.label != 0 && r.label != 1) {
            throw InputError("manifest: label for " + r.id + " must be 0 or 1");
        }
        if (r.modality != "cough" && r.modality != "breath" && r.modality != "unknown") {
            throw InputError("manifest: unknown modality " + r.modality + " for " + r.id);
        }
    }
}

// JSON-lines, one record per line
inline std::vector<ManifestRecord> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path);
    std::vector<ManifestRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw InputError(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
        }
        ManifestRecord r;
        try {
            r.id = j.at("id").get<std::string>();
            r.path = j.at("path").get<std::string>();
            r.label = j.at("label").get<int>();
            if (j.contains("modality")) r.modality = j["modality"].get<std::string>();
            if (j.contains("group")) r.group = j["group"].get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw InputError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        out.push_back(std::move(r));
    }
    validate_manifest(out);
    return out;
}

inline void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest " + path);
    for (const auto& r : records) {
        nlohmann::json j{{"id", r.id},
                         {"path", r.path},
                         {"label", r.label},
                         {"modality", r.modality},
                         {"group", r.group}};
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("short write on manifest " + path);
}

}  // namespace hst
