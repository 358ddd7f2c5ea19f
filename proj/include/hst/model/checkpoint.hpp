#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hst/core/error.hpp"
#include "hst/model/params.hpp"

namespace hst {

inline nlohmann::json hst_config_to_json(const HstConfig& cfg) {
    return nlohmann::json{{"variant", cfg.variant},
                          {"image_size", cfg.image_size},
                          {"patch", cfg.patch},
                          {"window", cfg.window},
                          {"depths", cfg.depths},
                          {"dims", cfg.dims},
                          {"heads", cfg.heads},
                          {"mlp_ratio", cfg.mlp_ratio},
                          {"num_classes", cfg.num_classes},
                          {"shift_mask", cfg.shift_mask},
                          {"ln_eps", cfg.ln_eps}};
}

inline HstConfig hst_config_from_json(const nlohmann::json& j) {
    HstConfig cfg;
    try {
        cfg.variant = j.at("variant").get<std::string>();
        cfg.image_size = j.at("image_size").get<std::size_t>();
        cfg.patch = j.at("patch").get<std::size_t>();
        cfg.window = j.at("window").get<std::size_t>();
        cfg.depths = j.at("depths").get<std::array<std::size_t, 4>>();
        cfg.dims = j.at("dims").get<std::array<std::size_t, 4>>();
        cfg.heads = j.at("heads").get<std::array<std::size_t, 4>>();
        cfg.mlp_ratio = j.at("mlp_ratio").get<std::size_t>();
        cfg.num_classes = j.at("num_classes").get<std::size_t>();
        cfg.shift_mask = j.at("shift_mask").get<bool>();
        cfg.ln_eps = j.at("ln_eps").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed model config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

// File layout: "HSTCKPT1", u64 little-endian header length, JSON header
// (config echo + tensor directory), then contiguous f32 little-endian payload.
template <typename T>
void save_checkpoint(HstParams<T>& params, const HstConfig& cfg, const std::string& path) {
    nlohmann::json dir = nlohmann::json::array();
    std::uint64_t offset = 0;
    params.visit([&](const std::string& name, Tensor<T>& t) {
        dir.push_back({{"name", name},
                       {"shape", t.shape()},
                       {"dtype", "f32"},
                       {"offset", offset}});
        offset += std::uint64_t(t.size()) * 4;
    });
    nlohmann::json header{{"format", 1}, {"config", hst_config_to_json(cfg)}, {"tensors", dir}};
    const std::string head_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);
    out.write("HSTCKPT1", 8);
    const std::uint64_t hlen = head_str.size();
    unsigned char lenb[8];
    for (int i = 0; i < 8; ++i) lenb[i] = (unsigned char)(hlen >> (8 * i) & 0xFF);
    out.write(reinterpret_cast<char*>(lenb), 8);
    out.write(head_str.data(), std::streamsize(head_str.size()));
    params.visit([&](const std::string&, Tensor<T>& t) {
        for (T v : t.values()) {
            const float f = float(v);
            char b[4];
            std::memcpy(b, &f, 4);
            out.write(b, 4);
        }
    });
    if (!out) throw IoError("short write to " + path);
}

namespace detail {

struct CheckpointFile {
    nlohmann::json header;
    std::vector<char> payload;
};

inline CheckpointFile read_checkpoint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "HSTCKPT1", 8) != 0) {
        throw InputError(path + ": not a checkpoint file");
    }
    unsigned char lenb[8];
    in.read(reinterpret_cast<char*>(lenb), 8);
    if (!in) throw InputError(path + ": truncated header length");
    std::uint64_t hlen = 0;
    for (int i = 0; i < 8; ++i) hlen |= std::uint64_t(lenb[i]) << (8 * i);
    std::string head_str(hlen, '\0');
    in.read(head_str.data(), std::streamsize(hlen));
    if (!in) throw InputError(path + ": truncated header");
    CheckpointFile f;
    try {
        f.header = nlohmann::json::parse(head_str);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": bad checkpoint header: " + e.what());
    }
    f.payload.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return f;
}

}  // namespace detail

inline HstConfig load_checkpoint_config(const std::string& path) {
    const auto file = detail::read_checkpoint_file(path);
    if (!file.header.contains("config")) throw InputError(path + ": header lacks config echo");
    return hst_config_from_json(file.header.at("config"));
}

template <typename T>
HstParams<T> load_checkpoint(const std::string& path, const HstConfig& cfg) {
    const auto file = detail::read_checkpoint_file(path);
    if (!file.header.contains("tensors")) throw InputError(path + ": header lacks tensor table");

    struct Entry {
        Shape shape;
        std::uint64_t offset = 0;
        bool used = false;
    };
    std::unordered_map<std::string, Entry> table;
    std::uint64_t expected_offset = 0;
    for (const auto& e : file.header.at("tensors")) {
        Entry ent;
        const std::string name = e.at("name").get<std::string>();
        ent.shape = e.at("shape").get<Shape>();
        ent.offset = e.at("offset").get<std::uint64_t>();
        if (e.at("dtype").get<std::string>() != "f32") {
            throw InputError(path + ": tensor '" + name + "' has unsupported dtype");
        }
        // offsets must tile the payload contiguously: increasing, no overlap
        if (ent.offset != expected_offset) {
            throw InputError(path + ": tensor '" + name + "' offset " +
                             std::to_string(ent.offset) + " does not follow the previous tensor");
        }
        expected_offset += std::uint64_t(numel(ent.shape)) * 4;
        if (!table.emplace(name, std::move(ent)).second) {
            throw InputError(path + ": duplicate tensor '" + name + "'");
        }
    }
    if (expected_offset > file.payload.size()) {
        throw InputError(path + ": payload truncated (" + std::to_string(file.payload.size()) +
                         " bytes, directory needs " + std::to_string(expected_offset) + ")");
    }

    HstParams<T> params(cfg);
    std::size_t used = 0;
    params.visit([&](const std::string& name, Tensor<T>& t) {
        auto it = table.find(name);
        if (it == table.end()) {
            throw InputError(path + ": checkpoint incompatible, missing tensor '" + name + "'");
        }
        if (it->second.shape != t.shape()) {
            throw InputError(path + ": checkpoint incompatible, tensor '" + name + "' has shape " +
                             shape_str(it->second.shape) + ", config wants " +
                             shape_str(t.shape()));
        }
        const char* src = file.payload.data() + it->second.offset;
        auto dst = t.values();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            float f;
            std::memcpy(&f, src + i * 4, 4);
            dst[i] = T(f);
        }
        it->second.used = true;
        ++used;
    });
    if (used != table.size()) {
        for (const auto& [name, ent] : table) {
            if (!ent.used) {
                throw InputError(path + ": checkpoint incompatible, unexpected tensor '" + name +
                                 "'");
            }
        }
    }
    return params;
}

}  // namespace hst
