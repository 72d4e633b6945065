// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include "drank/manifest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace drank {

using json = nlohmann::json;

std::string_view attention_name(AttentionKind a) noexcept { return a == AttentionKind::mha ? "mha" : "gqa"; }

std::string default_tensor_pattern(Role r) { return "layers.{layer}." + std::string(role_name(r)); }

const RoleSpec& ModelManifest::spec(Role r) const {
    auto it = roles.find(r);
    if (it == roles.end()) throw ManifestError("manifest has no role '" + std::string(role_name(r)) + "'");
    return it->second;
}

std::string ModelManifest::tensor_name(std::size_t layer, Role r) const {
    std::string name = spec(r).tensor_pattern;
    const std::string token = "{layer}";
    const std::string idx = std::to_string(layer);
    for (auto pos = name.find(token); pos != std::string::npos; pos = name.find(token, pos + idx.size())) {
        name.replace(pos, token.size(), idx);
    }
    return name;
}

std::uint64_t ModelManifest::original_params() const {
    std::uint64_t total = 0;
    for (const auto& [role, s] : roles) total += static_cast<std::uint64_t>(layers) * s.d_in * s.d_out;
    return total;
}

void ModelManifest::validate() const {
    if (layers == 0) throw ManifestError("manifest declares zero layers");
    if (roles.empty()) throw ManifestError("manifest declares no roles");
    for (const auto& [role, s] : roles) {
        if (s.d_in == 0 || s.d_out == 0) {
            throw ManifestError("role '" + std::string(role_name(role)) + "' has a zero dimension");
        }
        if (layers > 1 && s.tensor_pattern.find("{layer}") == std::string::npos) {
            throw ManifestError("tensor pattern for role '" + std::string(role_name(role)) + "' lacks {layer}");
        }
    }
    for (const auto& [role, n] : grouping) {
        if (n == 0) throw ManifestError("group size for '" + std::string(role_name(role)) + "' is zero");
        if (n > 1 && !groupable(role)) {
            throw ManifestError("role '" + std::string(role_name(role)) + "' is never grouped (O and down stay per-layer)");
        }
        if (n > 1 && attention == AttentionKind::gqa) {
            throw ManifestError("grouped-query attention models use group size 1 for every role");
        }
    }
}

ModelManifest ModelManifest::from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
    }
    ModelManifest m;
    try {
        m.layers = j.at("layers").get<std::size_t>();
        const auto att = j.value("attention", std::string("mha"));
        if (att == "mha" || att == "MHA") {
            m.attention = AttentionKind::mha;
        } else if (att == "gqa" || att == "GQA") {
            m.attention = AttentionKind::gqa;
        } else {
            throw ManifestError("unknown attention kind '" + att + "'");
        }
        for (const auto& [key, value] : j.at("roles").items()) {
            auto role = parse_role(key);
            if (!role) throw ManifestError("unknown role '" + key + "'");
            RoleSpec s;
            s.d_in = value.at("d_in").get<std::size_t>();
            s.d_out = value.at("d_out").get<std::size_t>();
            s.tensor_pattern = value.value("tensor", default_tensor_pattern(*role));
            m.roles.emplace(*role, std::move(s));
        }
        if (j.contains("grouping")) {
            for (const auto& [key, value] : j.at("grouping").items()) {
                auto role = parse_role(key);
                if (!role) throw ManifestError("unknown role '" + key + "' in grouping");
                m.grouping[*role] = value.get<std::size_t>();
            }
        }
    } catch (const json::exception& e) {
        throw ManifestError(std::string("malformed manifest: ") + e.what());
    }
    m.validate();
    return m;
}

std::string ModelManifest::to_json() const {
    json j;
    j["layers"] = layers;
    j["attention"] = attention_name(attention);
    json roles_j = json::object();
    for (const auto& [role, s] : roles) {
        roles_j[std::string(role_name(role))] = {{"d_in", s.d_in}, {"d_out", s.d_out}, {"tensor", s.tensor_pattern}};
    }
    j["roles"] = roles_j;
    if (!grouping.empty()) {
        json g = json::object();
        for (const auto& [role, n] : grouping) g[std::string(role_name(role))] = n;
        j["grouping"] = g;
    }
    return j.dump(2);
}

ModelManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open manifest '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ModelManifest::from_json(ss.str());
}

void save_manifest(const ModelManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ManifestError("cannot write manifest '" + path.string() + "'");
    out << m.to_json() << '\n';
}

}  // namespace drank
