// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0
//
// Model manifest: which projections exist, their shapes, and where their
// weights live in the .dst weight store. Weights are stored d_in x d_out so
// a projection computes X * W.
//
// JSON form:
//   {
//     "layers": 32,
//     "attention": "mha" | "gqa",
//     "roles": { "q": {"d_in": 4096, "d_out": 4096, "tensor": "layers.{layer}.q"}, ... },
//     "grouping": { "q": 2, ... }            // optional, groupable roles only
//   }

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "drank/role.hpp"

namespace drank {

enum class AttentionKind { mha, gqa };

class ManifestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RoleSpec {
    std::size_t d_in = 0;
    std::size_t d_out = 0;
    std::string tensor_pattern;  // "{layer}" is replaced by the layer index

    bool operator==(const RoleSpec&) const = default;
};

struct ModelManifest {
    std::size_t layers = 0;
    AttentionKind attention = AttentionKind::mha;
    std::map<Role, RoleSpec> roles;
    std::map<Role, std::size_t> grouping;

    [[nodiscard]] bool has(Role r) const { return roles.contains(r); }
    [[nodiscard]] const RoleSpec& spec(Role r) const;
    [[nodiscard]] std::string tensor_name(std::size_t layer, Role r) const;
    [[nodiscard]] std::uint64_t original_params() const;

    /// Throws ManifestError on inconsistent contents.
    void validate() const;

    [[nodiscard]] static ModelManifest from_json(std::string_view text);
    [[nodiscard]] std::string to_json() const;

    bool operator==(const ModelManifest&) const = default;
};

[[nodiscard]] ModelManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const ModelManifest& m, const std::filesystem::path& path);

[[nodiscard]] std::string_view attention_name(AttentionKind a) noexcept;

/// Default tensor name pattern for a role, "layers.{layer}.<role>".
[[nodiscard]] std::string default_tensor_pattern(Role r);

}  // namespace drank
