// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace drank {

/// Projection role inside a transformer block.
enum class Role { q, k, v, o, up, gate, down };

inline constexpr std::array<Role, 7> kAllRoles = {Role::q, Role::k, Role::v, Role::o,
                                                  Role::up, Role::gate, Role::down};

[[nodiscard]] constexpr std::string_view role_name(Role r) noexcept {
    switch (r) {
        case Role::q: return "q";
        case Role::k: return "k";
        case Role::v: return "v";
        case Role::o: return "o";
        case Role::up: return "up";
        case Role::gate: return "gate";
        case Role::down: return "down";
    }
    return "?";
}

[[nodiscard]] constexpr std::optional<Role> parse_role(std::string_view s) noexcept {
    for (Role r : kAllRoles)
        if (role_name(r) == s) return r;
    return std::nullopt;
}

/// Roles that may be grouped across layers; O and down always stand alone.
[[nodiscard]] constexpr bool groupable(Role r) noexcept {
    return r == Role::q || r == Role::k || r == Role::v || r == Role::up || r == Role::gate;
}

}  // namespace drank
