// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0
//
// Whole-model orchestration: plan -> rebalance -> compress -> verify.
//
// Planning, per matrix type:
//   1. split layers into consecutive groups of n (a trailing remainder forms
//      a smaller last group); O and down are never grouped, and GQA models
//      use n = 1 throughout,
//   2. whiten each concatenated group with the Cholesky factor of its summed
//      Gram matrices and take the effective rank of S_g W_g,
//   3. allocate the type's budget N d_in d_out (1 - theta) with the
//      closed-form Lagrangian ranks,
//   4. shift a beta share of the Q/K budget onto V,
//   5. integerise each type.
// Unspent remainder of one type is carried into the next type's budget
// (order q, k, v, up, gate, o, down) unless PlanOptions::carry_remainder is
// off, which bounds the global shortfall by a single per-rank cost.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "drank/compressor.hpp"
#include "drank/manifest.hpp"
#include "drank/rebalance.hpp"
#include "drank/tensor_store.hpp"
#include "drank/whitening.hpp"

namespace drank {

/// A request that the grouping policy forbids (e.g. n > 1 on a GQA model).
class PolicyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PlanOptions {
    double theta = 0.2;
    double beta = kDefaultBeta;
    /// Unset: 2 for MHA (or the manifest's grouping), 1 for GQA.
    std::optional<std::size_t> group_size;
    bool pooled_budget = false;
    bool carry_remainder = true;
    WhitenerOrientation orientation = WhitenerOrientation::upper;
    double ridge = 0.0;
};

struct GroupPlan {
    std::vector<std::size_t> members;
    double reff = 1.0;
    std::size_t n_singular = 0;
    double k_real_allocated = 0.0;  // closed-form rank before rebalancing
    double k_real = 0.0;            // after rebalancing
    std::uint64_t k_int = 0;
    std::uint64_t omega = 0;
    std::uint64_t kmax = 0;
    std::uint64_t params = 0;
    double ridge_used = 0.0;
};

struct RolePlan {
    Role role = Role::q;
    std::size_t group_size = 1;
    std::size_t d_in = 0;
    std::size_t d_out = 0;
    std::uint64_t original_params = 0;
    double base_budget = 0.0;  // original_params * (1 - theta)
    double budget = 0.0;       // after rebalancing and carry-in
    std::uint64_t spent = 0;
    std::vector<GroupPlan> groups;
};

struct CompressionPlan {
    double theta = 0.0;
    double beta = 0.0;
    AttentionKind attention = AttentionKind::mha;
    bool pooled_budget = false;
    bool carry_remainder = true;
    WhitenerOrientation orientation = WhitenerOrientation::upper;
    double ridge = 0.0;
    std::vector<RolePlan> roles;
    std::uint64_t original_params = 0;
    double budget = 0.0;
    std::uint64_t spent = 0;
    double rebalance_increment = 0.0;
    double rebalance_transferred = 0.0;
    double rebalance_returned = 0.0;
    std::vector<std::string> warnings;

    [[nodiscard]] const RolePlan& role(Role r) const;
    [[nodiscard]] double stored_ratio() const {
        return original_params == 0 ? 0.0 : static_cast<double>(spent) / static_cast<double>(original_params);
    }
};

/// Group size the policy assigns to a role.
[[nodiscard]] std::size_t effective_group_size(const ModelManifest& m, Role r, std::optional<std::size_t> requested);

/// Consecutive layer groups of size n; the last one may be shorter.
[[nodiscard]] std::vector<std::vector<std::size_t>> form_groups(std::size_t layers, std::size_t n);

/// Throws PolicyError, ManifestError, StoreError, InfeasibleBudget or
/// std::invalid_argument.
[[nodiscard]] CompressionPlan plan(const ModelManifest& manifest, const TensorStore& weights, const TensorStore& grams,
                                   const PlanOptions& options);

[[nodiscard]] std::string plan_to_json(const CompressionPlan& p);
[[nodiscard]] CompressionPlan plan_from_json(const std::string& text);

struct GroupReport {
    Role role = Role::q;
    std::size_t group = 0;
    std::vector<std::size_t> members;
    std::size_t k = 0;
    double tail_energy = 0.0;       // sum of squared discarded singular values of S_g W_g
    double whitened_err_sq = 0.0;   // measured ||S_g (W_g - B C)||_F^2
    std::vector<LayerErrors> layers;
};

struct CompressedModel {
    TensorStore store;
    std::vector<GroupReport> reports;
    std::uint64_t stored_params = 0;
};

struct CompressOptions {
    DType storage = DType::f32;
};

// Compressed stores hold B/<role>/<group> (d_in x k) and C/<role>/<layer>
// (k x d_out), plus metadata keys "manifest", "plan" and "report".
[[nodiscard]] std::string basis_tensor_name(Role r, std::size_t group);
[[nodiscard]] std::string coeff_tensor_name(Role r, std::size_t layer);

[[nodiscard]] CompressedModel compress_model(const CompressionPlan& plan, const ModelManifest& manifest,
                                             const TensorStore& weights, const TensorStore& grams,
                                             const CompressOptions& options = {});

[[nodiscard]] std::string reports_to_json(const std::vector<GroupReport>& reports);
[[nodiscard]] std::vector<GroupReport> reports_from_json(const std::string& text);

/// Flag threshold for disagreement between stored and recomputed errors.
inline constexpr double kVerifyTolerance = 1e-5;

struct GroupVerification {
    Role role = Role::q;
    std::size_t group = 0;
    std::vector<std::size_t> members;
    std::size_t k = 0;
    bool flagged = false;
    double max_rel_disagreement = 0.0;
    std::vector<LayerErrors> layers;  // recomputed from stored factors
};

struct VerificationReport {
    std::vector<GroupVerification> groups;
    std::size_t flagged = 0;
    std::uint64_t stored_params = 0;
    std::uint64_t original_params = 0;

    [[nodiscard]] bool ok() const noexcept { return flagged == 0; }
};

/// Recomputes every error from the factors in `compressed` and compares
/// against the report recorded at compression time. Throws StoreError or
/// ManifestError when the store does not match the manifest.
[[nodiscard]] VerificationReport verify(const TensorStore& weights, const TensorStore& compressed,
                                        const TensorStore& grams);

[[nodiscard]] std::string verification_to_json(const VerificationReport& r);

/// Human-readable table of a plan.
[[nodiscard]] std::string format_plan(const CompressionPlan& p);

}  // namespace drank
