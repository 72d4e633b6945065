// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include "drank/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "drank/allocator.hpp"
#include "drank/effective_rank.hpp"
#include "drank/linalg.hpp"

namespace drank {

using json = nlohmann::json;

namespace {

constexpr std::string_view kFormat = "drank-factored-v1";

// Integerisation order when carrying unspent budget between types.
constexpr std::array<Role, 7> kChainOrder = {Role::q, Role::k, Role::v, Role::up, Role::gate, Role::o, Role::down};

struct PreparedGroup {
    LayerGroup group;
    std::vector<GramStats> member_grams;
    SvdResult scaled_svd;
};

std::vector<Role> present_roles(const ModelManifest& m) {
    std::vector<Role> out;
    for (Role r : kChainOrder)
        if (m.has(r)) out.push_back(r);
    return out;
}

Matrix load_weight(const ModelManifest& m, const TensorStore& weights, std::size_t layer, Role r) {
    const auto name = m.tensor_name(layer, r);
    Matrix w = weights.matrix(name);
    const auto& s = m.spec(r);
    if (w.rows() != s.d_in || w.cols() != s.d_out) {
        throw StoreError(StoreError::Kind::shape_mismatch,
                         "weight '" + name + "' is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                             ", manifest expects " + std::to_string(s.d_in) + "x" + std::to_string(s.d_out));
    }
    return w;
}

GramStats load_member_gram(const ModelManifest& m, const TensorStore& grams, std::size_t layer, Role r) {
    GramStats g = load_gram(grams, layer, r);
    const auto d = m.spec(r).d_in;
    if (g.gram.rows() != d || g.gram.cols() != d) {
        throw StoreError(StoreError::Kind::shape_mismatch, "gram for layer " + std::to_string(layer) + " role " +
                                                               std::string(role_name(r)) + " is not " +
                                                               std::to_string(d) + "x" + std::to_string(d));
    }
    return g;
}

PreparedGroup prepare_group(const ModelManifest& m, const TensorStore& weights, const TensorStore& grams, Role r,
                            const std::vector<std::size_t>& members, WhitenerOrientation orientation, double ridge) {
    PreparedGroup p;
    p.group.role = r;
    p.group.members = members;
    for (auto layer : members) {
        p.group.weights.push_back(load_weight(m, weights, layer, r));
        p.member_grams.push_back(load_member_gram(m, grams, layer, r));
    }
    p.group.whitener = build_whitener(sum_grams(p.member_grams), ridge, orientation);
    p.scaled_svd = svd(scaled_group_matrix(p.group));
    return p;
}

std::vector<PreparedGroup> prepare_role(const ModelManifest& m, const TensorStore& weights, const TensorStore& grams,
                                        Role r, std::size_t n, WhitenerOrientation orientation, double ridge) {
    std::vector<PreparedGroup> out;
    for (const auto& members : form_groups(m.layers, n)) {
        out.push_back(prepare_group(m, weights, grams, r, members, orientation, ridge));
    }
    return out;
}

AllocationProblem role_problem(const RolePlan& rp, double budget) {
    AllocationProblem p;
    p.budget = budget;
    for (const auto& g : rp.groups) {
        p.reff.push_back(g.reff);
        p.omega.push_back(g.omega);
        p.kmax.push_back(g.kmax);
    }
    return p;
}

std::vector<double> k_real_of(const RolePlan& rp) {
    std::vector<double> k;
    for (const auto& g : rp.groups) k.push_back(g.k_real);
    return k;
}

void apply_allocation(RolePlan& rp, const Allocation& a, std::size_t offset = 0) {
    for (std::size_t i = 0; i < rp.groups.size(); ++i) {
        auto& g = rp.groups[i];
        g.k_int = a.k_int[offset + i];
        g.params = g.k_int * g.omega;
    }
    rp.spent = 0;
    for (const auto& g : rp.groups) rp.spent += g.params;
}

std::string orientation_name(WhitenerOrientation o) { return o == WhitenerOrientation::upper ? "upper" : "lower"; }

double rel_disagreement(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

void round_to_storage(Matrix& m, DType storage) {
    if (storage != DType::f32) return;
    for (auto& v : m.values()) v = static_cast<double>(static_cast<float>(v));
}

json layer_errors_to_json(const LayerErrors& e) {
    return {{"layer", e.layer},
            {"frob_err", e.frob_err},
            {"rel_frob_err", e.rel_frob_err},
            {"activation_weighted_err", e.activation_weighted_err}};
}

LayerErrors layer_errors_from_json(const json& j) {
    LayerErrors e;
    e.layer = j.at("layer").get<std::size_t>();
    e.frob_err = j.at("frob_err").get<double>();
    e.rel_frob_err = j.at("rel_frob_err").get<double>();
    e.activation_weighted_err = j.at("activation_weighted_err").get<double>();
    return e;
}

Role role_from_json(const json& j) {
    auto r = parse_role(j.get<std::string>());
    if (!r) throw std::invalid_argument("unknown role '" + j.get<std::string>() + "'");
    return *r;
}

const std::string& required_metadata(const TensorStore& store, const std::string& key) {
    auto it = store.metadata().find(key);
    if (it == store.metadata().end()) {
        throw StoreError(StoreError::Kind::missing, "compressed store lacks metadata '" + key + "'");
    }
    return it->second;
}

}  // namespace

const RolePlan& CompressionPlan::role(Role r) const {
    for (const auto& rp : roles)
        if (rp.role == r) return rp;
    throw std::out_of_range("plan has no role '" + std::string(role_name(r)) + "'");
}

std::size_t effective_group_size(const ModelManifest& m, Role r, std::optional<std::size_t> requested) {
    if (requested && *requested == 0) throw std::invalid_argument("group size must be at least 1");
    if (m.attention == AttentionKind::gqa) {
        if (requested && *requested > 1) {
            throw PolicyError("group size " + std::to_string(*requested) +
                              " rejected: grouped-query attention models compress every projection per layer "
                              "(n = 1), because concatenating narrow K/V matrices inflates the joint rank and "
                              "leaves fewer ranks per matrix at a fixed ratio");
        }
        return 1;
    }
    if (!groupable(r)) return 1;
    if (requested) return *requested;
    if (auto it = m.grouping.find(r); it != m.grouping.end()) return it->second;
    return 2;
}

std::vector<std::vector<std::size_t>> form_groups(std::size_t layers, std::size_t n) {
    if (n == 0) throw std::invalid_argument("form_groups: n must be >= 1");
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < layers; start += n) {
        std::vector<std::size_t> g;
        for (std::size_t l = start; l < std::min(layers, start + n); ++l) g.push_back(l);
        out.push_back(std::move(g));
    }
    return out;
}

CompressionPlan plan(const ModelManifest& manifest, const TensorStore& weights, const TensorStore& grams,
                     const PlanOptions& options) {
    manifest.validate();
    if (!(options.theta > 0.0 && options.theta < 1.0)) throw std::invalid_argument("ratio must lie in (0, 1)");
    if (!(options.beta >= 0.0 && options.beta < 1.0)) throw std::invalid_argument("beta must lie in [0, 1)");

    CompressionPlan p;
    p.theta = options.theta;
    p.beta = options.beta;
    p.attention = manifest.attention;
    p.pooled_budget = options.pooled_budget;
    p.carry_remainder = options.carry_remainder;
    p.orientation = options.orientation;
    p.ridge = options.ridge;

    const auto roles = present_roles(manifest);
    for (Role r : roles) {
        const auto& spec = manifest.spec(r);
        RolePlan rp;
        rp.role = r;
        rp.group_size = effective_group_size(manifest, r, options.group_size);
        rp.d_in = spec.d_in;
        rp.d_out = spec.d_out;
        rp.original_params = static_cast<std::uint64_t>(manifest.layers) * spec.d_in * spec.d_out;
        rp.base_budget = static_cast<double>(rp.original_params) * (1.0 - options.theta);
        rp.budget = rp.base_budget;

        for (const auto& prepared :
             prepare_role(manifest, weights, grams, r, rp.group_size, options.orientation, options.ridge)) {
            GroupPlan g;
            g.members = prepared.group.members;
            g.reff = effective_rank(prepared.scaled_svd.singular_values);
            g.n_singular = prepared.scaled_svd.rank();
            g.omega = spec.d_in + g.members.size() * spec.d_out;
            g.kmax = prepared.group.max_rank();
            g.ridge_used = prepared.group.whitener.ridge_used;
            if (g.ridge_used > 0.0) {
                p.warnings.push_back("role " + std::string(role_name(r)) + " group starting at layer " +
                                     std::to_string(g.members.front()) + ": Gram matrix needed ridge " +
                                     std::to_string(g.ridge_used));
            }
            rp.groups.push_back(std::move(g));
        }
        p.original_params += rp.original_params;
        p.roles.push_back(std::move(rp));
    }
    p.budget = static_cast<double>(p.original_params) * (1.0 - options.theta);

    // Closed-form real ranks.
    if (options.pooled_budget) {
        AllocationProblem pooled;
        pooled.budget = p.budget;
        for (const auto& rp : p.roles) {
            auto part = role_problem(rp, 1.0);
            pooled.reff.insert(pooled.reff.end(), part.reff.begin(), part.reff.end());
            pooled.omega.insert(pooled.omega.end(), part.omega.begin(), part.omega.end());
            pooled.kmax.insert(pooled.kmax.end(), part.kmax.begin(), part.kmax.end());
        }
        const auto k = allocate_real(pooled);
        std::size_t offset = 0;
        for (auto& rp : p.roles) {
            for (auto& g : rp.groups) g.k_real_allocated = g.k_real = k[offset++];
        }
    } else {
        for (auto& rp : p.roles) {
            const auto k = allocate_real(role_problem(rp, rp.base_budget));
            for (std::size_t i = 0; i < rp.groups.size(); ++i) rp.groups[i].k_real_allocated = rp.groups[i].k_real = k[i];
        }
    }

    // Q/K -> V rebalance on the real ranks.
    auto find = [&](Role r) -> RolePlan* {
        for (auto& rp : p.roles)
            if (rp.role == r) return &rp;
        return nullptr;
    };
    RolePlan* q = find(Role::q);
    RolePlan* k = find(Role::k);
    RolePlan* v = find(Role::v);
    if (q && k && v && options.beta > 0.0) {
        if (q->groups.size() != k->groups.size() || q->groups.size() != v->groups.size()) {
            p.warnings.push_back("Q/K/V group counts differ; rank rebalancing skipped");
        } else {
            QkvRankLists lists;
            for (std::size_t i = 0; i < v->groups.size(); ++i) {
                lists.lq.push_back(q->groups[i].k_real);
                lists.lk.push_back(k->groups[i].k_real);
                lists.lv.push_back(v->groups[i].k_real);
                lists.omega_q.push_back(q->groups[i].omega);
                lists.omega_k.push_back(k->groups[i].omega);
                lists.omega_v.push_back(v->groups[i].omega);
                lists.kmax_v.push_back(static_cast<double>(v->groups[i].kmax));
            }
            const auto out = rebalance_qkv(lists, options.beta);
            for (std::size_t i = 0; i < v->groups.size(); ++i) {
                q->groups[i].k_real = out.lq[i];
                k->groups[i].k_real = out.lk[i];
                v->groups[i].k_real = out.lv[i];
            }
            p.rebalance_increment = out.increment;
            p.rebalance_transferred = out.transferred_params;
            p.rebalance_returned = out.returned_params;
            if (!options.pooled_budget) {
                for (RolePlan* rp : {q, k, v}) {
                    double b = 0.0;
                    for (const auto& g : rp->groups) b += g.k_real * static_cast<double>(g.omega);
                    rp->budget = b;
                }
            }
        }
    }

    // Integer ranks.
    if (options.pooled_budget) {
        AllocationProblem pooled;
        pooled.budget = p.budget;
        std::vector<double> kr;
        for (const auto& rp : p.roles) {
            auto part = role_problem(rp, 1.0);
            pooled.reff.insert(pooled.reff.end(), part.reff.begin(), part.reff.end());
            pooled.omega.insert(pooled.omega.end(), part.omega.begin(), part.omega.end());
            pooled.kmax.insert(pooled.kmax.end(), part.kmax.begin(), part.kmax.end());
            const auto kk = k_real_of(rp);
            kr.insert(kr.end(), kk.begin(), kk.end());
        }
        const auto a = integerize(pooled, kr);
        std::size_t offset = 0;
        for (auto& rp : p.roles) {
            apply_allocation(rp, a, offset);
            offset += rp.groups.size();
            rp.budget = rp.base_budget;
        }
    } else {
        double carry = 0.0;
        std::uint64_t spent_so_far = 0;
        for (std::size_t i = 0; i < p.roles.size(); ++i) {
            auto& rp = p.roles[i];
            if (options.carry_remainder) {
                rp.budget = (i + 1 == p.roles.size()) ? p.budget - static_cast<double>(spent_so_far) : rp.budget + carry;
            }
            try {
                apply_allocation(rp, integerize(role_problem(rp, rp.budget), k_real_of(rp)));
            } catch (const InfeasibleBudget& e) {
                throw InfeasibleBudget("role " + std::string(role_name(rp.role)) + ": " + e.what());
            }
            carry = rp.budget - static_cast<double>(rp.spent);
            spent_so_far += rp.spent;
        }
    }

    for (const auto& rp : p.roles) p.spent += rp.spent;
    if (options.theta >= 0.4) {
        p.warnings.push_back("ratio >= 0.4: published results at these ratios also update downstream layer weights "
                             "with the deviated inputs, which this engine does not do");
    }
    return p;
}

std::string plan_to_json(const CompressionPlan& p) {
    json j;
    j["format"] = "drank-plan-v1";
    j["theta"] = p.theta;
    j["beta"] = p.beta;
    j["attention"] = attention_name(p.attention);
    j["budget_mode"] = p.pooled_budget ? "pooled" : "per_type";
    j["carry_remainder"] = p.carry_remainder;
    j["whitener"] = orientation_name(p.orientation);
    j["ridge"] = p.ridge;
    j["totals"] = {{"original_params", p.original_params},
                   {"budget", p.budget},
                   {"spent", p.spent},
                   {"stored_ratio", p.stored_ratio()}};
    j["rebalance"] = {{"increment", p.rebalance_increment},
                      {"transferred_params", p.rebalance_transferred},
                      {"returned_params", p.rebalance_returned}};
    j["warnings"] = p.warnings;
    json roles = json::array();
    for (const auto& rp : p.roles) {
        json groups = json::array();
        for (const auto& g : rp.groups) {
            groups.push_back({{"members", g.members},
                              {"reff", g.reff},
                              {"n_singular", g.n_singular},
                              {"k_real_allocated", g.k_real_allocated},
                              {"k_real", g.k_real},
                              {"k_int", g.k_int},
                              {"omega", g.omega},
                              {"kmax", g.kmax},
                              {"params", g.params},
                              {"ridge_used", g.ridge_used}});
        }
        roles.push_back({{"role", role_name(rp.role)},
                         {"group_size", rp.group_size},
                         {"d_in", rp.d_in},
                         {"d_out", rp.d_out},
                         {"original_params", rp.original_params},
                         {"base_budget", rp.base_budget},
                         {"budget", rp.budget},
                         {"spent", rp.spent},
                         {"groups", groups}});
    }
    j["roles"] = roles;
    return j.dump(2);
}

CompressionPlan plan_from_json(const std::string& text) {
    CompressionPlan p;
    try {
        const auto j = json::parse(text);
        if (j.value("format", "") != "drank-plan-v1") throw std::invalid_argument("not a drank plan document");
        p.theta = j.at("theta").get<double>();
        p.beta = j.at("beta").get<double>();
        p.attention = j.at("attention").get<std::string>() == "gqa" ? AttentionKind::gqa : AttentionKind::mha;
        p.pooled_budget = j.at("budget_mode").get<std::string>() == "pooled";
        p.carry_remainder = j.at("carry_remainder").get<bool>();
        p.orientation = j.at("whitener").get<std::string>() == "lower" ? WhitenerOrientation::lower
                                                                       : WhitenerOrientation::upper;
        p.ridge = j.at("ridge").get<double>();
        const auto& t = j.at("totals");
        p.original_params = t.at("original_params").get<std::uint64_t>();
        p.budget = t.at("budget").get<double>();
        p.spent = t.at("spent").get<std::uint64_t>();
        const auto& rb = j.at("rebalance");
        p.rebalance_increment = rb.at("increment").get<double>();
        p.rebalance_transferred = rb.at("transferred_params").get<double>();
        p.rebalance_returned = rb.at("returned_params").get<double>();
        p.warnings = j.at("warnings").get<std::vector<std::string>>();
        for (const auto& rj : j.at("roles")) {
            RolePlan rp;
            rp.role = role_from_json(rj.at("role"));
            rp.group_size = rj.at("group_size").get<std::size_t>();
            rp.d_in = rj.at("d_in").get<std::size_t>();
            rp.d_out = rj.at("d_out").get<std::size_t>();
            rp.original_params = rj.at("original_params").get<std::uint64_t>();
            rp.base_budget = rj.at("base_budget").get<double>();
            rp.budget = rj.at("budget").get<double>();
            rp.spent = rj.at("spent").get<std::uint64_t>();
            for (const auto& gj : rj.at("groups")) {
                GroupPlan g;
                g.members = gj.at("members").get<std::vector<std::size_t>>();
                g.reff = gj.at("reff").get<double>();
                g.n_singular = gj.at("n_singular").get<std::size_t>();
                g.k_real_allocated = gj.at("k_real_allocated").get<double>();
                g.k_real = gj.at("k_real").get<double>();
                g.k_int = gj.at("k_int").get<std::uint64_t>();
                g.omega = gj.at("omega").get<std::uint64_t>();
                g.kmax = gj.at("kmax").get<std::uint64_t>();
                g.params = gj.at("params").get<std::uint64_t>();
                g.ridge_used = gj.at("ridge_used").get<double>();
                rp.groups.push_back(std::move(g));
            }
            p.roles.push_back(std::move(rp));
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed plan document: ") + e.what());
    }
    return p;
}

std::string basis_tensor_name(Role r, std::size_t group) {
    return "B/" + std::string(role_name(r)) + "/" + std::to_string(group);
}

std::string coeff_tensor_name(Role r, std::size_t layer) {
    return "C/" + std::string(role_name(r)) + "/" + std::to_string(layer);
}

CompressedModel compress_model(const CompressionPlan& plan, const ModelManifest& manifest, const TensorStore& weights,
                               const TensorStore& grams, const CompressOptions& options) {
    manifest.validate();
    CompressedModel out;
    for (const auto& rp : plan.roles) {
        const auto& spec = manifest.spec(rp.role);
        if (spec.d_in != rp.d_in || spec.d_out != rp.d_out) {
            throw ManifestError("plan and manifest disagree on the shape of role " + std::string(role_name(rp.role)));
        }
        for (std::size_t gi = 0; gi < rp.groups.size(); ++gi) {
            const auto& gp = rp.groups[gi];
            auto prepared =
                prepare_group(manifest, weights, grams, rp.role, gp.members, plan.orientation, plan.ridge);
            FactoredGroup f = compress_group(prepared.group, prepared.scaled_svd, gp.k_int);
            round_to_storage(f.B, options.storage);
            for (auto& c : f.C) round_to_storage(c, options.storage);

            GroupReport rep;
            rep.role = rp.role;
            rep.group = gi;
            rep.members = gp.members;
            rep.k = f.k;
            rep.tail_energy = f.tail_energy();
            rep.whitened_err_sq = whitened_group_error_sq(prepared.group, f);
            rep.layers = compression_report(prepared.group.weights, f, prepared.member_grams);
            out.reports.push_back(std::move(rep));

            out.store.insert(basis_tensor_name(rp.role, gi), Tensor::from_matrix(f.B, options.storage));
            out.stored_params += f.B.size();
            for (std::size_t i = 0; i < f.C.size(); ++i) {
                out.store.insert(coeff_tensor_name(rp.role, gp.members[i]), Tensor::from_matrix(f.C[i], options.storage));
                out.stored_params += f.C[i].size();
            }
        }
    }
    if (out.stored_params != plan.spent) {
        throw std::logic_error("stored parameter count " + std::to_string(out.stored_params) +
                               " differs from the plan's " + std::to_string(plan.spent));
    }
    auto& md = out.store.metadata();
    md["format"] = std::string(kFormat);
    md["storage_dtype"] = std::string(dtype_name(options.storage));
    md["manifest"] = manifest.to_json();
    md["plan"] = plan_to_json(plan);
    md["report"] = reports_to_json(out.reports);
    return out;
}

std::string reports_to_json(const std::vector<GroupReport>& reports) {
    json arr = json::array();
    for (const auto& r : reports) {
        json layers = json::array();
        for (const auto& e : r.layers) layers.push_back(layer_errors_to_json(e));
        arr.push_back({{"role", role_name(r.role)},
                       {"group", r.group},
                       {"members", r.members},
                       {"k", r.k},
                       {"tail_energy", r.tail_energy},
                       {"whitened_err_sq", r.whitened_err_sq},
                       {"layers", layers}});
    }
    return arr.dump(2);
}

std::vector<GroupReport> reports_from_json(const std::string& text) {
    std::vector<GroupReport> out;
    try {
        for (const auto& j : json::parse(text)) {
            GroupReport r;
            r.role = role_from_json(j.at("role"));
            r.group = j.at("group").get<std::size_t>();
            r.members = j.at("members").get<std::vector<std::size_t>>();
            r.k = j.at("k").get<std::size_t>();
            r.tail_energy = j.at("tail_energy").get<double>();
            r.whitened_err_sq = j.at("whitened_err_sq").get<double>();
            for (const auto& lj : j.at("layers")) r.layers.push_back(layer_errors_from_json(lj));
            out.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed compression report: ") + e.what());
    }
    return out;
}

VerificationReport verify(const TensorStore& weights, const TensorStore& compressed, const TensorStore& grams) {
    if (required_metadata(compressed, "format") != kFormat) {
        throw StoreError(StoreError::Kind::malformed_header, "not a drank compressed store");
    }
    const auto manifest = ModelManifest::from_json(required_metadata(compressed, "manifest"));
    const auto recorded = reports_from_json(required_metadata(compressed, "report"));

    VerificationReport vr;
    vr.original_params = manifest.original_params();
    for (const auto& rec : recorded) {
        const auto& spec = manifest.spec(rec.role);
        FactoredGroup f;
        f.role = rec.role;
        f.members = rec.members;
        f.k = rec.k;
        f.B = compressed.matrix(basis_tensor_name(rec.role, rec.group));
        if (f.B.rows() != spec.d_in || f.B.cols() != rec.k) {
            throw StoreError(StoreError::Kind::shape_mismatch,
                             "basis " + basis_tensor_name(rec.role, rec.group) + " does not match the manifest");
        }
        vr.stored_params += f.B.size();
        std::vector<Matrix> originals;
        std::vector<GramStats> member_grams;
        for (auto layer : rec.members) {
            Matrix c = compressed.matrix(coeff_tensor_name(rec.role, layer));
            if (c.rows() != rec.k || c.cols() != spec.d_out) {
                throw StoreError(StoreError::Kind::shape_mismatch,
                                 "coefficients " + coeff_tensor_name(rec.role, layer) + " do not match the manifest");
            }
            vr.stored_params += c.size();
            f.C.push_back(std::move(c));
            originals.push_back(load_weight(manifest, weights, layer, rec.role));
            member_grams.push_back(load_member_gram(manifest, grams, layer, rec.role));
        }

        GroupVerification gv;
        gv.role = rec.role;
        gv.group = rec.group;
        gv.members = rec.members;
        gv.k = rec.k;
        gv.layers = compression_report(originals, f, member_grams);
        for (std::size_t i = 0; i < gv.layers.size() && i < rec.layers.size(); ++i) {
            const auto& a = gv.layers[i];
            const auto& b = rec.layers[i];
            gv.max_rel_disagreement = std::max({gv.max_rel_disagreement, rel_disagreement(a.frob_err, b.frob_err),
                                                rel_disagreement(a.rel_frob_err, b.rel_frob_err),
                                                rel_disagreement(a.activation_weighted_err, b.activation_weighted_err)});
        }
        gv.flagged = gv.layers.size() != rec.layers.size() || gv.max_rel_disagreement > kVerifyTolerance;
        if (gv.flagged) ++vr.flagged;
        vr.groups.push_back(std::move(gv));
    }
    return vr;
}

std::string verification_to_json(const VerificationReport& r) {
    json groups = json::array();
    for (const auto& g : r.groups) {
        json layers = json::array();
        for (const auto& e : g.layers) layers.push_back(layer_errors_to_json(e));
        groups.push_back({{"role", role_name(g.role)},
                          {"group", g.group},
                          {"members", g.members},
                          {"k", g.k},
                          {"flagged", g.flagged},
                          {"max_rel_disagreement", g.max_rel_disagreement},
                          {"layers", layers}});
    }
    json j = {{"format", "drank-verify-v1"},
              {"ok", r.ok()},
              {"flagged", r.flagged},
              {"tolerance", kVerifyTolerance},
              {"stored_params", r.stored_params},
              {"original_params", r.original_params},
              {"groups", groups}};
    return j.dump(2);
}

std::string format_plan(const CompressionPlan& p) {
    std::ostringstream os;
    os << std::fixed;
    os << "ratio " << std::setprecision(3) << p.theta << "  beta " << p.beta << "  attention "
       << attention_name(p.attention) << "  budget " << (p.pooled_budget ? "pooled" : "per-type") << "  whitener "
       << orientation_name(p.orientation) << "\n";
    os << "parameters: original " << p.original_params << "  budget " << std::setprecision(1) << p.budget
       << "  stored " << p.spent << "  (" << std::setprecision(4) << p.stored_ratio() << " of original)\n";
    if (p.rebalance_transferred > 0.0) {
        os << "rebalance: " << std::setprecision(1) << p.rebalance_transferred << " params Q/K -> V, +"
           << std::setprecision(3) << p.rebalance_increment << " rank per V group";
        if (p.rebalance_returned > 0.0) os << " (" << std::setprecision(1) << p.rebalance_returned << " returned)";
        os << "\n";
    }
    for (const auto& rp : p.roles) {
        os << "\n[" << role_name(rp.role) << "] " << rp.d_in << "x" << rp.d_out << "  n=" << rp.group_size
           << "  budget " << std::setprecision(1) << rp.budget << "  spent " << rp.spent << "\n";
        os << "  group  layers      R_eff    k_real  k_int   kmax  omega\n";
        for (std::size_t i = 0; i < rp.groups.size(); ++i) {
            const auto& g = rp.groups[i];
            std::string layers = std::to_string(g.members.front());
            if (g.members.size() > 1) layers += "-" + std::to_string(g.members.back());
            os << "  " << std::setw(5) << i << "  " << std::left << std::setw(9) << layers << std::right
               << std::setw(8) << std::setprecision(2) << g.reff << "  " << std::setw(8)
               << std::setprecision(2) << g.k_real << "  " << std::setw(5) << g.k_int << "  " << std::setw(5)
               << g.kmax << "  " << std::setw(5) << g.omega << "\n";
        }
    }
    for (const auto& w : p.warnings) os << "warning: " << w << "\n";
    return os.str();
}

}  // namespace drank
