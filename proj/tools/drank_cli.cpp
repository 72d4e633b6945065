// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0
//
// drank: plan, compress, verify and benchmark layer-wise low-rank factorings.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "drank/allocator.hpp"
#include "drank/bench.hpp"
#include "drank/manifest.hpp"
#include "drank/pipeline.hpp"
#include "drank/tensor_store.hpp"
#include "support/toy_model.hpp"

namespace fs = std::filesystem;
using namespace drank;

namespace {

struct ModelArgs {
    std::string model;
    std::string gram;
    std::string manifest;
};

struct PlanArgs {
    double ratio = 0.2;
    double beta = kDefaultBeta;
    std::optional<std::size_t> group_size;
    bool pooled = false;
    bool lower = false;
    bool no_carry = false;
};

void add_model_flags(CLI::App* cmd, ModelArgs& m) {
    cmd->add_option("--model", m.model, "Weight store (.dst)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--gram", m.gram, "Gram store (.dst)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--manifest", m.manifest, "Model manifest (.json)")->required()->check(CLI::ExistingFile);
}

void add_plan_flags(CLI::App* cmd, PlanArgs& p) {
    cmd->add_option("--ratio", p.ratio, "Fraction of parameters to remove")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--beta", p.beta, "Share of the Q/K budget moved to V")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--group-size", p.group_size, "Layers per group (default 2; GQA models use 1)")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--pooled-budget", p.pooled, "Allocate one budget across all grouped types");
    cmd->add_flag("--lower-cholesky", p.lower, "Whiten with the lower Cholesky factor");
    cmd->add_flag("--no-carry", p.no_carry, "Do not carry unspent budget between types");
}

PlanOptions to_options(const PlanArgs& a) {
    PlanOptions o;
    o.theta = a.ratio;
    o.beta = a.beta;
    o.group_size = a.group_size;
    o.pooled_budget = a.pooled;
    o.carry_remainder = !a.no_carry;
    o.orientation = a.lower ? WhitenerOrientation::lower : WhitenerOrientation::upper;
    return o;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
}

// Prints to stdout unless --out was given.
void emit(const std::string& out, const std::string& text) {
    if (out.empty()) {
        std::cout << text << (text.empty() || text.back() != '\n' ? "\n" : "");
    } else {
        write_text(out, text);
    }
}

int run_plan(const ModelArgs& m, const PlanArgs& a, const std::string& out) {
    const auto manifest = load_manifest(m.manifest);
    const auto p = plan(manifest, load_store(m.model), load_store(m.gram), to_options(a));
    std::cerr << format_plan(p);
    emit(out, plan_to_json(p));
    return 0;
}

int run_compress(const ModelArgs& m, const PlanArgs& a, const std::string& plan_path, const std::string& storage,
                 const std::string& out) {
    const auto manifest = load_manifest(m.manifest);
    const auto weights = load_store(m.model);
    const auto grams = load_store(m.gram);
    CompressionPlan p;
    if (plan_path.empty()) {
        p = plan(manifest, weights, grams, to_options(a));
    } else {
        std::ifstream in(plan_path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read " + plan_path);
        p = plan_from_json(std::string(std::istreambuf_iterator<char>(in), {}));
    }
    CompressOptions copt;
    copt.storage = storage == "f64" ? DType::f64 : DType::f32;
    const auto c = compress_model(p, manifest, weights, grams, copt);
    save_store(c.store, out);
    std::printf("wrote %s: %llu of %llu parameters (%.4f)\n", out.c_str(),
                static_cast<unsigned long long>(c.stored_params),
                static_cast<unsigned long long>(p.original_params), p.stored_ratio());
    return 0;
}

int run_verify(const std::string& model, const std::string& gram, const std::string& compressed,
               const std::string& out) {
    const auto r = verify(load_store(model), load_store(compressed), load_store(gram));
    emit(out, verification_to_json(r));
    std::cerr << (r.ok() ? "verify: ok" : "verify: " + std::to_string(r.flagged) + " group(s) flagged") << "\n";
    return r.ok() ? 0 : 1;
}

int run_report(const std::string& compressed, const std::string& out) {
    const auto store = load_store(compressed);
    const auto& md = store.metadata();
    const auto plan_it = md.find("plan");
    const auto report_it = md.find("report");
    if (plan_it == md.end() || report_it == md.end()) throw std::runtime_error(compressed + " has no plan or report");
    const auto p = plan_from_json(plan_it->second);
    const auto reports = reports_from_json(report_it->second);
    std::string text = format_plan(p);
    char line[256];
    std::snprintf(line, sizeof line, "\n%-6s %5s %-12s %5s %14s %12s\n", "role", "group", "members", "k", "tail",
                  "max rel err");
    text += line;
    for (const auto& g : reports) {
        std::string members;
        for (auto i : g.members) members += (members.empty() ? "" : ",") + std::to_string(i);
        double worst = 0.0;
        for (const auto& e : g.layers) worst = std::max(worst, e.rel_frob_err);
        std::snprintf(line, sizeof line, "%-6s %5zu %-12s %5zu %14.6g %12.6g\n", std::string(role_name(g.role)).c_str(),
                      g.group, members.c_str(), g.k, g.tail_energy, worst);
        text += line;
    }
    emit(out, text);
    return 0;
}

int run_bench_cmd(const BenchConfig& cfg, const std::string& out) {
    const auto r = run_bench(cfg);
    emit(out, bench_to_json(cfg, r));
    std::cerr << "speedup " << r.speedup << "x, flop ratio " << r.flop_ratio << "\n";
    return r.outputs_agree ? 0 : 1;
}

// Random toy model for trying the other subcommands.
int run_synth(std::size_t layers, std::size_t dim, bool gqa, std::uint64_t seed, const std::string& dir) {
    const auto kind = gqa ? AttentionKind::gqa : AttentionKind::mha;
    auto manifest = drank::testing::square_manifest(layers, dim, kind);
    if (gqa) {
        const std::size_t kv = std::max<std::size_t>(1, dim / 4);
        manifest.roles[Role::k].d_out = kv;
        manifest.roles[Role::v].d_out = kv;
    }
    const auto t = drank::testing::populate(manifest, seed);
    fs::create_directories(dir);
    save_manifest(t.manifest, fs::path(dir) / "manifest.json");
    save_store(t.weights, fs::path(dir) / "model.dst");
    save_store(t.grams, fs::path(dir) / "gram.dst");
    std::printf("wrote %s/{manifest.json,model.dst,gram.dst}\n", dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Layer-wise dynamic-rank compression of transformer weights"};
    app.require_subcommand(1);

    ModelArgs model;
    PlanArgs pa;
    std::string out;
    std::string plan_path;
    std::string storage = "f32";
    std::string compressed;

    auto* plan_cmd = app.add_subcommand("plan", "Compute per-group ranks and print the plan");
    add_model_flags(plan_cmd, model);
    add_plan_flags(plan_cmd, pa);
    plan_cmd->add_option("--out", out, "Plan document (default: stdout)");

    auto* compress_cmd = app.add_subcommand("compress", "Factor the model into a compressed store");
    add_model_flags(compress_cmd, model);
    add_plan_flags(compress_cmd, pa);
    compress_cmd->add_option("--plan", plan_path, "Use a saved plan instead of planning")->check(CLI::ExistingFile);
    compress_cmd->add_option("--storage", storage, "Factor dtype")->check(CLI::IsMember({"f32", "f64"}));
    compress_cmd->add_option("--out", out, "Compressed store (.dst)")->required();

    auto* verify_cmd = app.add_subcommand("verify", "Recompute errors from stored factors");
    verify_cmd->add_option("--model", model.model, "Original weight store")->required()->check(CLI::ExistingFile);
    verify_cmd->add_option("--gram", model.gram, "Gram store")->required()->check(CLI::ExistingFile);
    verify_cmd->add_option("--compressed", compressed, "Compressed store")->required()->check(CLI::ExistingFile);
    verify_cmd->add_option("--out", out, "Verification document (default: stdout)");

    auto* report_cmd = app.add_subcommand("report", "Summarise a compressed store");
    report_cmd->add_option("--compressed", compressed, "Compressed store")->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--out", out, "Report file (default: stdout)");

    BenchConfig bench;
    auto* bench_cmd = app.add_subcommand("bench", "Dense vs factored matmul throughput");
    bench_cmd->add_option("--d1", bench.d1, "Input dimension")->capture_default_str();
    bench_cmd->add_option("--d2", bench.d2, "Output dimension")->capture_default_str();
    bench_cmd->add_option("--rank", bench.k, "Factor rank")->capture_default_str();
    bench_cmd->add_option("--tokens", bench.token_batch, "Rows of X per batch")->capture_default_str();
    bench_cmd->add_option("--repeats", bench.repeats, "Timed repeats (>= 3)")->capture_default_str();
    bench_cmd->add_option("--seed", bench.seed, "Seed for the random data")->capture_default_str();
    bench_cmd->add_option("--out", out, "Result document (default: stdout)");

    std::size_t layers = 4;
    std::size_t dim = 32;
    bool gqa = false;
    std::uint64_t seed = 0;
    auto* synth_cmd = app.add_subcommand("synth", "Write a random toy model, manifest and Gram store");
    synth_cmd->add_option("--layers", layers, "Layer count")->check(CLI::PositiveNumber)->capture_default_str();
    synth_cmd->add_option("--dim", dim, "Hidden size")->check(CLI::PositiveNumber)->capture_default_str();
    synth_cmd->add_flag("--gqa", gqa, "Narrow K/V projections");
    synth_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    synth_cmd->add_option("--out", out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*plan_cmd) return run_plan(model, pa, out);
        if (*compress_cmd) return run_compress(model, pa, plan_path, storage, out);
        if (*verify_cmd) return run_verify(model.model, model.gram, compressed, out);
        if (*report_cmd) return run_report(compressed, out);
        if (*bench_cmd) return run_bench_cmd(bench, out);
        if (*synth_cmd) return run_synth(layers, dim, gqa, seed, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
