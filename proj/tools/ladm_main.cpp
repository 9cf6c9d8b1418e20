// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the engine only through the C API.

#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ladm/ladm.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitFailures = 2;
constexpr int kExitRuntime = 3;

int report(ladm_status st) {
    if (st == LADM_OK) return kExitOk;
    std::fprintf(stderr, "ladm: %s: %s\n", ladm_status_name(st), ladm_last_error());
    return st == LADM_ERR_CONFIG || st == LADM_ERR_INVALID_ARGUMENT ? kExitConfig : kExitRuntime;
}

struct RunConfigDeleter {
    void operator()(ladm_run_config* c) const { ladm_run_config_destroy(c); }
};
using RunConfigPtr = std::unique_ptr<ladm_run_config, RunConfigDeleter>;

/// Flags shared by every subcommand that builds a run configuration. Values
/// are kept as strings and handed to ladm_run_config_set, which owns parsing.
struct RunFlags {
    std::string config_file;
    std::map<std::string, std::string> values;
    bool ablate_std = false;
    bool ablate_length = false;
    bool causal_keys = false;

    void add_to(CLI::App& app) {
        app.add_option("--config", config_file, "key=value configuration file");
        const std::vector<std::pair<const char*, const char*>> opts = {
            {"input", "token-id corpus (JSONL)"},
            {"out", "output directory"},
            {"mode", "QK source: toy|file"},
            {"dump-dir", "directory of .ladmqk dumps for --mode file"},
            {"layers", "all|last|i,j"},
            {"budget-tokens", "selection budget in tokens"},
            {"span-len", "tokens per span (l)"},
            {"m", "initial spans excluded as sources"},
            {"n", "local spans excluded before each target"},
            {"d-afs", "source span stride"},
            {"d-cds", "target span stride"},
            {"n0", "first scored target span"},
            {"max-len", "document length L"},
            {"workers", "worker threads"},
            {"seed", "toy model seed"},
            {"vocab-size", "toy model vocabulary"},
            {"d-model", "toy model width"},
            {"num-heads", "toy model heads"},
            {"num-layers", "toy model layers"},
            {"max-seq", "toy model maximum sequence length"},
            {"qk-gain", "toy model Q/K init gain"},
            {"tie-qk", "toy model ties K to Q (true|false)"},
            {"profile-min-distance", "record the long-range profile at this span distance"},
            {"timing-repeats", "score each document this many times, keep the fastest"},
        };
        for (const auto& [name, help] : opts) {
            std::string key = name;
            app.add_option_function<std::string>(
                std::string("--") + name, [this, key](const std::string& v) { values[key] = v; }, help);
        }
        app.add_flag("--ablate-std", ablate_std, "drop the standard-deviation weight");
        app.add_flag("--ablate-length", ablate_length, "drop the distance and position weights");
        app.add_flag("--causal-keys", causal_keys, "let span j attend to its own keys causally");
    }

    ladm_status build(RunConfigPtr& out) const {
        ladm_run_config* raw = nullptr;
        ladm_status st = ladm_run_config_create(&raw);
        if (st != LADM_OK) return st;
        out.reset(raw);
        if (!config_file.empty() && (st = ladm_run_config_load(raw, config_file.c_str())) != LADM_OK) return st;
        for (const auto& [k, v] : values) {
            if ((st = ladm_run_config_set(raw, k.c_str(), v.c_str())) != LADM_OK) return st;
        }
        if (ablate_std && (st = ladm_run_config_set(raw, "ablate_std", "true")) != LADM_OK) return st;
        if (ablate_length && (st = ladm_run_config_set(raw, "ablate_length", "true")) != LADM_OK) return st;
        if (causal_keys && (st = ladm_run_config_set(raw, "causal_keys", "true")) != LADM_OK) return st;
        return ladm_run_config_validate(raw);
    }
};

/// Parses "4,4;2,4" into flat (d_afs, d_cds) pairs.
bool parse_pairs(const std::string& text, std::vector<uint32_t>& out) {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        unsigned a = 0, b = 0;
        char tail = 0;
        if (std::sscanf(item.c_str(), "%u,%u%c", &a, &b, &tail) != 2) return false;
        out.push_back(a);
        out.push_back(b);
    }
    return !out.empty();
}

int cmd_score(const RunFlags& flags) {
    RunConfigPtr cfg;
    if (ladm_status st = flags.build(cfg); st != LADM_OK) return report(st);
    ladm_run_summary s{};
    if (ladm_status st = ladm_run_scoring(cfg.get(), &s); st != LADM_OK) return report(st);
    std::printf("lines %zu ingested %zu skipped_short %zu malformed %zu scored %zu failed %zu\n", s.lines,
                s.ingested, s.skipped_short, s.malformed, s.scored, s.failed);
    std::printf("selected %llu of budget %llu tokens\n", static_cast<unsigned long long>(s.selected_tokens),
                static_cast<unsigned long long>(s.budget_tokens));
    std::printf("scoring %.6f s/sample, provider %.6f s/sample, wall %.3f s\n", s.scoring_seconds_per_sample,
                s.provider_seconds_per_sample, s.wall_seconds);
    if (s.exit_status != 0) {
        std::fprintf(stderr, "ladm: %zu of %zu documents failed\n", s.failed, s.scored + s.failed);
        return kExitFailures;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Long-range dependency scoring and selection of long documents"};
    app.require_subcommand(1);

    RunFlags score_flags;
    auto* score = app.add_subcommand("score", "score a corpus and select a domain-balanced subset");
    score_flags.add_to(*score);

    struct {
        std::string kind = "coherent";
        uint32_t piece_len = 0;
        uint32_t total_len = 32768;
        uint32_t count = 100;
        uint64_t seed = 1;
        uint32_t vocab = 4096;
        std::string domain;
        std::string out;
    } gen;
    auto* gen_cmd = app.add_subcommand("gen", "write a synthetic corpus");
    gen_cmd->add_option("--kind", gen.kind, "coherent|concat")->check(CLI::IsMember({"coherent", "concat"}));
    gen_cmd->add_option("--piece-len", gen.piece_len, "tokens per piece for concat documents");
    gen_cmd->add_option("--total-len", gen.total_len, "tokens per document");
    gen_cmd->add_option("--count", gen.count, "documents");
    gen_cmd->add_option("--seed", gen.seed, "generator seed");
    gen_cmd->add_option("--vocab-size", gen.vocab, "vocabulary size");
    gen_cmd->add_option("--domain", gen.domain, "domain label");
    gen_cmd->add_option("--out", gen.out, "output corpus file")->required();

    RunFlags study_flags;
    std::string study_configs = "4,4;2,4;4,2;2,2";
    std::string study_table;
    auto* study = app.add_subcommand("stride-study", "compare CDS and cost across stride settings");
    study_flags.add_to(*study);
    study->add_option("--configs", study_configs, "d_afs,d_cds pairs separated by ';' (first is the reference)");
    study->add_option("--table", study_table, "output TSV")->required();

    std::string report_scores, report_out;
    auto* rep = app.add_subcommand("report", "per-domain CDS median and quartiles");
    rep->add_option("--scores", report_scores, "scores.jsonl")->required();
    rep->add_option("--out", report_out, "output TSV")->required();

    std::string select_scores, select_out;
    uint64_t select_budget = 0;
    auto* sel = app.add_subcommand("select", "reselect from a score file under a new budget");
    sel->add_option("--scores", select_scores, "scores.jsonl")->required();
    sel->add_option("--budget-tokens", select_budget, "token budget")->required();
    sel->add_option("--out", select_out, "manifest file")->required();

    RunFlags dump_flags;
    std::string dump_out;
    auto* dump = app.add_subcommand("dump", "write toy-model .ladmqk dumps for every ingested document");
    dump_flags.add_to(*dump);
    dump->add_option("--dump-out", dump_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    if (score->parsed()) return cmd_score(score_flags);
    if (gen_cmd->parsed()) {
        return report(ladm_gen_synthetic(gen.kind.c_str(), gen.piece_len, gen.total_len, gen.count, gen.seed,
                                         gen.vocab, gen.domain.empty() ? nullptr : gen.domain.c_str(),
                                         gen.out.c_str()));
    }
    if (study->parsed()) {
        std::vector<uint32_t> pairs;
        if (!parse_pairs(study_configs, pairs)) {
            std::fprintf(stderr, "ladm: --configs: expected pairs like 4,4;2,4\n");
            return kExitConfig;
        }
        RunConfigPtr cfg;
        if (ladm_status st = study_flags.build(cfg); st != LADM_OK) return report(st);
        return report(ladm_stride_study(cfg.get(), pairs.data(), pairs.size() / 2, study_table.c_str()));
    }
    if (rep->parsed()) return report(ladm_report_by_category(report_scores.c_str(), report_out.c_str()));
    if (sel->parsed()) {
        return report(ladm_select_from_scores(select_scores.c_str(), select_budget, select_out.c_str()));
    }
    if (dump->parsed()) {
        RunConfigPtr cfg;
        if (ladm_status st = dump_flags.build(cfg); st != LADM_OK) return report(st);
        size_t written = 0;
        const int rc = report(ladm_export_toy_dumps(cfg.get(), dump_out.c_str(), &written));
        if (rc == kExitOk) std::printf("wrote %zu dumps to %s\n", written, dump_out.c_str());
        return rc;
    }
    return kExitConfig;
}
