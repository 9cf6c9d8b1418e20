// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ladm/corpus.hpp"
#include "ladm/qk_provider.hpp"
#include "ladm/scoring.hpp"
#include "ladm/selection.hpp"

namespace ladm {

struct RunConfig {
    ScoringConfig scoring;
    ProviderConfig provider;
    std::filesystem::path input;
    std::filesystem::path out_dir;
    std::size_t workers = 1;
    std::optional<std::uint64_t> budget_tokens;  // unset: the whole corpus
    bool category_report = true;
    std::size_t profile_min_distance = 0;  // 0 disables the per-document profile
    /// Repetitions per document when timing scoring; the fastest is kept.
    std::size_t timing_repeats = 1;

    /// Applies one key=value setting. Keys match the CLI flag names with
    /// dashes replaced by underscores (span_len, d_afs, ablate_std, ...).
    void set(const std::string& key, const std::string& value);
    /// Reads "key = value" lines; '#' starts a comment.
    void load_file(const std::filesystem::path& path);
    void validate() const;
};

struct ScoredDocument {
    ScoreRecord record;
    std::size_t original_length = 0;
    std::size_t scored_length = 0;
    std::optional<double> long_range_profile;
};

struct DocumentFailure {
    std::string doc_id;
    std::string error;
};

struct RunTiming {
    double wall_seconds = 0.0;
    double provider_seconds = 0.0;
    double scoring_seconds = 0.0;
    std::size_t documents = 0;

    double scoring_seconds_per_sample() const { return documents ? scoring_seconds / documents : 0.0; }
    double provider_seconds_per_sample() const { return documents ? provider_seconds / documents : 0.0; }
    double wall_seconds_per_sample() const { return documents ? wall_seconds / documents : 0.0; }
};

struct RunResult {
    std::vector<ScoredDocument> scores;  // sorted by doc_id
    std::vector<DocumentFailure> failures;
    IngestCounters ingest;
    CorpusStats stats;
    SelectionManifest manifest;
    RunTiming timing;
    int exit_status = 0;  // 0 ok, 2 when more than 1% of documents failed
};

/// Scores already-ingested documents across cfg.workers threads. Output order
/// and values do not depend on the worker count.
RunResult score_documents(const RunConfig& cfg, const std::vector<TokenizedDocument>& docs);

/// Ingests cfg.input, scores, selects and, when cfg.out_dir is set, writes
/// scores.jsonl, failures.jsonl, manifest.jsonl, stats.tsv, categories.tsv
/// and summary.json there.
RunResult run_scoring(const RunConfig& cfg);

std::string score_line(const ScoredDocument& doc);
std::string scores_jsonl(const std::vector<ScoredDocument>& scores);
std::vector<ScoredDocument> read_scores(const std::filesystem::path& path);
std::string stats_tsv(const CorpusStats& stats);
std::string summary_json(const RunResult& result, const RunConfig& cfg);

struct CategoryRow {
    std::string domain;
    std::size_t count = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

std::vector<CategoryRow> report_by_category(const std::vector<ScoredDocument>& scores);
std::string category_tsv(const std::vector<CategoryRow>& rows);

/// Linear-interpolation quantile of sorted values, p in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double p);

/// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);

struct StrideStudyRow {
    std::size_t d_afs = 0;
    std::size_t d_cds = 0;
    double seconds_per_sample = 0.0;
    std::size_t pfs_evaluations = 0;  // per document
    std::optional<double> correlation;  // vs the first configuration
    std::vector<double> cds;            // per document, in document order
};

/// Scores every document under each (d_afs, d_cds) pair, reusing one set of
/// QK tensors per document. Needs >= 2 configurations and >= 3 documents.
std::vector<StrideStudyRow> stride_study(const RunConfig& cfg, const std::vector<TokenizedDocument>& docs,
                                         const std::vector<std::pair<std::size_t, std::size_t>>& configs);
std::vector<StrideStudyRow> stride_study(const RunConfig& cfg,
                                         const std::vector<std::pair<std::size_t, std::size_t>>& configs);
std::string stride_study_tsv(const std::vector<StrideStudyRow>& rows);

}  // namespace ladm
