// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "ladm/document.hpp"

namespace ladm {

struct IngestCounters {
    std::size_t lines = 0;
    std::size_t ingested = 0;
    std::size_t skipped_short = 0;
    std::size_t malformed = 0;
};

/// Streams a line-delimited corpus of {"id", "domain", "tokens": [ints]}
/// records. Documents shorter than max_len are counted and skipped; longer
/// ones are truncated to exactly max_len. Malformed lines (bad JSON, missing
/// or mistyped fields, duplicate ids) are skipped and logged by line number.
class CorpusReader {
public:
    CorpusReader(const std::filesystem::path& path, std::size_t max_len);

    std::optional<TokenizedDocument> next();

    const IngestCounters& counters() const noexcept { return counters_; }
    const std::vector<std::string>& log() const noexcept { return log_; }

private:
    std::ifstream in_;
    std::size_t max_len_;
    IngestCounters counters_;
    std::vector<std::string> log_;
    std::unordered_set<std::string> seen_ids_;
};

struct IngestResult {
    std::vector<TokenizedDocument> documents;
    IngestCounters counters;
    std::vector<std::string> log;
};

IngestResult ingest(const std::filesystem::path& path, std::size_t max_len);

/// One line of the corpus format.
std::string corpus_line(const std::string& id, const std::string& domain, const std::vector<TokenId>& tokens);

enum class SyntheticKind { coherent, concat };

/// Knobs of the synthetic token process. Each process of length T draws a
/// topic of topic_size token ids (emitted with probability topic_prob, else a
/// uniform id) and echo_lags lags in [min(min_lag, T/2), T/2]; with
/// probability echo_prob a token copies the token one of those lags back.
struct SyntheticOptions {
    std::size_t vocab_size = 4096;
    std::size_t topic_size = 64;
    double topic_prob = 0.7;
    double echo_prob = 0.3;
    std::size_t echo_lags = 4;
    std::size_t min_lag = 16;
    std::string domain;     // default: "coherent" or "concat-<piece_len>"
    std::string id_prefix;  // default: the domain
};

/// Token ids of document index under the given kind. Coherent documents are a
/// single process over total_len tokens; concat documents stitch independent
/// processes of piece_len tokens.
std::vector<TokenId> synthetic_tokens(SyntheticKind kind, std::size_t piece_len, std::size_t total_len,
                                      std::uint64_t seed, std::size_t index, const SyntheticOptions& opts = {});

std::vector<TokenizedDocument> gen_synthetic_docs(SyntheticKind kind, std::size_t piece_len, std::size_t total_len,
                                                  std::size_t count, std::uint64_t seed,
                                                  const SyntheticOptions& opts = {});

/// Writes count documents to path in the corpus format.
void gen_synthetic(SyntheticKind kind, std::size_t piece_len, std::size_t total_len, std::size_t count,
                   std::uint64_t seed, const std::filesystem::path& path, const SyntheticOptions& opts = {});

SyntheticKind parse_synthetic_kind(const std::string& text);

}  // namespace ladm
