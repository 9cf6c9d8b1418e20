// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ladm {

/// One scored document as seen by selection.
struct Candidate {
    std::string doc_id;
    std::string domain;
    double cds = 0.0;
    std::uint64_t tokens = 0;
};

struct DomainStats {
    std::string domain;
    std::size_t documents = 0;
    std::uint64_t tokens = 0;
};

struct CorpusStats {
    std::vector<DomainStats> domains;  // sorted by domain name
    std::size_t documents = 0;
    std::uint64_t tokens = 0;

    const DomainStats* find(const std::string& domain) const;
    /// Adds one document of the given size.
    void add(const std::string& domain, std::uint64_t tokens);
};

CorpusStats compute_stats(std::span<const Candidate> candidates);

struct DomainAllocation {
    std::string domain;
    std::uint64_t corpus_tokens = 0;
    std::uint64_t allocation = 0;
    std::size_t selected_documents = 0;
    std::uint64_t selected_tokens = 0;
};

struct ManifestEntry {
    std::string doc_id;
    std::string domain;
    double cds = 0.0;
    std::size_t rank_within_domain = 0;  // 1-based
    std::uint64_t tokens_counted = 0;
};

struct SelectionManifest {
    std::uint64_t budget_tokens = 0;
    std::uint64_t corpus_tokens = 0;
    std::uint64_t selected_tokens = 0;
    std::vector<DomainAllocation> allocations;
    std::vector<ManifestEntry> entries;  // grouped by domain, then by rank
    std::vector<std::string> notes;

    /// Summary header line followed by one line per entry.
    std::string to_jsonl() const;
};

/// Orders candidates by descending CDS, ties by ascending doc_id.
bool ranks_before(const Candidate& a, const Candidate& b);

/// Splits budget_tokens across domains in proportion to their token mass in
/// stats, then takes each domain's top-CDS documents until its allocation is
/// met (the document that crosses the boundary is kept). Allocation a domain
/// cannot fill is redistributed to the others and recorded in notes.
SelectionManifest select(std::span<const Candidate> candidates, const CorpusStats& stats,
                         std::uint64_t budget_tokens);

}  // namespace ladm
