// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#include "ladm/selection.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "ladm/error.hpp"

namespace ladm {

namespace {

__extension__ typedef unsigned __int128 u128;

std::uint64_t proportional(std::uint64_t amount, std::uint64_t part, std::uint64_t whole) {
    return static_cast<std::uint64_t>(static_cast<u128>(amount) * part / whole);
}

}  // namespace

const DomainStats* CorpusStats::find(const std::string& domain) const {
    auto it = std::lower_bound(domains.begin(), domains.end(), domain,
                               [](const DomainStats& d, const std::string& name) { return d.domain < name; });
    return it != domains.end() && it->domain == domain ? &*it : nullptr;
}

void CorpusStats::add(const std::string& domain, std::uint64_t doc_tokens) {
    auto it = std::lower_bound(domains.begin(), domains.end(), domain,
                               [](const DomainStats& d, const std::string& name) { return d.domain < name; });
    if (it == domains.end() || it->domain != domain) it = domains.insert(it, DomainStats{domain, 0, 0});
    it->documents += 1;
    it->tokens += doc_tokens;
    documents += 1;
    tokens += doc_tokens;
}

CorpusStats compute_stats(std::span<const Candidate> candidates) {
    CorpusStats stats;
    for (const Candidate& c : candidates) stats.add(c.domain, c.tokens);
    return stats;
}

bool ranks_before(const Candidate& a, const Candidate& b) {
    if (a.cds != b.cds) return a.cds > b.cds;
    return a.doc_id < b.doc_id;
}

SelectionManifest select(std::span<const Candidate> candidates, const CorpusStats& stats,
                         std::uint64_t budget_tokens) {
    if (stats.tokens == 0) throw Error(ErrorCode::invalid_argument, "corpus has no tokens");
    if (budget_tokens > stats.tokens) {
        throw Error(ErrorCode::invalid_argument, "budget " + std::to_string(budget_tokens) +
                                                     " exceeds corpus tokens " + std::to_string(stats.tokens));
    }

    std::map<std::string, std::vector<const Candidate*>> by_domain;
    for (const Candidate& c : candidates) {
        if (!stats.find(c.domain)) {
            throw Error(ErrorCode::invalid_argument, "candidate " + c.doc_id + " has domain '" + c.domain +
                                                         "' absent from corpus stats");
        }
        by_domain[c.domain].push_back(&c);
    }
    for (auto& [domain, list] : by_domain) {
        std::sort(list.begin(), list.end(), [](const Candidate* a, const Candidate* b) { return ranks_before(*a, *b); });
    }

    SelectionManifest manifest;
    manifest.budget_tokens = budget_tokens;
    manifest.corpus_tokens = stats.tokens;

    const std::size_t nd = stats.domains.size();
    std::vector<std::uint64_t> capacity(nd, 0);
    std::vector<std::uint64_t> allocation(nd, 0);
    std::vector<bool> exhausted(nd, false);
    for (std::size_t d = 0; d < nd; ++d) {
        const auto& ds = stats.domains[d];
        allocation[d] = proportional(budget_tokens, ds.tokens, stats.tokens);
        if (auto it = by_domain.find(ds.domain); it != by_domain.end()) {
            for (const Candidate* c : it->second) capacity[d] += c->tokens;
        }
    }

    // Shortfall of domains that cannot fill their share moves to the rest,
    // proportionally to corpus token mass, until every share is fillable.
    for (bool changed = true; changed;) {
        changed = false;
        std::uint64_t shortfall = 0;
        for (std::size_t d = 0; d < nd; ++d) {
            if (!exhausted[d] && allocation[d] > capacity[d]) {
                const std::uint64_t moved = allocation[d] - capacity[d];
                manifest.notes.push_back("domain '" + stats.domains[d].domain + "': allocation " +
                                         std::to_string(allocation[d]) + " exceeds scored tokens " +
                                         std::to_string(capacity[d]) + "; " + std::to_string(moved) +
                                         " tokens redistributed");
                shortfall += moved;
                allocation[d] = capacity[d];
                exhausted[d] = true;
                changed = true;
            }
        }
        if (shortfall == 0) break;
        std::uint64_t open_mass = 0;
        for (std::size_t d = 0; d < nd; ++d) {
            if (!exhausted[d]) open_mass += stats.domains[d].tokens;
        }
        if (open_mass == 0) {
            manifest.notes.push_back(std::to_string(shortfall) + " tokens could not be placed in any domain");
            break;
        }
        for (std::size_t d = 0; d < nd; ++d) {
            if (!exhausted[d]) allocation[d] += proportional(shortfall, stats.domains[d].tokens, open_mass);
        }
    }

    for (std::size_t d = 0; d < nd; ++d) {
        const auto& ds = stats.domains[d];
        DomainAllocation alloc{ds.domain, ds.tokens, allocation[d], 0, 0};
        if (auto it = by_domain.find(ds.domain); it != by_domain.end()) {
            for (const Candidate* c : it->second) {
                if (alloc.selected_tokens >= alloc.allocation) break;
                alloc.selected_tokens += c->tokens;
                alloc.selected_documents += 1;
                manifest.entries.push_back({c->doc_id, c->domain, c->cds, alloc.selected_documents, c->tokens});
            }
        }
        manifest.selected_tokens += alloc.selected_tokens;
        manifest.allocations.push_back(std::move(alloc));
    }
    return manifest;
}

std::string SelectionManifest::to_jsonl() const {
    using nlohmann::ordered_json;
    ordered_json summary;
    summary["record"] = "summary";
    summary["budget_tokens"] = budget_tokens;
    summary["corpus_tokens"] = corpus_tokens;
    summary["selected_tokens"] = selected_tokens;
    summary["selected_documents"] = entries.size();
    ordered_json domains = ordered_json::array();
    for (const auto& a : allocations) {
        domains.push_back({{"domain", a.domain},
                           {"corpus_tokens", a.corpus_tokens},
                           {"allocation", a.allocation},
                           {"selected_documents", a.selected_documents},
                           {"selected_tokens", a.selected_tokens}});
    }
    summary["domains"] = std::move(domains);
    summary["notes"] = notes;
    std::string out = summary.dump() + "\n";
    for (const auto& e : entries) {
        ordered_json line = {{"record", "entry"},
                             {"doc_id", e.doc_id},
                             {"domain", e.domain},
                             {"cds", e.cds},
                             {"rank_within_domain", e.rank_within_domain},
                             {"tokens_counted", e.tokens_counted}};
        out += line.dump() + "\n";
    }
    return out;
}

}  // namespace ladm
