// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#include "ladm/corpus.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "ladm/error.hpp"
#include "ladm/rng.hpp"

namespace ladm {

CorpusReader::CorpusReader(const std::filesystem::path& path, std::size_t max_len)
    : in_(path), max_len_(max_len) {
    if (!in_) throw Error(ErrorCode::io, "cannot open corpus " + path.string());
    if (max_len_ == 0) throw Error(ErrorCode::config, "max_len must be positive");
}

std::optional<TokenizedDocument> CorpusReader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        const std::size_t line_no = ++counters_.lines;
        auto malformed = [&](const std::string& why) {
            ++counters_.malformed;
            log_.push_back("line " + std::to_string(line_no) + ": " + why);
        };
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            malformed("not a JSON object");
            continue;
        }
        if (!rec.contains("id") || !rec["id"].is_string()) {
            malformed("missing string field 'id'");
            continue;
        }
        if (!rec.contains("domain") || !rec["domain"].is_string()) {
            malformed("missing string field 'domain'");
            continue;
        }
        if (!rec.contains("tokens") || !rec["tokens"].is_array()) {
            malformed("missing array field 'tokens'");
            continue;
        }
        const auto& toks = rec["tokens"];
        bool ok = true;
        for (const auto& t : toks) {
            if (!t.is_number_unsigned() || t.get<std::uint64_t>() > 0xFFFFFFFFull) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            malformed("'tokens' must hold non-negative 32-bit integers");
            continue;
        }
        std::string id = rec["id"].get<std::string>();
        if (!seen_ids_.insert(id).second) {
            malformed("duplicate id '" + id + "'");
            continue;
        }
        if (toks.size() < max_len_) {
            ++counters_.skipped_short;
            continue;
        }
        TokenizedDocument doc;
        doc.doc_id = std::move(id);
        doc.domain = rec["domain"].get<std::string>();
        doc.original_length = toks.size();
        doc.tokens.reserve(max_len_);
        for (std::size_t i = 0; i < max_len_; ++i) doc.tokens.push_back(toks[i].get<TokenId>());
        ++counters_.ingested;
        return doc;
    }
    return std::nullopt;
}

IngestResult ingest(const std::filesystem::path& path, std::size_t max_len) {
    CorpusReader reader(path, max_len);
    IngestResult out;
    while (auto doc = reader.next()) out.documents.push_back(std::move(*doc));
    out.counters = reader.counters();
    out.log = reader.log();
    return out;
}

std::string corpus_line(const std::string& id, const std::string& domain, const std::vector<TokenId>& tokens) {
    nlohmann::ordered_json rec = {{"id", id}, {"domain", domain}, {"tokens", tokens}};
    return rec.dump();
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

void append_process(Rng& rng, std::size_t length, const SyntheticOptions& opts, std::vector<TokenId>& out) {
    const std::size_t hi = std::max<std::size_t>(1, length / 2);
    const std::size_t lo = std::min(opts.min_lag, hi);
    std::vector<std::size_t> lags(opts.echo_lags);
    for (auto& lag : lags) lag = lo + rng.below(hi - lo + 1);

    // Partial Fisher-Yates over the vocabulary for the topic subset.
    std::vector<TokenId> pool(opts.vocab_size);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<TokenId>(i);
    const std::size_t k = std::min(opts.topic_size, opts.vocab_size);
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);

    const std::size_t start = out.size();
    for (std::size_t t = 0; t < length; ++t) {
        TokenId tok = (k > 0 && rng.chance(opts.topic_prob)) ? pool[rng.below(k)]
                                                              : static_cast<TokenId>(rng.below(opts.vocab_size));
        if (!lags.empty() && rng.chance(opts.echo_prob)) {
            const std::size_t lag = lags[rng.below(lags.size())];
            if (lag <= t) tok = out[start + t - lag];
        }
        out.push_back(tok);
    }
}

std::string default_domain(SyntheticKind kind, std::size_t piece_len) {
    return kind == SyntheticKind::coherent ? "coherent" : "concat-" + std::to_string(piece_len);
}

}  // namespace

std::vector<TokenId> synthetic_tokens(SyntheticKind kind, std::size_t piece_len, std::size_t total_len,
                                      std::uint64_t seed, std::size_t index, const SyntheticOptions& opts) {
    if (total_len == 0) throw Error(ErrorCode::invalid_argument, "total_len must be positive");
    if (opts.vocab_size == 0) throw Error(ErrorCode::invalid_argument, "vocab_size must be positive");
    if (kind == SyntheticKind::concat && (piece_len == 0 || total_len % piece_len != 0)) {
        throw Error(ErrorCode::invalid_argument, "total_len " + std::to_string(total_len) +
                                                     " is not divisible by piece_len " + std::to_string(piece_len));
    }
    Rng rng(splitmix(seed ^ splitmix(index)));
    std::vector<TokenId> out;
    out.reserve(total_len);
    const std::size_t piece = kind == SyntheticKind::coherent ? total_len : piece_len;
    for (std::size_t p = 0; p < total_len / piece; ++p) append_process(rng, piece, opts, out);
    return out;
}

std::vector<TokenizedDocument> gen_synthetic_docs(SyntheticKind kind, std::size_t piece_len, std::size_t total_len,
                                                  std::size_t count, std::uint64_t seed,
                                                  const SyntheticOptions& opts) {
    const std::string domain = opts.domain.empty() ? default_domain(kind, piece_len) : opts.domain;
    const std::string prefix = opts.id_prefix.empty() ? domain : opts.id_prefix;
    std::vector<TokenizedDocument> docs;
    docs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "-%06zu", i);
        TokenizedDocument doc;
        doc.doc_id = prefix + id;
        doc.domain = domain;
        doc.tokens = synthetic_tokens(kind, piece_len, total_len, seed, i, opts);
        doc.original_length = doc.tokens.size();
        docs.push_back(std::move(doc));
    }
    return docs;
}

void gen_synthetic(SyntheticKind kind, std::size_t piece_len, std::size_t total_len, std::size_t count,
                   std::uint64_t seed, const std::filesystem::path& path, const SyntheticOptions& opts) {
    const auto docs = gen_synthetic_docs(kind, piece_len, total_len, count, seed, opts);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    for (const auto& d : docs) out << corpus_line(d.doc_id, d.domain, d.tokens) << '\n';
    if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

SyntheticKind parse_synthetic_kind(const std::string& text) {
    if (text == "coherent") return SyntheticKind::coherent;
    if (text == "concat") return SyntheticKind::concat;
    throw Error(ErrorCode::config, "unknown synthetic kind '" + text + "' (coherent|concat)");
}

}  // namespace ladm
