// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "ladm/corpus.hpp"
#include "ladm/error.hpp"
#include "ladm/selection.hpp"
#include "test_support.hpp"

using namespace ladm;
namespace fs = std::filesystem;

namespace {

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
    std::ofstream out(p);
    for (const auto& l : lines) out << l << '\n';
}

}  // namespace

TEST_CASE("ingest truncates long documents and skips short ones") {
    const auto dir = ladm_test::scratch_dir("ingest");
    const auto path = dir / "c.jsonl";
    write_lines(path, {corpus_line("long", "web", ladm_test::random_tokens(40000, 50000, 1)),
                       corpus_line("short", "web", ladm_test::random_tokens(10000, 50000, 2)),
                       corpus_line("exact", "code", ladm_test::random_tokens(32768, 50000, 3))});
    const auto r = ingest(path, 32768);
    REQUIRE(r.documents.size() == 2);
    CHECK(r.documents[0].doc_id == "long");
    CHECK(r.documents[0].tokens.size() == 32768);
    CHECK(r.documents[0].original_length == 40000);
    CHECK(r.documents[1].original_length == 32768);
    CHECK(r.counters.skipped_short == 1);
    CHECK(r.counters.ingested == 2);
    CHECK(r.counters.lines == 3);
    fs::remove_all(dir);
}

TEST_CASE("malformed lines are skipped with their line numbers") {
    const auto dir = ladm_test::scratch_dir("malformed");
    const auto path = dir / "c.jsonl";
    const auto ok = corpus_line("a", "web", std::vector<TokenId>(8, 1));
    write_lines(path, {ok,
                       "{not json",
                       R"({"id": "b", "tokens": [1,2,3,4,5,6,7,8]})",
                       R"({"id": "c", "domain": "web", "tokens": [1,-2,3,4,5,6,7,8]})",
                       R"({"id": 7, "domain": "web", "tokens": [1,2,3,4,5,6,7,8]})",
                       ok,
                       "",
                       corpus_line("d", "web", std::vector<TokenId>(3, 1))});
    const auto r = ingest(path, 8);
    CHECK(r.documents.size() == 1);
    CHECK(r.counters.lines == 8);
    CHECK(r.counters.malformed == 6);
    CHECK(r.counters.skipped_short == 1);
    CHECK(r.counters.ingested + r.counters.skipped_short + r.counters.malformed == r.counters.lines);
    REQUIRE(r.log.size() == 6);
    CHECK(r.log[0].rfind("line 2:", 0) == 0);
    CHECK(r.log[1].find("domain") != std::string::npos);
    CHECK(r.log[4].find("duplicate") != std::string::npos);
    CHECK(r.log[4].rfind("line 6:", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("twelve-domain corpus recount") {
    const auto dir = ladm_test::scratch_dir("pile");
    const auto path = dir / "pile.jsonl";
    const std::vector<std::string> domains{"ArXiv", "Books3", "FreeLaw", "Github", "PG-19", "Pile-CC",
                                           "PubMed Central", "StackExchange", "USPTO", "Wikipedia",
                                           "OpenWebText2", "DM Mathematics"};
    std::mt19937_64 gen(42);
    std::map<std::string, std::pair<std::size_t, std::uint64_t>> tally;
    std::vector<std::string> lines;
    for (int i = 0; i < 240; ++i) {
        const auto& d = domains[gen() % domains.size()];
        const std::size_t len = 64 + gen() % 96;
        lines.push_back(corpus_line("doc" + std::to_string(i), d, ladm_test::random_tokens(len, 1000, i)));
        if (len >= 96) {
            tally[d].first += 1;
            tally[d].second += 96;
        }
    }
    write_lines(path, lines);
    const auto r = ingest(path, 96);
    std::vector<Candidate> cands;
    for (const auto& d : r.documents) cands.push_back({d.doc_id, d.domain, 0.0, d.tokens.size()});
    const auto stats = compute_stats(cands);
    CHECK(stats.domains.size() == tally.size());
    for (const auto& [d, counts] : tally) {
        const auto* s = stats.find(d);
        REQUIRE(s != nullptr);
        CHECK(s->documents == counts.first);
        CHECK(s->tokens == counts.second);
    }
    fs::remove_all(dir);
}

TEST_CASE("synthetic generation") {
    const auto a = gen_synthetic_docs(SyntheticKind::coherent, 0, 512, 4, 9);
    const auto b = gen_synthetic_docs(SyntheticKind::coherent, 0, 512, 4, 9);
    const auto c = gen_synthetic_docs(SyntheticKind::coherent, 0, 512, 4, 10);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a[i].tokens == b[i].tokens);
        CHECK(a[i].tokens != c[i].tokens);
        CHECK(a[i].tokens.size() == 512);
        for (auto t : a[i].tokens) CHECK(t < 4096);
    }
    CHECK(a[0].doc_id == "coherent-000000");
    CHECK(a[0].tokens != a[1].tokens);

    // A single-piece concatenation is the coherent process itself.
    const auto one = gen_synthetic_docs(SyntheticKind::concat, 512, 512, 4, 9);
    for (std::size_t i = 0; i < 4; ++i) CHECK(one[i].tokens == a[i].tokens);
    CHECK(one[0].domain == "concat-512");

    SyntheticOptions opts;
    opts.domain = "mix";
    opts.vocab_size = 50;
    const auto m = gen_synthetic_docs(SyntheticKind::concat, 64, 512, 2, 1, opts);
    CHECK(m[1].doc_id == "mix-000001");
    for (auto t : m[1].tokens) CHECK(t < 50);

    CHECK_THROWS_AS(gen_synthetic_docs(SyntheticKind::concat, 100, 512, 1, 1), Error);
    CHECK_THROWS_AS(parse_synthetic_kind("random"), Error);
}

TEST_CASE("synthetic corpus file round trips through ingest") {
    const auto dir = ladm_test::scratch_dir("gen");
    gen_synthetic(SyntheticKind::concat, 128, 1024, 5, 3, dir / "g.jsonl");
    const auto r = ingest(dir / "g.jsonl", 1024);
    const auto docs = gen_synthetic_docs(SyntheticKind::concat, 128, 1024, 5, 3);
    REQUIRE(r.documents.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(r.documents[i].tokens == docs[i].tokens);
        CHECK(r.documents[i].domain == "concat-128");
    }
    fs::remove_all(dir);
}
