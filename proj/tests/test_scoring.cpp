// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "ladm/error.hpp"
#include "ladm/scoring.hpp"
#include "test_support.hpp"

using namespace ladm;

namespace {

ScoringConfig small_cfg(std::size_t span_len, std::size_t spans) {
    ScoringConfig c;
    c.span_len = span_len;
    c.max_len = span_len * spans;
    c.exclude_initial = 1;
    c.exclude_local = 1;
    c.pfs_stride = 1;
    c.cds_start = 3;
    c.cds_stride = 1;
    return c;
}

ToyModel toy(std::size_t max_seq) {
    ToyModelConfig c;
    c.vocab_size = 101;
    c.d_model = 16;
    c.num_layers = 2;
    c.num_heads = 2;
    c.d_k = 8;
    c.max_seq = max_seq;
    c.seed = 5;
    return ToyModel(c);
}

// Scoring written from the definitions with no shared code: every
// (layer, head) attention row over the strict span prefix is built inline.
double reference_cds(const QKTensors& t, std::size_t l, std::size_t n_spans, std::size_t m, std::size_t n,
                     std::size_t d_afs, std::size_t n0, std::size_t d_cds) {
    const std::size_t dk = t.d_k();
    const std::size_t heads = t.layers() * t.heads();
    double total = 0;
    for (std::size_t j = n0; j < n_spans; j += d_cds) {
        std::vector<double> p(j, 0.0);
        for (std::size_t layer = 0; layer < t.layers(); ++layer) {
            for (std::size_t h = 0; h < t.heads(); ++h) {
                const Matrix& q = t.q(layer, h);
                const Matrix& k = t.k(layer, h);
                for (std::size_t r = j * l; r < (j + 1) * l; ++r) {
                    std::vector<long double> logit(j * l);
                    long double hi = -1e300L;
                    for (std::size_t c = 0; c < j * l; ++c) {
                        long double dot = 0;
                        for (std::size_t x = 0; x < dk; ++x) dot += (long double)q(r, x) * k(c, x);
                        logit[c] = dot / std::sqrt((long double)dk);
                        hi = std::max(hi, logit[c]);
                    }
                    long double z = 0;
                    for (auto& v : logit) z += (v = std::exp(v - hi));
                    for (std::size_t c = 0; c < j * l; ++c) p[c / l] += (double)(logit[c] / z) / heads;
                }
            }
        }
        std::vector<std::size_t> idx;
        for (std::size_t i = m; i + n + 1 <= j; i += d_afs) idx.push_back(i);
        double mean = 0;
        for (auto i : idx) mean += p[i];
        mean /= idx.size();
        double var = 0;
        for (auto i : idx) var += (p[i] - mean) * (p[i] - mean);
        const double sigma = std::sqrt(var / idx.size());
        double afs = 0;
        for (auto i : idx) afs += double(j - i) / n_spans * p[i];
        total += double(j) / n_spans * sigma * afs;
    }
    return total;
}

}  // namespace

TEST_CASE("uniform attention gives PFS = l / j") {
    auto cfg = small_cfg(4, 4);
    const auto qk = ladm_test::zero_qk(1, 1, 16, 4);
    const auto grid = cfg.grid();
    CHECK(pfs(qk, grid, 0, 2, cfg) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(pfs(qk, grid, 1, 2, cfg) == doctest::Approx(2.0).epsilon(1e-12));
    const auto row = pfs_row(qk, grid, 2, cfg);
    CHECK(row.values[0] + row.values[1] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(pfs(qk, grid, 0, 3, cfg) == doctest::Approx(4.0 / 3).epsilon(1e-12));
}

TEST_CASE("PFS rows sum to the span length") {
    auto cfg = small_cfg(8, 12);
    const auto qk = ladm_test::random_qk(2, 2, 96, 8, 3, 2.0);
    const auto grid = cfg.grid();
    for (std::size_t j = 1; j < 12; ++j) {
        const auto row = pfs_row(qk, grid, j, cfg);
        double s = 0;
        for (double v : row.values) {
            CHECK(v >= 0.0);
            s += v;
        }
        CHECK(std::fabs(s - 8.0) < 1e-9);
    }
}

TEST_CASE("PFS of a toy document matches the full-attention oracle") {
    auto cfg = small_cfg(4, 8);
    const auto model = toy(64);
    const auto qk = model.forward_qk(ladm_test::random_tokens(32, 101, 8));
    const auto table = oracle_full_attention(qk, cfg.grid(), cfg);
    CHECK(std::fabs(pfs(qk, cfg.grid(), 2, 6, cfg) - table(2, 6)) < 1e-5);
    for (std::size_t j = 1; j < 8; ++j) {
        const auto row = pfs_row(qk, cfg.grid(), j, cfg);
        double oracle_sum = 0;
        for (std::size_t i = 0; i < j; ++i) {
            CHECK(std::fabs(row.values[i] - table(i, j)) < 1e-5);
            CHECK(table(i, j) >= 0.0);
            oracle_sum += table(i, j);
        }
        // Four query rows per span, each summing to one.
        CHECK(std::fabs(oracle_sum - 4.0) < 1e-5);
    }
}

TEST_CASE("within-span causal keys") {
    auto cfg = small_cfg(4, 6);
    cfg.within_span_causal_keys = true;
    const auto qk = ladm_test::random_qk(1, 2, 24, 4, 4);
    const auto table = oracle_full_attention(qk, cfg.grid(), cfg);
    for (std::size_t j = 1; j < 6; ++j) {
        const auto row = pfs_row(qk, cfg.grid(), j, cfg);
        double prefix = 0;
        for (std::size_t i = 0; i < j; ++i) {
            CHECK(std::fabs(row.values[i] - table(i, j)) < 1e-5);
            prefix += row.values[i];
        }
        // Some mass stays inside span j itself.
        CHECK(prefix < 4.0);
        CHECK(prefix > 0.0);
    }
    // Zero Q/K: row r of span 1 spreads over 4 + r + 1 keys.
    const auto zero = ladm_test::zero_qk(1, 1, 24, 4);
    double expect = 0;
    for (int r = 0; r < 4; ++r) expect += 4.0 / (5 + r);
    CHECK(pfs(zero, cfg.grid(), 0, 1, cfg) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("PFS argument errors") {
    auto cfg = small_cfg(4, 4);
    const auto qk = ladm_test::zero_qk(1, 1, 16, 4);
    CHECK_THROWS_AS(pfs(qk, cfg.grid(), 2, 2, cfg), Error);
    CHECK_THROWS_AS(pfs(qk, cfg.grid(), 3, 1, cfg), Error);
    CHECK_THROWS_AS(pfs(qk, cfg.grid(), 0, 4, cfg), Error);
}

TEST_CASE("oracle refuses large grids") {
    ScoringConfig cfg = small_cfg(1, 65);
    const auto qk = ladm_test::zero_qk(1, 1, 65, 2);
    CHECK_THROWS_AS(oracle_full_attention(qk, cfg.grid(), cfg), Error);
}

TEST_CASE("AFS hand value and ablations") {
    ScoringConfig cfg;
    cfg.exclude_initial = 1;
    cfg.exclude_local = 4;
    cfg.pfs_stride = 4;
    CHECK(included_sources(10, cfg) == std::vector<std::size_t>{1, 5});

    PfsRow row{10, std::vector<double>(10, 0.0)};
    row.values[1] = 0.2;
    row.values[5] = 0.6;
    CHECK(std::fabs(afs_from_row(row, 16, cfg) - 0.0600) < 1e-12);

    cfg.use_std_weight = false;
    CHECK(std::fabs(afs_from_row(row, 16, cfg) - (9.0 / 16 * 0.2 + 5.0 / 16 * 0.6)) < 1e-12);
    cfg.use_std_weight = true;
    cfg.use_length_weight = false;
    CHECK(std::fabs(afs_from_row(row, 16, cfg) - 0.2 * 0.8) < 1e-12);
    cfg.use_std_weight = false;
    CHECK(std::fabs(afs_from_row(row, 16, cfg) - 0.8) < 1e-12);
}

TEST_CASE("AFS with one included source and no std weight") {
    ScoringConfig cfg;
    cfg.exclude_initial = 3;
    cfg.exclude_local = 4;
    cfg.pfs_stride = 100;
    cfg.use_std_weight = false;
    PfsRow row{12, std::vector<double>(12, 0.0)};
    row.values[3] = 0.37;
    CHECK(included_sources(12, cfg) == std::vector<std::size_t>{3});
    CHECK(afs_from_row(row, 32, cfg) == 9.0 / 32 * 0.37);
}

TEST_CASE("uniform attention annihilates AFS and CDS") {
    auto cfg = small_cfg(4, 16);
    cfg.exclude_initial = 1;
    cfg.exclude_local = 2;
    cfg.pfs_stride = 2;
    cfg.cds_start = 5;
    const auto qk = ladm_test::zero_qk(2, 2, 64, 4);
    for (std::size_t j = 5; j < 16; ++j) CHECK(afs(qk, cfg.grid(), j, cfg) == 0.0);
    const auto rec = cds(qk, cfg.grid(), cfg);
    CHECK(rec.cds == 0.0);
    for (const auto& [j, a] : rec.afs_by_span) CHECK(a == 0.0);
}

TEST_CASE("AFS equals an explicit loop over the included sources") {
    ScoringConfig cfg;
    cfg.span_len = 4;
    cfg.max_len = 128;
    const auto model = toy(256);
    const auto qk = model.forward_qk(ladm_test::random_tokens(128, 101, 9));
    const auto grid = cfg.grid();
    const std::size_t j = 20;
    std::vector<double> p;
    std::vector<std::size_t> is;
    for (std::size_t i = 1; i + 4 + 1 <= j; i += 4) {
        is.push_back(i);
        p.push_back(pfs(qk, grid, i, j, cfg));
    }
    double mean = 0;
    for (double v : p) mean += v;
    mean /= p.size();
    double var = 0;
    for (double v : p) var += (v - mean) * (v - mean);
    double weighted = 0;
    for (std::size_t x = 0; x < p.size(); ++x) weighted += double(j - is[x]) / 32 * p[x];
    CHECK(std::fabs(afs(qk, grid, j, cfg) - std::sqrt(var / p.size()) * weighted) < 1e-6);
}

TEST_CASE("AFS needs a nonempty source set") {
    auto cfg = small_cfg(4, 8);
    const auto qk = ladm_test::zero_qk(1, 1, 32, 4);
    CHECK_THROWS_AS(afs(qk, cfg.grid(), 2, cfg), Error);
}

TEST_CASE("CDS matches an independent reimplementation") {
    ScoringConfig cfg;
    cfg.span_len = 4;
    cfg.max_len = 32;
    cfg.cds_start = 2;
    cfg.cds_stride = 1;
    cfg.pfs_stride = 1;
    cfg.exclude_initial = 0;
    cfg.exclude_local = 1;
    const auto model = toy(64);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto qk = model.forward_qk(ladm_test::random_tokens(32, 101, seed));
        const auto rec = cds(qk, cfg.grid(), cfg);
        CHECK(rec.cds >= 0.0);
        CHECK(std::fabs(rec.cds - reference_cds(qk, 4, 8, 0, 1, 1, 2, 1)) < 1e-6);
        CHECK(rec.afs_by_span.size() == 6);
        CHECK(rec.pfs_count == 1 + 2 + 3 + 4 + 5 + 6);
    }
    // Same check with the production strides on a longer grid.
    ScoringConfig wide;
    wide.span_len = 2;
    wide.max_len = 64;
    const auto qk = model.forward_qk(ladm_test::random_tokens(64, 101, 77));
    CHECK(std::fabs(cds(qk, wide.grid(), wide).cds - reference_cds(qk, 2, 32, 1, 4, 4, 16, 4)) < 1e-6);
}

TEST_CASE("CDS requires exactly L positions") {
    ScoringConfig cfg;
    cfg.span_len = 4;
    cfg.max_len = 128;
    const auto qk = ladm_test::zero_qk(1, 1, 132, 4);
    CHECK_THROWS_AS(cds(qk, cfg.grid(), cfg), Error);
}

TEST_CASE("index sets and the closed-form evaluation count") {
    const ScoringConfig cfg;
    CHECK(cfg.num_spans() == 256);
    const auto targets = scored_targets(cfg);
    CHECK(targets.front() == 16);
    CHECK(targets.back() == 252);
    CHECK(targets.size() == 60);
    CHECK(included_sources(16, cfg) == std::vector<std::size_t>{1, 5, 9});
    // |I(16 + 4t)| = t + 3 for t = 0..59.
    CHECK(pfs_evaluation_count(cfg) == 60 * 3 + 59 * 60 / 2);
    CHECK(pfs_evaluation_count(cfg) == 1950);

    ScoringConfig half = cfg;
    half.cds_stride = 2;
    std::size_t expect = 0;
    for (std::size_t j = 16; j < 256; j += 2) expect += (j - 6) / 4 + 1;
    CHECK(pfs_evaluation_count(half) == expect);
}

TEST_CASE("config validation and hashing") {
    ScoringConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.max_len = 1000;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cfg;
    bad.cds_start = 256;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cfg;
    bad.cds_start = 5;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cfg;
    bad.pfs_stride = 0;
    CHECK_THROWS_AS(bad.validate(), Error);

    auto other = cfg;
    other.use_std_weight = false;
    CHECK(cfg.hash() != other.hash());
    CHECK(cfg.hash() == ScoringConfig{}.hash());
}

TEST_CASE("long-range profile") {
    auto cfg = small_cfg(4, 16);
    cfg.cds_start = 3;
    const auto qk = ladm_test::zero_qk(1, 1, 64, 4);
    // Uniform attention: PFS(i, j) = 4 / j for every pair.
    std::vector<double> expect;
    for (std::size_t j = 3; j < 16; ++j) {
        for (std::size_t i = 1; i + 2 <= j; ++i) {
            if (j - i >= 10) expect.push_back(4.0 / j);
        }
    }
    CHECK(long_range_profile(qk, cfg.grid(), cfg, 10) == doctest::Approx(median(expect)).epsilon(1e-12));

    // Only (1, 15) is 14 spans apart.
    CHECK(long_range_profile(qk, cfg.grid(), cfg, 14) == doctest::Approx(4.0 / 15).epsilon(1e-12));
    CHECK_THROWS_AS(long_range_profile(qk, cfg.grid(), cfg, 15), Error);
    CHECK_THROWS_AS(long_range_profile(qk, cfg.grid(), cfg, 16), Error);
}

TEST_CASE("median") {
    CHECK(median({3.0}) == 3.0);
    CHECK(median({5.0, 1.0, 3.0}) == 3.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK_THROWS_AS(median({}), Error);
}

TEST_CASE("head and layer averaging") {
    auto cfg = small_cfg(4, 6);
    const auto qk = ladm_test::random_qk(2, 2, 24, 4, 12);
    const auto all = pfs_row(qk, cfg.grid(), 4, cfg);
    double manual = 0;
    for (std::size_t layer = 0; layer < 2; ++layer) {
        const auto one = qk.select_layers({layer});
        auto c = cfg;
        for (std::size_t h = 0; h < 2; ++h) {
            std::vector<Matrix> q{one.q(0, h)}, k{one.k(0, h)};
            const QKTensors single(1, 1, 24, 4, q, k);
            manual += pfs_row(single, c.grid(), 4, c).values[2];
        }
    }
    CHECK(std::fabs(all.values[2] - manual / 4) < 1e-12);

    cfg.layer_selection = LayerSelection::last();
    const auto last = pfs_row(qk, cfg.grid(), 4, cfg);
    const auto only = qk.select_layers({1});
    auto c = cfg;
    c.layer_selection = LayerSelection::all();
    CHECK(std::fabs(last.values[2] - pfs_row(only, c.grid(), 4, c).values[2]) < 1e-12);
}
