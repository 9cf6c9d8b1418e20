// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>

#include "ladm/error.hpp"
#include "ladm/model.hpp"
#include "test_support.hpp"

using namespace ladm;

namespace {

ToyModelConfig small_cfg(std::uint64_t seed = 1) {
    ToyModelConfig c;
    c.vocab_size = 64;
    c.d_model = 32;
    c.num_layers = 2;
    c.num_heads = 4;
    c.d_k = 8;
    c.max_seq = 512;
    c.seed = seed;
    return c;
}

bool same_weights(const ToyModel& a, const ToyModel& b) {
    if (!(a.embedding() == b.embedding())) return false;
    for (std::size_t l = 0; l < a.layers().size(); ++l) {
        const auto& x = a.layers()[l];
        const auto& y = b.layers()[l];
        if (!(x.wq == y.wq && x.wk == y.wk && x.wv == y.wv && x.wo == y.wo && x.w1 == y.w1 && x.w2 == y.w2)) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("init is deterministic per seed") {
    const ToyModel a(small_cfg(1));
    const ToyModel b(small_cfg(1));
    const ToyModel c(small_cfg(2));
    CHECK(same_weights(a, b));
    CHECK_FALSE(same_weights(a, c));
}

TEST_CASE("projection shapes") {
    const auto m = init_model(small_cfg());
    REQUIRE(m.layers().size() == 2);
    CHECK(m.layers()[0].wq.rows() == 32);
    CHECK(m.layers()[0].wq.cols() == 32);
    CHECK(m.layers()[1].wk.rows() == 32);
    CHECK(m.layers()[1].wk.cols() == 32);
    CHECK(m.embedding().rows() == 64);
    CHECK(m.layers()[0].w1.cols() == 128);
}

TEST_CASE("untied keys draw their own weights") {
    auto cfg = small_cfg();
    cfg.tie_qk = false;
    const ToyModel m(cfg);
    CHECK_FALSE(m.layers()[0].wq == m.layers()[0].wk);
    const ToyModel tied(small_cfg());
    CHECK(tied.layers()[0].wq == tied.layers()[0].wk);
}

TEST_CASE("qk_gain scales the query weight range") {
    auto cfg = small_cfg();
    cfg.qk_gain = 1.0;
    const ToyModel m(cfg);
    const double bound = 1.0 / std::sqrt(32.0);
    double max_abs = 0;
    for (float w : m.layers()[0].wq.data()) max_abs = std::max(max_abs, std::fabs(double(w)));
    CHECK(max_abs <= bound);
    CHECK(max_abs > 0.9 * bound);
}

TEST_CASE("config validation") {
    auto cfg = small_cfg();
    cfg.num_heads = 3;
    CHECK_THROWS_AS(ToyModel{cfg}, Error);
    cfg = small_cfg();
    cfg.d_k = 16;
    CHECK_THROWS_AS(ToyModel{cfg}, Error);
    cfg = small_cfg();
    cfg.qk_gain = 0;
    CHECK_THROWS_AS(ToyModel{cfg}, Error);
}

TEST_CASE("forward shapes and determinism") {
    const ToyModel m(small_cfg());
    const auto toks = ladm_test::random_tokens(256, 64, 3);
    const auto a = m.forward_qk(toks);
    const auto b = m.forward_qk(toks);
    CHECK(a == b);
    CHECK(a.layers() == 2);
    CHECK(a.heads() == 4);
    for (std::size_t l = 0; l < 2; ++l) {
        for (std::size_t h = 0; h < 4; ++h) {
            CHECK(a.q(l, h).rows() == 256);
            CHECK(a.q(l, h).cols() == 8);
            CHECK(a.k(l, h).rows() == 256);
        }
    }
}

TEST_CASE("forward is causal") {
    const ToyModel m(small_cfg());
    auto toks = ladm_test::random_tokens(64, 64, 4);
    const auto before = m.forward_qk(toks);
    toks[40] = (toks[40] + 1) % 64;
    const auto after = m.forward_qk(toks);
    for (std::size_t l = 0; l < 2; ++l) {
        for (std::size_t h = 0; h < 4; ++h) {
            CHECK(before.q(l, h).slice_rows(0, 40) == after.q(l, h).slice_rows(0, 40));
            CHECK(before.k(l, h).slice_rows(0, 40) == after.k(l, h).slice_rows(0, 40));
            CHECK_FALSE(before.q(l, h).slice_rows(40, 1) == after.q(l, h).slice_rows(40, 1));
        }
    }
}

TEST_CASE("first layer Q matches a direct recomputation") {
    const ToyModel m(small_cfg());
    const auto toks = ladm_test::random_tokens(16, 64, 5);
    const auto qk = m.forward_qk(toks);
    const auto& wq = m.layers()[0].wq;
    for (std::size_t t = 0; t < toks.size(); ++t) {
        const auto e = m.embedding().row(toks[t]);
        double mean = 0, var = 0;
        for (float v : e) mean += v;
        mean /= 32;
        for (float v : e) var += (v - mean) * (v - mean);
        var /= 32;
        std::vector<double> h(32);
        for (int i = 0; i < 32; ++i) h[i] = (e[i] - mean) / std::sqrt(var + 1e-5);
        for (int head = 0; head < 4; ++head) {
            for (int c = 0; c < 8; ++c) {
                double acc = 0;
                for (int i = 0; i < 32; ++i) acc += h[i] * wq(i, head * 8 + c);
                CHECK(std::fabs(qk.q(0, head)(t, c) - acc) < 1e-5);
            }
        }
    }
}

TEST_CASE("forward errors") {
    const ToyModel m(small_cfg());
    std::vector<TokenId> toks(10, 1);
    toks[7] = 64;
    try {
        m.forward_qk(toks);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("position 7") != std::string::npos);
    }
    CHECK_THROWS_AS(m.forward_qk(std::vector<TokenId>{}), Error);
    CHECK_THROWS_AS(m.forward_qk(std::vector<TokenId>(513, 0)), Error);
}

TEST_CASE("layer selection") {
    CHECK(LayerSelection::parse("all").resolve(3) == std::vector<std::size_t>{0, 1, 2});
    CHECK(LayerSelection::parse("last").resolve(3) == std::vector<std::size_t>{2});
    CHECK(LayerSelection::parse("2,0").resolve(3) == std::vector<std::size_t>{2, 0});
    CHECK_THROWS_AS(LayerSelection::parse("0,9").resolve(3), Error);
    CHECK_THROWS_AS(LayerSelection::parse("x"), Error);
    CHECK(LayerSelection::parse("1,2").to_string() == "1,2");

    const auto qk = ladm_test::random_qk(3, 2, 8, 4, 1);
    const auto sub = qk.select_layers({2});
    CHECK(sub.layers() == 1);
    CHECK(sub.q(0, 1) == qk.q(2, 1));
    CHECK(sub.k(0, 0) == qk.k(2, 0));
}

TEST_CASE("QKTensors validates shapes") {
    std::vector<Matrix> q{Matrix(4, 2)}, k{Matrix(4, 3)};
    CHECK_THROWS_AS(QKTensors(1, 1, 4, 2, q, k), Error);
    CHECK_THROWS_AS(QKTensors(1, 2, 4, 2, q, q), Error);
}
