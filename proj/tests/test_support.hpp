// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ladm/model.hpp"
#include "ladm/tensor.hpp"

namespace ladm_test {

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("ladm-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<float> random_floats(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    std::vector<float> out(n);
    for (auto& v : out) v = static_cast<float>(dist(gen));
    return out;
}

inline ladm::Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
    return ladm::Matrix(r, c, random_floats(r * c, seed, scale));
}

/// Tensor set with independent uniform entries in every Q and K.
inline ladm::QKTensors random_qk(std::size_t layers, std::size_t heads, std::size_t seq_len, std::size_t d_k,
                                 std::uint64_t seed, double scale = 1.0) {
    std::vector<ladm::Matrix> q, k;
    for (std::size_t i = 0; i < layers * heads; ++i) {
        q.push_back(random_matrix(seq_len, d_k, seed * 7919 + 2 * i, scale));
        k.push_back(random_matrix(seq_len, d_k, seed * 7919 + 2 * i + 1, scale));
    }
    return ladm::QKTensors(layers, heads, seq_len, d_k, std::move(q), std::move(k));
}

/// All-zero Q and K: every softmax row is uniform over its valid columns.
inline ladm::QKTensors zero_qk(std::size_t layers, std::size_t heads, std::size_t seq_len, std::size_t d_k) {
    std::vector<ladm::Matrix> q, k;
    for (std::size_t i = 0; i < layers * heads; ++i) {
        q.emplace_back(seq_len, d_k);
        k.emplace_back(seq_len, d_k);
    }
    return ladm::QKTensors(layers, heads, seq_len, d_k, std::move(q), std::move(k));
}

inline std::vector<ladm::TokenId> random_tokens(std::size_t n, std::size_t vocab, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::vector<ladm::TokenId> out(n);
    for (auto& t : out) t = static_cast<ladm::TokenId>(gen() % vocab);
    return out;
}

}  // namespace ladm_test
