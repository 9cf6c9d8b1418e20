// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ladm/document.hpp"
#include "ladm/tensor.hpp"

namespace ladm {

/// Per-layer, per-head query and key activations of one document.
class QKTensors {
public:
    QKTensors() = default;
    /// q and k are indexed layer * heads + head; each must be seq_len x d_k.
    QKTensors(std::size_t layers, std::size_t heads, std::size_t seq_len, std::size_t d_k,
              std::vector<Matrix> q, std::vector<Matrix> k);

    std::size_t layers() const noexcept { return layers_; }
    std::size_t heads() const noexcept { return heads_; }
    std::size_t seq_len() const noexcept { return seq_len_; }
    std::size_t d_k() const noexcept { return d_k_; }

    const Matrix& q(std::size_t layer, std::size_t head) const { return q_.at(layer * heads_ + head); }
    const Matrix& k(std::size_t layer, std::size_t head) const { return k_.at(layer * heads_ + head); }

    /// Keeps only the listed layers, in the given order.
    QKTensors select_layers(const std::vector<std::size_t>& layer_indices) const;

    friend bool operator==(const QKTensors&, const QKTensors&) = default;

private:
    std::size_t layers_ = 0;
    std::size_t heads_ = 0;
    std::size_t seq_len_ = 0;
    std::size_t d_k_ = 0;
    std::vector<Matrix> q_;
    std::vector<Matrix> k_;
};

/// Which layers of a tensor set feed scoring.
struct LayerSelection {
    enum class Kind { all, last, explicit_list };
    Kind kind = Kind::all;
    std::vector<std::size_t> layers;  // used when kind == explicit_list

    static LayerSelection all() { return {}; }
    static LayerSelection last() { return {Kind::last, {}}; }
    static LayerSelection of(std::vector<std::size_t> layers) { return {Kind::explicit_list, std::move(layers)}; }

    /// Concrete layer indices for a tensor set with num_layers layers.
    std::vector<std::size_t> resolve(std::size_t num_layers) const;
    /// "all", "last" or a comma-separated index list.
    static LayerSelection parse(const std::string& text);
    std::string to_string() const;

    friend bool operator==(const LayerSelection&, const LayerSelection&) = default;
};

struct ToyModelConfig {
    std::size_t vocab_size = 4096;
    std::size_t d_model = 64;
    std::size_t num_layers = 2;
    std::size_t num_heads = 2;
    std::size_t d_k = 32;
    std::size_t max_seq = 32768;
    std::uint64_t seed = 1;
    /// Key projection reuses the query projection, so every head scores
    /// keys by similarity to the query.
    bool tie_qk = true;
    /// Q/K projections are drawn from [-gain/sqrt(d_model), gain/sqrt(d_model)].
    double qk_gain = std::sqrt(3.0);

    void validate() const;
};

/// Untrained pre-norm decoder-only transformer. Positions enter only through
/// the causal mask. All weights are drawn in a fixed order from one
/// mt19937_64 stream seeded by cfg.seed, uniform in [-1/sqrt(d_model),
/// 1/sqrt(d_model)] (Q/K scaled by qk_gain); layer norms have unit gain and
/// zero bias.
class ToyModel {
public:
    struct Layer {
        Matrix wq, wk, wv, wo;  // d_model x d_model
        Matrix w1;              // d_model x 4 d_model
        Matrix w2;              // 4 d_model x d_model
    };

    explicit ToyModel(const ToyModelConfig& cfg);

    const ToyModelConfig& config() const noexcept { return cfg_; }
    const Matrix& embedding() const noexcept { return embedding_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }

    /// Runs the full causal forward pass and records each layer's post-projection
    /// Q and K split into heads.
    QKTensors forward_qk(const TokenizedDocument& doc) const;
    QKTensors forward_qk(const std::vector<TokenId>& tokens) const;

private:
    ToyModelConfig cfg_;
    Matrix embedding_;  // vocab_size x d_model
    std::vector<Layer> layers_;
};

inline ToyModel init_model(const ToyModelConfig& cfg) { return ToyModel(cfg); }

}  // namespace ladm
