// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ladm/model.hpp"
#include "ladm/tensor.hpp"

namespace ladm {

/// Hyperparameters of the span-level dependency score. Defaults are the
/// 32K-token production setting: 256 spans of 128 tokens.
struct ScoringConfig {
    std::size_t span_len = 128;       // l
    std::size_t exclude_initial = 1;  // m: spans 0..m-1 never scored as sources
    std::size_t exclude_local = 4;    // n: the n spans right before j are skipped
    std::size_t pfs_stride = 4;       // source spans i step
    std::size_t cds_start = 16;       // n0: first scored target span
    std::size_t cds_stride = 4;       // target spans j step
    std::size_t max_len = 32768;      // L
    LayerSelection layer_selection;   // heads of these layers are averaged
    bool use_std_weight = true;
    bool use_length_weight = true;
    /// When set, span j's queries also see span j's own keys under a token
    /// causal mask; otherwise keys come only from spans 0..j-1.
    bool within_span_causal_keys = false;

    std::size_t num_spans() const noexcept { return span_len ? max_len / span_len : 0; }
    SpanGrid grid() const { return SpanGrid(span_len, num_spans()); }

    void validate() const;
    /// Canonical "key=value;..." rendering used for hashing.
    std::string canonical() const;
    /// 64-bit FNV-1a of canonical().
    std::uint64_t hash() const;
};

/// Source spans I(j) = {m, m + pfs_stride, ...} up to j - n - 1.
std::vector<std::size_t> included_sources(std::size_t j, const ScoringConfig& cfg);
/// Target spans {n0, n0 + cds_stride, ...} up to N - 1.
std::vector<std::size_t> scored_targets(const ScoringConfig& cfg);
/// Number of PFS values cds() consumes: the sum of |I(j)| over scored j.
std::size_t pfs_evaluation_count(const ScoringConfig& cfg);

/// PFS(i, j) for every i < j of one target span, head/layer averaged.
struct PfsRow {
    std::size_t target = 0;
    std::vector<double> values;  // values[i] = PFS(i, target)
};

/// Computes a whole PfsRow with one pass of span j's queries over its key prefix.
PfsRow pfs_row(const QKTensors& tensors, const SpanGrid& grid, std::size_t j, const ScoringConfig& cfg);

double pfs(const QKTensors& tensors, const SpanGrid& grid, std::size_t i, std::size_t j, const ScoringConfig& cfg);

/// AFS(j) from an already computed row. Throws when I(j) is empty.
double afs_from_row(const PfsRow& row, std::size_t num_spans, const ScoringConfig& cfg);
double afs(const QKTensors& tensors, const SpanGrid& grid, std::size_t j, const ScoringConfig& cfg);

struct ScoreRecord {
    std::string doc_id;
    std::string domain;
    double cds = 0.0;
    std::vector<std::pair<std::size_t, double>> afs_by_span;
    std::size_t pfs_count = 0;
    std::uint64_t config_hash = 0;
};

/// Rows for every scored target span, in ascending target order.
std::vector<PfsRow> scored_rows(const QKTensors& tensors, const SpanGrid& grid, const ScoringConfig& cfg);

ScoreRecord cds_from_rows(const std::vector<PfsRow>& rows, const ScoringConfig& cfg);
ScoreRecord cds(const QKTensors& tensors, const SpanGrid& grid, const ScoringConfig& cfg);

/// Median PFS(i, j) over the pairs cds() consumes with j - i >= min_distance.
double long_range_profile_from_rows(const std::vector<PfsRow>& rows, const ScoringConfig& cfg,
                                    std::size_t min_distance);
double long_range_profile(const QKTensors& tensors, const SpanGrid& grid, const ScoringConfig& cfg,
                          std::size_t min_distance);

/// Every PFS(i, j), i < j, obtained from the full materialized attention
/// matrix of each head. O(L^2 d_k) per head, so capped at 64 spans.
struct PfsTable {
    std::size_t num_spans = 0;
    std::vector<double> values;  // num_spans x num_spans, row j column i

    double operator()(std::size_t i, std::size_t j) const { return values[j * num_spans + i]; }
};

inline constexpr std::size_t kOracleMaxSpans = 64;

PfsTable oracle_full_attention(const QKTensors& tensors, const SpanGrid& grid, const ScoringConfig& cfg);

/// Median with the textbook even-count rule. Input must be nonempty.
double median(std::vector<double> values);

}  // namespace ladm
