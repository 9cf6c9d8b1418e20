// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#include "ladm/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ladm/error.hpp"

namespace ladm {

void ScoringConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::config, msg); };
    if (span_len < 1) fail("span_len must be >= 1");
    if (max_len % span_len != 0) {
        fail("max_len " + std::to_string(max_len) + " is not divisible by span_len " + std::to_string(span_len));
    }
    if (num_spans() < 2) fail("need at least 2 spans");
    if (exclude_local < 1) fail("exclude_local (n) must be >= 1");
    if (pfs_stride < 1 || cds_stride < 1) fail("strides must be >= 1");
    if (cds_start <= exclude_initial + exclude_local) {
        fail("cds_start (n0=" + std::to_string(cds_start) + ") must exceed m + n = " +
             std::to_string(exclude_initial + exclude_local));
    }
    if (cds_start >= num_spans()) {
        fail("cds_start " + std::to_string(cds_start) + " leaves no scored span among " +
             std::to_string(num_spans()));
    }
}

std::string ScoringConfig::canonical() const {
    return "span_len=" + std::to_string(span_len) + ";m=" + std::to_string(exclude_initial) +
           ";n=" + std::to_string(exclude_local) + ";d_afs=" + std::to_string(pfs_stride) +
           ";n0=" + std::to_string(cds_start) + ";d_cds=" + std::to_string(cds_stride) +
           ";max_len=" + std::to_string(max_len) + ";heads=mean;layers=" + layer_selection.to_string() +
           ";std=" + (use_std_weight ? "1" : "0") + ";length=" + (use_length_weight ? "1" : "0") +
           ";causal_keys=" + (within_span_causal_keys ? "1" : "0");
}

std::uint64_t ScoringConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::vector<std::size_t> included_sources(std::size_t j, const ScoringConfig& cfg) {
    std::vector<std::size_t> out;
    if (j < cfg.exclude_local + 1) return out;
    const std::size_t last = j - cfg.exclude_local - 1;
    for (std::size_t i = cfg.exclude_initial; i <= last; i += cfg.pfs_stride) out.push_back(i);
    return out;
}

std::vector<std::size_t> scored_targets(const ScoringConfig& cfg) {
    std::vector<std::size_t> out;
    for (std::size_t j = cfg.cds_start; j < cfg.num_spans(); j += cfg.cds_stride) out.push_back(j);
    return out;
}

std::size_t pfs_evaluation_count(const ScoringConfig& cfg) {
    std::size_t total = 0;
    for (std::size_t j : scored_targets(cfg)) total += included_sources(j, cfg).size();
    return total;
}

namespace {

void check_grid(const QKTensors& tensors, const SpanGrid& grid, const ScoringConfig& cfg) {
    if (grid.span_len() != cfg.span_len) {
        throw Error(ErrorCode::invalid_argument, "grid span length " + std::to_string(grid.span_len()) +
                                                     " differs from config span_len " +
                                                     std::to_string(cfg.span_len));
    }
    if (tensors.seq_len() < grid.total_len()) {
        throw Error(ErrorCode::shape_mismatch, "tensors hold " + std::to_string(tensors.seq_len()) +
                                                   " positions, grid needs " + std::to_string(grid.total_len()));
    }
}

}  // namespace

PfsRow pfs_row(const QKTensors& tensors, const SpanGrid& grid, std::size_t j, const ScoringConfig& cfg) {
    check_grid(tensors, grid, cfg);
    if (j == 0 || j >= grid.num_spans()) {
        throw Error(ErrorCode::out_of_range, "target span " + std::to_string(j) + " outside [1, " +
                                                 std::to_string(grid.num_spans()) + ")");
    }
    const std::size_t l = grid.span_len();
    const std::size_t dk = tensors.d_k();
    const std::size_t row0 = grid.begin(j);
    const std::size_t prefix = cfg.within_span_causal_keys ? grid.end(j) : grid.begin(j);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    const auto layers = cfg.layer_selection.resolve(tensors.layers());

    std::vector<double> sums(j, 0.0);
    std::vector<double> e(prefix);
    for (std::size_t layer : layers) {
        for (std::size_t head = 0; head < tensors.heads(); ++head) {
            const Matrix& q = tensors.q(layer, head);
            const Matrix& k = tensors.k(layer, head);
            for (std::size_t r = 0; r < l; ++r) {
                const auto qr = q.row(row0 + r);
                // Causal variant: query row0 + r sees keys up to and including itself.
                const std::size_t visible = cfg.within_span_causal_keys ? row0 + r + 1 : prefix;
                double max = -std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < visible; ++c) {
                    const auto kc = k.row(c);
                    double dot = 0.0;
                    for (std::size_t d = 0; d < dk; ++d) dot += static_cast<double>(qr[d]) * kc[d];
                    e[c] = dot * scale;
                    max = std::max(max, e[c]);
                }
                double total = 0.0;
                for (std::size_t c = 0; c < visible; ++c) {
                    e[c] = std::exp(e[c] - max);
                    total += e[c];
                }
                for (std::size_t i = 0; i < j; ++i) {
                    double block = 0.0;
                    for (std::size_t c = i * l; c < (i + 1) * l; ++c) block += e[c];
                    sums[i] += block / total;
                }
            }
        }
    }
    const double count = static_cast<double>(layers.size() * tensors.heads());
    for (double& s : sums) s /= count;
    return {j, std::move(sums)};
}

double pfs(const QKTensors& tensors, const SpanGrid& grid, std::size_t i, std::size_t j, const ScoringConfig& cfg) {
    if (i >= j) {
        throw Error(ErrorCode::invalid_argument,
                    "PFS needs i < j, got i=" + std::to_string(i) + " j=" + std::to_string(j));
    }
    return pfs_row(tensors, grid, j, cfg).values[i];
}

double afs_from_row(const PfsRow& row, std::size_t num_spans, const ScoringConfig& cfg) {
    const std::size_t j = row.target;
    const auto sources = included_sources(j, cfg);
    if (sources.empty()) {
        throw Error(ErrorCode::invalid_argument, "span " + std::to_string(j) +
                                                     " has no included source spans under m=" +
                                                     std::to_string(cfg.exclude_initial) +
                                                     " n=" + std::to_string(cfg.exclude_local));
    }
    double sigma = 1.0;
    if (cfg.use_std_weight) {
        double mean = 0.0;
        double min = std::numeric_limits<double>::infinity();
        double max = -min;
        for (std::size_t i : sources) {
            mean += row.values[i];
            min = std::min(min, row.values[i]);
            max = std::max(max, row.values[i]);
        }
        mean /= static_cast<double>(sources.size());
        double var = 0.0;
        for (std::size_t i : sources) var += (row.values[i] - mean) * (row.values[i] - mean);
        // A constant set has exactly zero spread even where the rounded mean drifts.
        sigma = min == max ? 0.0 : std::sqrt(var / static_cast<double>(sources.size()));
    }
    double weighted = 0.0;
    for (std::size_t i : sources) {
        const double w = cfg.use_length_weight ? static_cast<double>(j - i) / static_cast<double>(num_spans) : 1.0;
        weighted += w * row.values[i];
    }
    return sigma * weighted;
}

double afs(const QKTensors& tensors, const SpanGrid& grid, std::size_t j, const ScoringConfig& cfg) {
    if (included_sources(j, cfg).empty()) {
        throw Error(ErrorCode::invalid_argument, "span " + std::to_string(j) + " too small for m/n settings");
    }
    return afs_from_row(pfs_row(tensors, grid, j, cfg), grid.num_spans(), cfg);
}

std::vector<PfsRow> scored_rows(const QKTensors& tensors, const SpanGrid& grid, const ScoringConfig& cfg) {
    cfg.validate();
    if (tensors.seq_len() != cfg.max_len || grid.total_len() != cfg.max_len) {
        throw Error(ErrorCode::shape_mismatch, "scoring needs exactly " + std::to_string(cfg.max_len) +
                                                   " positions, tensors have " +
                                                   std::to_string(tensors.seq_len()));
    }
    std::vector<PfsRow> rows;
    for (std::size_t j : scored_targets(cfg)) rows.push_back(pfs_row(tensors, grid, j, cfg));
    return rows;
}

ScoreRecord cds_from_rows(const std::vector<PfsRow>& rows, const ScoringConfig& cfg) {
    ScoreRecord rec;
    rec.config_hash = cfg.hash();
    const std::size_t n_spans = cfg.num_spans();
    for (const PfsRow& row : rows) {
        const double a = afs_from_row(row, n_spans, cfg);
        const double w =
            cfg.use_length_weight ? static_cast<double>(row.target) / static_cast<double>(n_spans) : 1.0;
        rec.cds += w * a;
        rec.afs_by_span.emplace_back(row.target, a);
        rec.pfs_count += included_sources(row.target, cfg).size();
    }
    return rec;
}

ScoreRecord cds(const QKTensors& tensors, const SpanGrid& grid, const ScoringConfig& cfg) {
    return cds_from_rows(scored_rows(tensors, grid, cfg), cfg);
}

double median(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::invalid_argument, "median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double long_range_profile_from_rows(const std::vector<PfsRow>& rows, const ScoringConfig& cfg,
                                    std::size_t min_distance) {
    if (min_distance >= cfg.num_spans()) {
        throw Error(ErrorCode::invalid_argument, "min_distance " + std::to_string(min_distance) +
                                                     " must be below the span count " +
                                                     std::to_string(cfg.num_spans()));
    }
    std::vector<double> values;
    for (const PfsRow& row : rows) {
        for (std::size_t i : included_sources(row.target, cfg)) {
            if (row.target - i >= min_distance) values.push_back(row.values[i]);
        }
    }
    if (values.empty()) {
        throw Error(ErrorCode::invalid_argument,
                    "no scored span pair is at least " + std::to_string(min_distance) + " spans apart");
    }
    return median(std::move(values));
}

double long_range_profile(const QKTensors& tensors, const SpanGrid& grid, const ScoringConfig& cfg,
                          std::size_t min_distance) {
    return long_range_profile_from_rows(scored_rows(tensors, grid, cfg), cfg, min_distance);
}

PfsTable oracle_full_attention(const QKTensors& tensors, const SpanGrid& grid, const ScoringConfig& cfg) {
    check_grid(tensors, grid, cfg);
    const std::size_t n_spans = grid.num_spans();
    if (n_spans > kOracleMaxSpans) {
        throw Error(ErrorCode::invalid_argument, "oracle is capped at " + std::to_string(kOracleMaxSpans) +
                                                     " spans, got " + std::to_string(n_spans));
    }
    const std::size_t l = grid.span_len();
    const std::size_t total = grid.total_len();
    const double scale = 1.0 / std::sqrt(static_cast<double>(tensors.d_k()));
    const auto layers = cfg.layer_selection.resolve(tensors.layers());

    // Span 0 has no strict prefix, so the block-causal variant starts at span 1.
    const std::size_t first_row = cfg.within_span_causal_keys ? 0 : l;
    Mask mask(total - first_row, total, false);
    for (std::size_t r = 0; r < mask.rows(); ++r) {
        const std::size_t pos = first_row + r;
        const std::size_t visible = cfg.within_span_causal_keys ? pos + 1 : (pos / l) * l;
        for (std::size_t c = 0; c < visible; ++c) mask.set(r, c, true);
    }

    PfsTable table{n_spans, std::vector<double>(n_spans * n_spans, 0.0)};
    for (std::size_t layer : layers) {
        for (std::size_t head = 0; head < tensors.heads(); ++head) {
            const Matrix q = tensors.q(layer, head).slice_rows(first_row, total - first_row);
            const Matrix k = tensors.k(layer, head).slice_rows(0, total);
            const Matrix att = stable_softmax_rows(matmul_scaled(q, k, scale), mask);
            for (std::size_t j = 1; j < n_spans; ++j) {
                const Matrix rows = att.slice_rows(grid.begin(j) - first_row, l);
                for (std::size_t i = 0; i < j; ++i) table.values[j * n_spans + i] += block_sum(rows, grid, i);
            }
        }
    }
    const double count = static_cast<double>(layers.size() * tensors.heads());
    for (double& v : table.values) v /= count;
    return table;
}

}  // namespace ladm
