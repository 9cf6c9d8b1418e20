// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ladm {

/// Dense row-major float32 matrix. Immutable once built; every constructor
/// validates that the payload matches the shape and holds only finite values.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    float operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    std::span<const float> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }
    std::span<const float> data() const noexcept { return data_; }

    /// Contiguous row range [first, first + count) as a new matrix.
    Matrix slice_rows(std::size_t first, std::size_t count) const;

    std::string shape_string() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

/// Per-entry validity flags with the same shape as a logits matrix.
class Mask {
public:
    Mask(std::size_t rows, std::size_t cols, bool value = true);

    static Mask all(std::size_t rows, std::size_t cols) { return Mask(rows, cols, true); }
    /// Token-level causal mask: row r may see columns <= r + offset.
    static Mask causal(std::size_t rows, std::size_t cols, std::size_t offset = 0);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool operator()(std::size_t r, std::size_t c) const noexcept { return flags_[r * cols_ + c] != 0; }
    void set(std::size_t r, std::size_t c, bool value) noexcept { flags_[r * cols_ + c] = value ? 1 : 0; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<std::uint8_t> flags_;
};

/// Partition of a token sequence into num_spans contiguous spans of span_len tokens.
class SpanGrid {
public:
    SpanGrid(std::size_t span_len, std::size_t num_spans);

    /// Grid covering total_len tokens; total_len must be a multiple of span_len.
    static SpanGrid from_length(std::size_t total_len, std::size_t span_len);

    std::size_t span_len() const noexcept { return span_len_; }
    std::size_t num_spans() const noexcept { return num_spans_; }
    std::size_t total_len() const noexcept { return span_len_ * num_spans_; }

    std::size_t begin(std::size_t span) const noexcept { return span * span_len_; }
    std::size_t end(std::size_t span) const noexcept { return (span + 1) * span_len_; }

private:
    std::size_t span_len_;
    std::size_t num_spans_;
};

/// Row-wise softmax over the valid entries of each row, with per-row max
/// subtraction. Invalid entries come out as exactly 0.
Matrix stable_softmax_rows(const Matrix& logits, const Mask& mask);

/// result(r, c) = scale * dot(q.row(r), k.row(c)); shape q.rows() x k.rows().
Matrix matmul_scaled(const Matrix& q, const Matrix& k, double scale);

/// Sum of every entry in the column block of span_index, across all rows.
double block_sum(const Matrix& att, const SpanGrid& grid, std::size_t span_index);

}  // namespace ladm
