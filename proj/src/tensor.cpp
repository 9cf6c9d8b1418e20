// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#include "ladm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ladm/error.hpp"

namespace ladm {

namespace {

void require_finite(std::span<const float> values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw Error(ErrorCode::invalid_argument,
                        std::string(what) + ": non-finite value at flat index " + std::to_string(i));
        }
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw Error(ErrorCode::shape_mismatch, "matrix payload has " + std::to_string(data_.size()) +
                                                   " values, shape " + shape_string() + " needs " +
                                                   std::to_string(rows_ * cols_));
    }
    require_finite(data_, "matrix");
}

Matrix Matrix::slice_rows(std::size_t first, std::size_t count) const {
    if (first + count > rows_) {
        throw Error(ErrorCode::out_of_range, "row slice [" + std::to_string(first) + ", " +
                                                 std::to_string(first + count) + ") exceeds " +
                                                 shape_string());
    }
    auto begin = data_.begin() + static_cast<std::ptrdiff_t>(first * cols_);
    return Matrix(count, cols_, std::vector<float>(begin, begin + static_cast<std::ptrdiff_t>(count * cols_)));
}

std::string Matrix::shape_string() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Mask::Mask(std::size_t rows, std::size_t cols, bool value)
    : rows_(rows), cols_(cols), flags_(rows * cols, value ? 1 : 0) {}

Mask Mask::causal(std::size_t rows, std::size_t cols, std::size_t offset) {
    Mask m(rows, cols, false);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t visible = std::min(cols, r + offset + 1);
        for (std::size_t c = 0; c < visible; ++c) m.set(r, c, true);
    }
    return m;
}

SpanGrid::SpanGrid(std::size_t span_len, std::size_t num_spans) : span_len_(span_len), num_spans_(num_spans) {
    if (span_len_ < 1) throw Error(ErrorCode::invalid_argument, "span length must be >= 1");
    if (num_spans_ < 2) {
        throw Error(ErrorCode::invalid_argument,
                    "span grid needs at least 2 spans, got " + std::to_string(num_spans_));
    }
}

SpanGrid SpanGrid::from_length(std::size_t total_len, std::size_t span_len) {
    if (span_len == 0 || total_len % span_len != 0) {
        throw Error(ErrorCode::invalid_argument, "length " + std::to_string(total_len) +
                                                     " is not a multiple of span length " +
                                                     std::to_string(span_len));
    }
    return SpanGrid(span_len, total_len / span_len);
}

Matrix stable_softmax_rows(const Matrix& logits, const Mask& mask) {
    if (mask.rows() != logits.rows() || mask.cols() != logits.cols()) {
        throw Error(ErrorCode::shape_mismatch, "mask shape (" + std::to_string(mask.rows()) + "x" +
                                                   std::to_string(mask.cols()) + ") does not match logits " +
                                                   logits.shape_string());
    }
    const std::size_t rows = logits.rows();
    const std::size_t cols = logits.cols();
    std::vector<float> out(rows * cols, 0.0f);
    std::vector<double> e(cols);
    for (std::size_t r = 0; r < rows; ++r) {
        double max = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < cols; ++c) {
            if (mask(r, c)) max = std::max(max, static_cast<double>(logits(r, c)));
        }
        if (max == -std::numeric_limits<double>::infinity()) {
            throw Error(ErrorCode::invalid_argument, "softmax row " + std::to_string(r) + " has no valid entries");
        }
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            e[c] = mask(r, c) ? std::exp(static_cast<double>(logits(r, c)) - max) : 0.0;
            total += e[c];
        }
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = static_cast<float>(e[c] / total);
    }
    return Matrix(rows, cols, std::move(out));
}

Matrix matmul_scaled(const Matrix& q, const Matrix& k, double scale) {
    if (q.cols() != k.cols()) {
        throw Error(ErrorCode::shape_mismatch,
                    "matmul_scaled: q " + q.shape_string() + " and k " + k.shape_string() + " differ in columns");
    }
    std::vector<float> out(q.rows() * k.rows());
    for (std::size_t r = 0; r < q.rows(); ++r) {
        const auto qr = q.row(r);
        for (std::size_t c = 0; c < k.rows(); ++c) {
            const auto kc = k.row(c);
            double acc = 0.0;
            for (std::size_t d = 0; d < qr.size(); ++d) acc += static_cast<double>(qr[d]) * kc[d];
            out[r * k.rows() + c] = static_cast<float>(scale * acc);
        }
    }
    return Matrix(q.rows(), k.rows(), std::move(out));
}

double block_sum(const Matrix& att, const SpanGrid& grid, std::size_t span_index) {
    if (span_index >= grid.num_spans() || grid.end(span_index) > att.cols()) {
        throw Error(ErrorCode::out_of_range, "span " + std::to_string(span_index) + " (columns [" +
                                                 std::to_string(grid.begin(span_index)) + ", " +
                                                 std::to_string(grid.end(span_index)) + ")) outside " +
                                                 att.shape_string());
    }
    double total = 0.0;
    for (std::size_t r = 0; r < att.rows(); ++r) {
        const auto row = att.row(r);
        for (std::size_t c = grid.begin(span_index); c < grid.end(span_index); ++c) total += row[c];
    }
    return total;
}

}  // namespace ladm
