// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#include "ladm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ladm/error.hpp"
#include "ladm/rng.hpp"

namespace ladm {

QKTensors::QKTensors(std::size_t layers, std::size_t heads, std::size_t seq_len, std::size_t d_k,
                     std::vector<Matrix> q, std::vector<Matrix> k)
    : layers_(layers), heads_(heads), seq_len_(seq_len), d_k_(d_k), q_(std::move(q)), k_(std::move(k)) {
    const std::size_t expected = layers_ * heads_;
    if (q_.size() != expected || k_.size() != expected) {
        throw Error(ErrorCode::shape_mismatch, "QK tensors expect " + std::to_string(expected) +
                                                   " matrices per side, got q=" + std::to_string(q_.size()) +
                                                   " k=" + std::to_string(k_.size()));
    }
    for (std::size_t i = 0; i < expected; ++i) {
        for (const Matrix* m : {&q_[i], &k_[i]}) {
            if (m->rows() != seq_len_ || m->cols() != d_k_) {
                throw Error(ErrorCode::shape_mismatch, "QK tensor " + std::to_string(i) + " has shape " +
                                                           m->shape_string() + ", expected (" +
                                                           std::to_string(seq_len_) + "x" +
                                                           std::to_string(d_k_) + ")");
            }
        }
    }
}

QKTensors QKTensors::select_layers(const std::vector<std::size_t>& layer_indices) const {
    std::vector<Matrix> q;
    std::vector<Matrix> k;
    for (std::size_t layer : layer_indices) {
        if (layer >= layers_) {
            throw Error(ErrorCode::out_of_range, "layer " + std::to_string(layer) + " not in tensors with " +
                                                     std::to_string(layers_) + " layers");
        }
        for (std::size_t h = 0; h < heads_; ++h) {
            q.push_back(this->q(layer, h));
            k.push_back(this->k(layer, h));
        }
    }
    return QKTensors(layer_indices.size(), heads_, seq_len_, d_k_, std::move(q), std::move(k));
}

std::vector<std::size_t> LayerSelection::resolve(std::size_t num_layers) const {
    if (num_layers == 0) throw Error(ErrorCode::invalid_argument, "tensor set has no layers");
    std::vector<std::size_t> out;
    switch (kind) {
        case Kind::all:
            for (std::size_t i = 0; i < num_layers; ++i) out.push_back(i);
            break;
        case Kind::last:
            out.push_back(num_layers - 1);
            break;
        case Kind::explicit_list:
            if (layers.empty()) throw Error(ErrorCode::config, "explicit layer selection is empty");
            for (std::size_t i : layers) {
                if (i >= num_layers) {
                    throw Error(ErrorCode::out_of_range, "selected layer " + std::to_string(i) +
                                                             " but tensors have " + std::to_string(num_layers));
                }
                out.push_back(i);
            }
            break;
    }
    return out;
}

LayerSelection LayerSelection::parse(const std::string& text) {
    if (text == "all") return all();
    if (text == "last") return last();
    std::vector<std::size_t> list;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const std::string item = text.substr(pos, comma - pos);
        if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
            throw Error(ErrorCode::config, "bad layer selection '" + text + "'");
        }
        list.push_back(static_cast<std::size_t>(std::stoull(item)));
        pos = comma + 1;
    }
    return of(std::move(list));
}

std::string LayerSelection::to_string() const {
    switch (kind) {
        case Kind::all: return "all";
        case Kind::last: return "last";
        case Kind::explicit_list: break;
    }
    std::string s;
    for (std::size_t i = 0; i < layers.size(); ++i) s += (i ? "," : "") + std::to_string(layers[i]);
    return s;
}

void ToyModelConfig::validate() const {
    if (vocab_size == 0 || d_model == 0 || num_layers == 0 || num_heads == 0 || max_seq == 0) {
        throw Error(ErrorCode::config, "toy model dimensions must all be positive");
    }
    if (d_model % num_heads != 0) {
        throw Error(ErrorCode::config, "d_model " + std::to_string(d_model) + " is not divisible by num_heads " +
                                           std::to_string(num_heads));
    }
    if (d_k != d_model / num_heads) {
        throw Error(ErrorCode::config, "d_k " + std::to_string(d_k) + " must equal d_model / num_heads = " +
                                           std::to_string(d_model / num_heads));
    }
    if (!(qk_gain > 0.0) || !std::isfinite(qk_gain)) throw Error(ErrorCode::config, "qk_gain must be positive");
}

namespace {

Matrix draw_uniform(Rng& rng, std::size_t rows, std::size_t cols, double bound) {
    std::vector<float> w(rows * cols);
    for (float& x : w) x = static_cast<float>(rng.uniform(-bound, bound));
    return Matrix(rows, cols, std::move(w));
}

// y = x W for a (T x in) activation block stored row-major.
std::vector<float> project(const std::vector<float>& x, std::size_t rows, const Matrix& w) {
    const std::size_t in = w.rows();
    const std::size_t out = w.cols();
    std::vector<double> acc(out);
    std::vector<float> y(rows * out);
    for (std::size_t t = 0; t < rows; ++t) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < in; ++i) {
            const double xi = x[t * in + i];
            const auto wrow = w.row(i);
            for (std::size_t o = 0; o < out; ++o) acc[o] += xi * wrow[o];
        }
        for (std::size_t o = 0; o < out; ++o) y[t * out + o] = static_cast<float>(acc[o]);
    }
    return y;
}

std::vector<float> layer_norm(const std::vector<float>& x, std::size_t rows, std::size_t dim) {
    constexpr double eps = 1e-5;
    std::vector<float> y(x.size());
    for (std::size_t t = 0; t < rows; ++t) {
        const float* row = x.data() + t * dim;
        double mean = 0.0;
        for (std::size_t i = 0; i < dim; ++i) mean += row[i];
        mean /= static_cast<double>(dim);
        double var = 0.0;
        for (std::size_t i = 0; i < dim; ++i) var += (row[i] - mean) * (row[i] - mean);
        var /= static_cast<double>(dim);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t i = 0; i < dim; ++i) y[t * dim + i] = static_cast<float>((row[i] - mean) * inv);
    }
    return y;
}

float gelu(float x) {
    const double v = x;
    return static_cast<float>(0.5 * v * (1.0 + std::tanh(0.7978845608028654 * (v + 0.044715 * v * v * v))));
}

}  // namespace

ToyModel::ToyModel(const ToyModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(cfg_.seed);
    const std::size_t d = cfg_.d_model;
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    const double qk_bound = bound * cfg_.qk_gain;
    embedding_ = draw_uniform(rng, cfg_.vocab_size, d, bound);
    layers_.reserve(cfg_.num_layers);
    for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
        Layer layer;
        layer.wq = draw_uniform(rng, d, d, qk_bound);
        layer.wk = cfg_.tie_qk ? layer.wq : draw_uniform(rng, d, d, qk_bound);
        layer.wv = draw_uniform(rng, d, d, bound);
        layer.wo = draw_uniform(rng, d, d, bound);
        layer.w1 = draw_uniform(rng, d, 4 * d, bound);
        layer.w2 = draw_uniform(rng, 4 * d, d, bound);
        layers_.push_back(std::move(layer));
    }
}

QKTensors ToyModel::forward_qk(const TokenizedDocument& doc) const { return forward_qk(doc.tokens); }

QKTensors ToyModel::forward_qk(const std::vector<TokenId>& tokens) const {
    const std::size_t seq = tokens.size();
    const std::size_t d = cfg_.d_model;
    const std::size_t heads = cfg_.num_heads;
    const std::size_t dk = cfg_.d_k;
    if (seq == 0) throw Error(ErrorCode::invalid_argument, "empty document");
    if (seq > cfg_.max_seq) {
        throw Error(ErrorCode::invalid_argument, "document length " + std::to_string(seq) + " exceeds max_seq " +
                                                     std::to_string(cfg_.max_seq));
    }

    std::vector<float> x(seq * d);
    for (std::size_t t = 0; t < seq; ++t) {
        if (tokens[t] >= cfg_.vocab_size) {
            throw Error(ErrorCode::out_of_range, "token id " + std::to_string(tokens[t]) + " at position " +
                                                     std::to_string(t) + " is >= vocab_size " +
                                                     std::to_string(cfg_.vocab_size));
        }
        const auto e = embedding_.row(tokens[t]);
        std::copy(e.begin(), e.end(), x.begin() + static_cast<std::ptrdiff_t>(t * d));
    }

    std::vector<Matrix> q_out;
    std::vector<Matrix> k_out;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    std::vector<double> weights(seq);
    std::vector<double> acc(dk);

    for (const Layer& layer : layers_) {
        const auto h = layer_norm(x, seq, d);
        const auto q = project(h, seq, layer.wq);
        const auto k = project(h, seq, layer.wk);
        const auto v = project(h, seq, layer.wv);

        std::vector<float> attn(seq * d, 0.0f);
        for (std::size_t head = 0; head < heads; ++head) {
            const std::size_t off = head * dk;
            std::vector<float> qh(seq * dk);
            std::vector<float> kh(seq * dk);
            for (std::size_t t = 0; t < seq; ++t) {
                for (std::size_t c = 0; c < dk; ++c) {
                    qh[t * dk + c] = q[t * d + off + c];
                    kh[t * dk + c] = k[t * d + off + c];
                }
            }
            for (std::size_t t = 0; t < seq; ++t) {
                const float* qt = qh.data() + t * dk;
                double max = -std::numeric_limits<double>::infinity();
                for (std::size_t s = 0; s <= t; ++s) {
                    const float* ks = kh.data() + s * dk;
                    double dot = 0.0;
                    for (std::size_t c = 0; c < dk; ++c) dot += static_cast<double>(qt[c]) * ks[c];
                    weights[s] = dot * scale;
                    max = std::max(max, weights[s]);
                }
                double total = 0.0;
                for (std::size_t s = 0; s <= t; ++s) {
                    weights[s] = std::exp(weights[s] - max);
                    total += weights[s];
                }
                std::fill(acc.begin(), acc.end(), 0.0);
                for (std::size_t s = 0; s <= t; ++s) {
                    const double w = weights[s] / total;
                    const float* vs = v.data() + s * d + off;
                    for (std::size_t c = 0; c < dk; ++c) acc[c] += w * vs[c];
                }
                for (std::size_t c = 0; c < dk; ++c) attn[t * d + off + c] = static_cast<float>(acc[c]);
            }
            q_out.emplace_back(seq, dk, std::move(qh));
            k_out.emplace_back(seq, dk, std::move(kh));
        }

        const auto o = project(attn, seq, layer.wo);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += o[i];

        const auto h2 = layer_norm(x, seq, d);
        auto ff = project(h2, seq, layer.w1);
        for (float& f : ff) f = gelu(f);
        const auto ff_out = project(ff, seq, layer.w2);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += ff_out[i];
    }

    return QKTensors(cfg_.num_layers, heads, seq, dk, std::move(q_out), std::move(k_out));
}

}  // namespace ladm
