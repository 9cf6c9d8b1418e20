// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#include "ladm/ladm.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include "ladm/corpus.hpp"
#include "ladm/error.hpp"
#include "ladm/model.hpp"
#include "ladm/pipeline.hpp"
#include "ladm/qk_provider.hpp"
#include "ladm/scoring.hpp"
#include "ladm/selection.hpp"

struct ladm_model {
    ladm::ToyModel model;
};

struct ladm_qk {
    ladm::QKTensors tensors;
};

struct ladm_run_config {
    ladm::RunConfig cfg;
};

namespace {

thread_local std::string g_last_error;

ladm_status to_status(ladm::ErrorCode code) {
    switch (code) {
        case ladm::ErrorCode::invalid_argument: return LADM_ERR_INVALID_ARGUMENT;
        case ladm::ErrorCode::shape_mismatch: return LADM_ERR_SHAPE;
        case ladm::ErrorCode::out_of_range: return LADM_ERR_RANGE;
        case ladm::ErrorCode::io: return LADM_ERR_IO;
        case ladm::ErrorCode::format: return LADM_ERR_FORMAT;
        case ladm::ErrorCode::missing_dump: return LADM_ERR_MISSING_DUMP;
        case ladm::ErrorCode::truncated_payload: return LADM_ERR_TRUNCATED;
        case ladm::ErrorCode::config: return LADM_ERR_CONFIG;
    }
    return LADM_ERR_INTERNAL;
}

template <class Fn>
ladm_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return LADM_OK;
    } catch (const ladm::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return LADM_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return LADM_ERR_INTERNAL;
    }
}

void require(const void* p, const char* name) {
    if (!p) throw ladm::Error(ladm::ErrorCode::invalid_argument, std::string(name) + " is NULL");
}

ladm::ScoringConfig to_cpp(const ladm_scoring_config* c) {
    require(c, "scoring config");
    ladm::ScoringConfig s;
    s.span_len = c->span_len;
    s.exclude_initial = c->exclude_initial;
    s.exclude_local = c->exclude_local;
    s.pfs_stride = c->pfs_stride;
    s.cds_start = c->cds_start;
    s.cds_stride = c->cds_stride;
    s.max_len = c->max_len;
    s.layer_selection = c->last_layer_only ? ladm::LayerSelection::last() : ladm::LayerSelection::all();
    s.use_std_weight = c->use_std_weight != 0;
    s.use_length_weight = c->use_length_weight != 0;
    s.within_span_causal_keys = c->within_span_causal_keys != 0;
    return s;
}

ladm::ToyModelConfig to_cpp(const ladm_toy_config* c) {
    require(c, "toy config");
    ladm::ToyModelConfig t;
    t.vocab_size = c->vocab_size;
    t.d_model = c->d_model;
    t.num_layers = c->num_layers;
    t.num_heads = c->num_heads;
    t.d_k = c->d_k;
    t.max_seq = c->max_seq;
    t.seed = c->seed;
    t.tie_qk = c->tie_qk != 0;
    t.qk_gain = c->qk_gain;
    return t;
}

ladm::SpanGrid grid_for(const ladm::QKTensors&, const ladm::ScoringConfig& s) {
    s.validate();
    return s.grid();
}

void write_file(const char* path, const std::string& text) {
    require(path, "output path");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ladm::Error(ladm::ErrorCode::io, std::string("cannot write ") + path);
    out << text;
}

}  // namespace

extern "C" {

const char* ladm_last_error(void) { return g_last_error.c_str(); }

const char* ladm_status_name(ladm_status status) {
    switch (status) {
        case LADM_OK: return "ok";
        case LADM_ERR_INVALID_ARGUMENT: return "invalid argument";
        case LADM_ERR_SHAPE: return "shape mismatch";
        case LADM_ERR_RANGE: return "out of range";
        case LADM_ERR_IO: return "I/O error";
        case LADM_ERR_FORMAT: return "format error";
        case LADM_ERR_MISSING_DUMP: return "missing dump";
        case LADM_ERR_TRUNCATED: return "truncated payload";
        case LADM_ERR_CONFIG: return "configuration error";
        case LADM_ERR_INTERNAL: return "internal error";
    }
    return "unknown";
}

void ladm_scoring_config_default(ladm_scoring_config* cfg) {
    if (!cfg) return;
    const ladm::ScoringConfig s;
    cfg->span_len = static_cast<uint32_t>(s.span_len);
    cfg->exclude_initial = static_cast<uint32_t>(s.exclude_initial);
    cfg->exclude_local = static_cast<uint32_t>(s.exclude_local);
    cfg->pfs_stride = static_cast<uint32_t>(s.pfs_stride);
    cfg->cds_start = static_cast<uint32_t>(s.cds_start);
    cfg->cds_stride = static_cast<uint32_t>(s.cds_stride);
    cfg->max_len = static_cast<uint32_t>(s.max_len);
    cfg->last_layer_only = 0;
    cfg->use_std_weight = 1;
    cfg->use_length_weight = 1;
    cfg->within_span_causal_keys = 0;
}

ladm_status ladm_scoring_config_hash(const ladm_scoring_config* cfg, uint64_t* hash) {
    return guarded([&] {
        require(hash, "hash");
        *hash = to_cpp(cfg).hash();
    });
}

ladm_status ladm_pfs_evaluation_count(const ladm_scoring_config* cfg, size_t* count) {
    return guarded([&] {
        require(count, "count");
        const auto s = to_cpp(cfg);
        s.validate();
        *count = ladm::pfs_evaluation_count(s);
    });
}

void ladm_toy_config_default(ladm_toy_config* cfg) {
    if (!cfg) return;
    const ladm::ToyModelConfig t;
    cfg->vocab_size = static_cast<uint32_t>(t.vocab_size);
    cfg->d_model = static_cast<uint32_t>(t.d_model);
    cfg->num_layers = static_cast<uint32_t>(t.num_layers);
    cfg->num_heads = static_cast<uint32_t>(t.num_heads);
    cfg->d_k = static_cast<uint32_t>(t.d_k);
    cfg->max_seq = static_cast<uint32_t>(t.max_seq);
    cfg->seed = t.seed;
    cfg->tie_qk = t.tie_qk ? 1 : 0;
    cfg->qk_gain = t.qk_gain;
}

ladm_status ladm_model_create(const ladm_toy_config* cfg, ladm_model** out) {
    return guarded([&] {
        require(out, "out");
        *out = new ladm_model{ladm::ToyModel(to_cpp(cfg))};
    });
}

void ladm_model_destroy(ladm_model* model) { delete model; }

ladm_status ladm_model_forward(const ladm_model* model, const uint32_t* tokens, size_t count, ladm_qk** out) {
    return guarded([&] {
        require(model, "model");
        require(tokens, "tokens");
        require(out, "out");
        std::vector<ladm::TokenId> toks(tokens, tokens + count);
        *out = new ladm_qk{model->model.forward_qk(toks)};
    });
}

ladm_status ladm_qk_create(uint32_t layers, uint32_t heads, uint32_t seq_len, uint32_t d_k, const float* q,
                           const float* k, ladm_qk** out) {
    return guarded([&] {
        require(q, "q");
        require(k, "k");
        require(out, "out");
        const std::size_t per = static_cast<std::size_t>(seq_len) * d_k;
        std::vector<ladm::Matrix> qs;
        std::vector<ladm::Matrix> ks;
        for (std::size_t i = 0; i < static_cast<std::size_t>(layers) * heads; ++i) {
            qs.emplace_back(seq_len, d_k, std::vector<float>(q + i * per, q + (i + 1) * per));
            ks.emplace_back(seq_len, d_k, std::vector<float>(k + i * per, k + (i + 1) * per));
        }
        *out = new ladm_qk{ladm::QKTensors(layers, heads, seq_len, d_k, std::move(qs), std::move(ks))};
    });
}

void ladm_qk_destroy(ladm_qk* qk) { delete qk; }

ladm_status ladm_qk_shape(const ladm_qk* qk, uint32_t* layers, uint32_t* heads, uint32_t* seq_len, uint32_t* d_k) {
    return guarded([&] {
        require(qk, "qk");
        if (layers) *layers = static_cast<uint32_t>(qk->tensors.layers());
        if (heads) *heads = static_cast<uint32_t>(qk->tensors.heads());
        if (seq_len) *seq_len = static_cast<uint32_t>(qk->tensors.seq_len());
        if (d_k) *d_k = static_cast<uint32_t>(qk->tensors.d_k());
    });
}

ladm_status ladm_qk_copy(const ladm_qk* qk, int which, uint32_t layer, uint32_t head, float* dst, size_t dst_len) {
    return guarded([&] {
        require(qk, "qk");
        require(dst, "dst");
        const auto& t = qk->tensors;
        if (layer >= t.layers() || head >= t.heads()) {
            throw ladm::Error(ladm::ErrorCode::out_of_range, "layer/head out of range");
        }
        const ladm::Matrix& m = which == 0 ? t.q(layer, head) : t.k(layer, head);
        if (dst_len < m.size()) throw ladm::Error(ladm::ErrorCode::invalid_argument, "destination too small");
        std::memcpy(dst, m.data().data(), m.size() * sizeof(float));
    });
}

ladm_status ladm_dump_write(const ladm_qk* qk, const char* doc_id, const char* path) {
    return guarded([&] {
        require(qk, "qk");
        require(doc_id, "doc_id");
        require(path, "path");
        ladm::write_dump(qk->tensors, doc_id, path);
    });
}

ladm_status ladm_dump_read(const char* path, ladm_qk** out, char* doc_id_buf, size_t buf_len) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        ladm::TensorDump dump = ladm::read_dump(path);
        if (doc_id_buf && buf_len > 0) {
            const std::size_t n = std::min(buf_len - 1, dump.header.doc_id.size());
            std::memcpy(doc_id_buf, dump.header.doc_id.data(), n);
            doc_id_buf[n] = '\0';
        }
        *out = new ladm_qk{std::move(dump.tensors)};
    });
}

ladm_status ladm_pfs(const ladm_qk* qk, const ladm_scoring_config* cfg, uint32_t i, uint32_t j, double* out) {
    return guarded([&] {
        require(qk, "qk");
        require(out, "out");
        const auto s = to_cpp(cfg);
        *out = ladm::pfs(qk->tensors, grid_for(qk->tensors, s), i, j, s);
    });
}

ladm_status ladm_afs(const ladm_qk* qk, const ladm_scoring_config* cfg, uint32_t j, double* out) {
    return guarded([&] {
        require(qk, "qk");
        require(out, "out");
        const auto s = to_cpp(cfg);
        *out = ladm::afs(qk->tensors, grid_for(qk->tensors, s), j, s);
    });
}

ladm_status ladm_cds(const ladm_qk* qk, const ladm_scoring_config* cfg, double* cds, size_t* pfs_count,
                     uint32_t* afs_spans, double* afs_values, size_t afs_cap, size_t* afs_count) {
    return guarded([&] {
        require(qk, "qk");
        require(cds, "cds");
        const auto s = to_cpp(cfg);
        const auto rec = ladm::cds(qk->tensors, grid_for(qk->tensors, s), s);
        *cds = rec.cds;
        if (pfs_count) *pfs_count = rec.pfs_count;
        if (afs_count) *afs_count = rec.afs_by_span.size();
        for (std::size_t i = 0; i < rec.afs_by_span.size() && i < afs_cap; ++i) {
            if (afs_spans) afs_spans[i] = static_cast<uint32_t>(rec.afs_by_span[i].first);
            if (afs_values) afs_values[i] = rec.afs_by_span[i].second;
        }
    });
}

ladm_status ladm_long_range_profile(const ladm_qk* qk, const ladm_scoring_config* cfg, uint32_t min_distance,
                                    double* out) {
    return guarded([&] {
        require(qk, "qk");
        require(out, "out");
        const auto s = to_cpp(cfg);
        *out = ladm::long_range_profile(qk->tensors, grid_for(qk->tensors, s), s, min_distance);
    });
}

ladm_status ladm_oracle_pfs_table(const ladm_qk* qk, const ladm_scoring_config* cfg, double* table,
                                  size_t table_len) {
    return guarded([&] {
        require(qk, "qk");
        require(table, "table");
        const auto s = to_cpp(cfg);
        const auto t = ladm::oracle_full_attention(qk->tensors, grid_for(qk->tensors, s), s);
        if (table_len < t.values.size()) throw ladm::Error(ladm::ErrorCode::invalid_argument, "table too small");
        std::memcpy(table, t.values.data(), t.values.size() * sizeof(double));
    });
}

ladm_status ladm_run_config_create(ladm_run_config** out) {
    return guarded([&] {
        require(out, "out");
        *out = new ladm_run_config{};
    });
}

void ladm_run_config_destroy(ladm_run_config* cfg) { delete cfg; }

ladm_status ladm_run_config_set(ladm_run_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        require(cfg, "cfg");
        require(key, "key");
        require(value, "value");
        cfg->cfg.set(key, value);
    });
}

ladm_status ladm_run_config_load(ladm_run_config* cfg, const char* path) {
    return guarded([&] {
        require(cfg, "cfg");
        require(path, "path");
        cfg->cfg.load_file(path);
    });
}

ladm_status ladm_run_config_validate(const ladm_run_config* cfg) {
    return guarded([&] {
        require(cfg, "cfg");
        cfg->cfg.validate();
    });
}

ladm_status ladm_run_scoring(const ladm_run_config* cfg, ladm_run_summary* summary) {
    return guarded([&] {
        require(cfg, "cfg");
        const auto r = ladm::run_scoring(cfg->cfg);
        if (summary) {
            summary->lines = r.ingest.lines;
            summary->ingested = r.ingest.ingested;
            summary->skipped_short = r.ingest.skipped_short;
            summary->malformed = r.ingest.malformed;
            summary->scored = r.scores.size();
            summary->failed = r.failures.size();
            summary->budget_tokens = r.manifest.budget_tokens;
            summary->selected_tokens = r.manifest.selected_tokens;
            summary->wall_seconds = r.timing.wall_seconds;
            summary->scoring_seconds_per_sample = r.timing.scoring_seconds_per_sample();
            summary->provider_seconds_per_sample = r.timing.provider_seconds_per_sample();
            summary->exit_status = r.exit_status;
        }
    });
}

ladm_status ladm_export_toy_dumps(const ladm_run_config* cfg, const char* dir, size_t* written) {
    return guarded([&] {
        require(cfg, "cfg");
        require(dir, "dir");
        const auto& rc = cfg->cfg;
        if (!rc.provider.toy) throw ladm::Error(ladm::ErrorCode::config, "toy model config missing");
        const ladm::ToyModel model(*rc.provider.toy);
        std::filesystem::create_directories(dir);
        const auto docs = ladm::ingest(rc.input, rc.scoring.max_len);
        for (const auto& d : docs.documents) {
            ladm::write_dump(model.forward_qk(d), d.doc_id, ladm::dump_path(dir, d.doc_id));
        }
        if (written) *written = docs.documents.size();
    });
}

ladm_status ladm_gen_synthetic(const char* kind, uint32_t piece_len, uint32_t total_len, uint32_t count,
                               uint64_t seed, uint32_t vocab_size, const char* domain, const char* path) {
    return guarded([&] {
        require(kind, "kind");
        require(path, "path");
        ladm::SyntheticOptions opts;
        if (vocab_size) opts.vocab_size = vocab_size;
        if (domain) opts.domain = domain;
        ladm::gen_synthetic(ladm::parse_synthetic_kind(kind), piece_len, total_len, count, seed, path, opts);
    });
}

ladm_status ladm_stride_study(const ladm_run_config* cfg, const uint32_t* configs, size_t count,
                              const char* out_path) {
    return guarded([&] {
        require(cfg, "cfg");
        require(configs, "configs");
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t i = 0; i < count; ++i) pairs.emplace_back(configs[2 * i], configs[2 * i + 1]);
        write_file(out_path, ladm::stride_study_tsv(ladm::stride_study(cfg->cfg, pairs)));
    });
}

ladm_status ladm_report_by_category(const char* score_path, const char* out_path) {
    return guarded([&] {
        require(score_path, "score_path");
        write_file(out_path, ladm::category_tsv(ladm::report_by_category(ladm::read_scores(score_path))));
    });
}

ladm_status ladm_select_from_scores(const char* score_path, uint64_t budget_tokens, const char* manifest_path) {
    return guarded([&] {
        require(score_path, "score_path");
        const auto scores = ladm::read_scores(score_path);
        std::vector<ladm::Candidate> candidates;
        for (const auto& s : scores) {
            candidates.push_back({s.record.doc_id, s.record.domain, s.record.cds, s.scored_length});
        }
        const auto stats = ladm::compute_stats(candidates);
        write_file(manifest_path, ladm::select(candidates, stats, budget_tokens).to_jsonl());
    });
}

}  // extern "C"
