/* Copyright (C) 2026 The LADM Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface of libladm: span-level attention dependency scoring and
 * domain-balanced selection of long-context training documents.
 *
 * Every function returns a ladm_status. On failure the message of the most
 * recent error on the calling thread is available from ladm_last_error().
 * Objects are opaque handles released with their *_destroy function.
 */
#ifndef LADM_LADM_H
#define LADM_LADM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define LADM_API __declspec(dllexport)
#else
#  define LADM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ladm_status {
  LADM_OK = 0,
  LADM_ERR_INVALID_ARGUMENT = 1,
  LADM_ERR_SHAPE = 2,
  LADM_ERR_RANGE = 3,
  LADM_ERR_IO = 4,
  LADM_ERR_FORMAT = 5,
  LADM_ERR_MISSING_DUMP = 6,
  LADM_ERR_TRUNCATED = 7,
  LADM_ERR_CONFIG = 8,
  LADM_ERR_INTERNAL = 9
} ladm_status;

LADM_API const char* ladm_last_error(void);
LADM_API const char* ladm_status_name(ladm_status status);

/* ---- scoring hyperparameters ------------------------------------------ */

typedef struct ladm_scoring_config {
  uint32_t span_len;        /* l */
  uint32_t exclude_initial; /* m */
  uint32_t exclude_local;   /* n */
  uint32_t pfs_stride;      /* d_AFS */
  uint32_t cds_start;       /* n0 */
  uint32_t cds_stride;      /* d_CDS */
  uint32_t max_len;         /* L */
  int32_t last_layer_only;  /* 0: average all layers, 1: last layer only */
  int32_t use_std_weight;
  int32_t use_length_weight;
  int32_t within_span_causal_keys;
} ladm_scoring_config;

/* Fills the 32K production defaults (l=128, m=1, n=4, d=4, n0=16, L=32768). */
LADM_API void ladm_scoring_config_default(ladm_scoring_config* cfg);
LADM_API ladm_status ladm_scoring_config_hash(const ladm_scoring_config* cfg, uint64_t* hash);
LADM_API ladm_status ladm_pfs_evaluation_count(const ladm_scoring_config* cfg, size_t* count);

/* ---- toy model and QK tensors ---------------------------------------- */

typedef struct ladm_toy_config {
  uint32_t vocab_size;
  uint32_t d_model;
  uint32_t num_layers;
  uint32_t num_heads;
  uint32_t d_k;
  uint32_t max_seq;
  uint64_t seed;
  int32_t tie_qk;
  double qk_gain;
} ladm_toy_config;

typedef struct ladm_model ladm_model;
typedef struct ladm_qk ladm_qk;

LADM_API void ladm_toy_config_default(ladm_toy_config* cfg);
LADM_API ladm_status ladm_model_create(const ladm_toy_config* cfg, ladm_model** out);
LADM_API void ladm_model_destroy(ladm_model* model);
LADM_API ladm_status ladm_model_forward(const ladm_model* model, const uint32_t* tokens, size_t count,
                                        ladm_qk** out);

/* q and k each point at layers*heads*seq_len*d_k floats, ordered layer
 * major, then head, then row-major seq_len x d_k. */
LADM_API ladm_status ladm_qk_create(uint32_t layers, uint32_t heads, uint32_t seq_len, uint32_t d_k,
                                    const float* q, const float* k, ladm_qk** out);
LADM_API void ladm_qk_destroy(ladm_qk* qk);
LADM_API ladm_status ladm_qk_shape(const ladm_qk* qk, uint32_t* layers, uint32_t* heads, uint32_t* seq_len,
                                   uint32_t* d_k);
/* Copies one seq_len x d_k matrix; which = 0 for Q, 1 for K. */
LADM_API ladm_status ladm_qk_copy(const ladm_qk* qk, int which, uint32_t layer, uint32_t head, float* dst,
                                  size_t dst_len);

/* .ladmqk tensor dumps. doc_id_buf receives a NUL-terminated id (truncated
 * to buf_len - 1 bytes); pass NULL to skip. */
LADM_API ladm_status ladm_dump_write(const ladm_qk* qk, const char* doc_id, const char* path);
LADM_API ladm_status ladm_dump_read(const char* path, ladm_qk** out, char* doc_id_buf, size_t buf_len);

/* ---- scoring ----------------------------------------------------------- */

LADM_API ladm_status ladm_pfs(const ladm_qk* qk, const ladm_scoring_config* cfg, uint32_t i, uint32_t j,
                              double* out);
LADM_API ladm_status ladm_afs(const ladm_qk* qk, const ladm_scoring_config* cfg, uint32_t j, double* out);
/* afs_spans/afs_values may be NULL; otherwise they receive up to afs_cap
 * entries of the per-span breakdown. afs_count receives the full count. */
LADM_API ladm_status ladm_cds(const ladm_qk* qk, const ladm_scoring_config* cfg, double* cds, size_t* pfs_count,
                              uint32_t* afs_spans, double* afs_values, size_t afs_cap, size_t* afs_count);
LADM_API ladm_status ladm_long_range_profile(const ladm_qk* qk, const ladm_scoring_config* cfg,
                                             uint32_t min_distance, double* out);
/* table receives N*N doubles, row j column i = PFS(i, j). */
LADM_API ladm_status ladm_oracle_pfs_table(const ladm_qk* qk, const ladm_scoring_config* cfg, double* table,
                                           size_t table_len);

/* ---- corpus, pipeline, reports ---------------------------------------- */

typedef struct ladm_run_config ladm_run_config;

typedef struct ladm_run_summary {
  size_t lines;
  size_t ingested;
  size_t skipped_short;
  size_t malformed;
  size_t scored;
  size_t failed;
  uint64_t budget_tokens;
  uint64_t selected_tokens;
  double wall_seconds;
  double scoring_seconds_per_sample;
  double provider_seconds_per_sample;
  int32_t exit_status; /* 0 ok, 2 when more than 1% of documents failed */
} ladm_run_summary;

LADM_API ladm_status ladm_run_config_create(ladm_run_config** out);
LADM_API void ladm_run_config_destroy(ladm_run_config* cfg);
/* Keys: input, out, mode, dump_dir, layers, budget_tokens, span_len, m, n,
 * d_afs, d_cds, n0, max_len, workers, seed, ablate_std, ablate_length,
 * causal_keys, vocab_size, d_model, num_heads, num_layers, max_seq, tie_qk,
 * qk_gain, category_report, profile_min_distance, timing_repeats. */
LADM_API ladm_status ladm_run_config_set(ladm_run_config* cfg, const char* key, const char* value);
LADM_API ladm_status ladm_run_config_load(ladm_run_config* cfg, const char* path);
LADM_API ladm_status ladm_run_config_validate(const ladm_run_config* cfg);

LADM_API ladm_status ladm_run_scoring(const ladm_run_config* cfg, ladm_run_summary* summary);

/* Writes one tensor dump per ingested document of cfg's input into dir. */
LADM_API ladm_status ladm_export_toy_dumps(const ladm_run_config* cfg, const char* dir, size_t* written);

/* kind: "coherent" or "concat". */
LADM_API ladm_status ladm_gen_synthetic(const char* kind, uint32_t piece_len, uint32_t total_len, uint32_t count,
                                        uint64_t seed, uint32_t vocab_size, const char* domain, const char* path);

/* configs holds count (d_afs, d_cds) pairs; the TSV table goes to out_path. */
LADM_API ladm_status ladm_stride_study(const ladm_run_config* cfg, const uint32_t* configs, size_t count,
                                       const char* out_path);

LADM_API ladm_status ladm_report_by_category(const char* score_path, const char* out_path);

/* Re-selects from an existing score file under a new budget. */
LADM_API ladm_status ladm_select_from_scores(const char* score_path, uint64_t budget_tokens,
                                             const char* manifest_path);

#ifdef __cplusplus
}
#endif

#endif /* LADM_LADM_H */
