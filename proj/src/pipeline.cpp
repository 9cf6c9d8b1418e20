// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#include "ladm/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ladm/error.hpp"

namespace ladm {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
        throw Error(ErrorCode::config, key + ": expected a non-negative integer, got '" + value + "'");
    }
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw Error(ErrorCode::config, key + ": integer out of range '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double d = std::stod(trim(value), &used);
        if (used != trim(value).size()) throw std::invalid_argument(value);
        return d;
    } catch (const std::exception&) {
        throw Error(ErrorCode::config, key + ": expected a number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw Error(ErrorCode::config, key + ": expected a boolean, got '" + value + "'");
}

ToyModelConfig& toy_of(RunConfig& cfg) {
    if (!cfg.provider.toy) cfg.provider.toy = ToyModelConfig{};
    return *cfg.provider.toy;
}

/// Runs fn(index) for every index in [0, count) on up to `workers` threads.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

}  // namespace

void RunConfig::set(const std::string& raw_key, const std::string& value) {
    std::string key = trim(raw_key);
    std::replace(key.begin(), key.end(), '-', '_');
    const std::string v = trim(value);
    if (key == "input") input = v;
    else if (key == "out") out_dir = v;
    else if (key == "mode") {
        if (v == "toy") provider.mode = ProviderConfig::Mode::toy;
        else if (v == "file") provider.mode = ProviderConfig::Mode::file;
        else throw Error(ErrorCode::config, "mode: expected toy|file, got '" + v + "'");
    }
    else if (key == "dump_dir") provider.dump_dir = v;
    else if (key == "layers") provider.layer_selection = LayerSelection::parse(v);
    else if (key == "budget_tokens") budget_tokens = parse_uint(key, v);
    else if (key == "span_len") scoring.span_len = parse_uint(key, v);
    else if (key == "m") scoring.exclude_initial = parse_uint(key, v);
    else if (key == "n") scoring.exclude_local = parse_uint(key, v);
    else if (key == "d_afs") scoring.pfs_stride = parse_uint(key, v);
    else if (key == "d_cds") scoring.cds_stride = parse_uint(key, v);
    else if (key == "n0") scoring.cds_start = parse_uint(key, v);
    else if (key == "max_len") scoring.max_len = parse_uint(key, v);
    else if (key == "ablate_std") scoring.use_std_weight = !parse_bool(key, v);
    else if (key == "ablate_length") scoring.use_length_weight = !parse_bool(key, v);
    else if (key == "causal_keys") scoring.within_span_causal_keys = parse_bool(key, v);
    else if (key == "workers") workers = parse_uint(key, v);
    else if (key == "seed") toy_of(*this).seed = parse_uint(key, v);
    else if (key == "vocab_size") toy_of(*this).vocab_size = parse_uint(key, v);
    else if (key == "d_model") {
        auto& t = toy_of(*this);
        t.d_model = parse_uint(key, v);
        if (t.num_heads) t.d_k = t.d_model / t.num_heads;
    }
    else if (key == "num_heads") {
        auto& t = toy_of(*this);
        t.num_heads = parse_uint(key, v);
        if (t.num_heads) t.d_k = t.d_model / t.num_heads;
    }
    else if (key == "num_layers") toy_of(*this).num_layers = parse_uint(key, v);
    else if (key == "max_seq") toy_of(*this).max_seq = parse_uint(key, v);
    else if (key == "tie_qk") toy_of(*this).tie_qk = parse_bool(key, v);
    else if (key == "qk_gain") toy_of(*this).qk_gain = parse_double(key, v);
    else if (key == "category_report") category_report = parse_bool(key, v);
    else if (key == "profile_min_distance") profile_min_distance = parse_uint(key, v);
    else if (key == "timing_repeats") timing_repeats = parse_uint(key, v);
    else throw Error(ErrorCode::config, "unknown setting '" + raw_key + "'");
}

void RunConfig::load_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config, "cannot open config file " + path.string());
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::config, path.string() + ":" + std::to_string(line_no) + ": expected key = value");
        }
        set(line.substr(0, eq), line.substr(eq + 1));
    }
}

void RunConfig::validate() const {
    scoring.validate();
    provider.validate();
    if (workers == 0) throw Error(ErrorCode::config, "workers must be >= 1");
    if (timing_repeats == 0) throw Error(ErrorCode::config, "timing_repeats must be >= 1");
    if (provider.mode == ProviderConfig::Mode::toy && provider.toy->max_seq < scoring.max_len) {
        throw Error(ErrorCode::config, "toy max_seq " + std::to_string(provider.toy->max_seq) +
                                           " is below max_len " + std::to_string(scoring.max_len));
    }
    if (provider.mode == ProviderConfig::Mode::file && !fs::is_directory(*provider.dump_dir)) {
        throw Error(ErrorCode::config, "dump directory " + provider.dump_dir->string() + " does not exist");
    }
    if (profile_min_distance >= scoring.num_spans()) {
        throw Error(ErrorCode::config, "profile_min_distance must be below the span count");
    }
}

RunResult score_documents(const RunConfig& cfg, const std::vector<TokenizedDocument>& docs) {
    cfg.validate();
    const auto start = Clock::now();
    const QKProvider provider(cfg.provider);
    const SpanGrid grid = cfg.scoring.grid();

    struct Slot {
        std::optional<ScoredDocument> scored;
        std::optional<DocumentFailure> failure;
        double provider_seconds = 0.0;
        double scoring_seconds = 0.0;
    };
    std::vector<Slot> slots(docs.size());

    parallel_for(docs.size(), cfg.workers, [&](std::size_t idx) {
        const TokenizedDocument& doc = docs[idx];
        Slot& slot = slots[idx];
        try {
            const auto t0 = Clock::now();
            const QKTensors tensors = provider.provide(doc);
            slot.provider_seconds = seconds_since(t0);

            ScoredDocument out;
            for (std::size_t rep = 0; rep < cfg.timing_repeats; ++rep) {
                const auto t1 = Clock::now();
                const auto rows = scored_rows(tensors, grid, cfg.scoring);
                out.record = cds_from_rows(rows, cfg.scoring);
                const double t = seconds_since(t1);
                slot.scoring_seconds = rep == 0 ? t : std::min(slot.scoring_seconds, t);
                if (rep == 0 && cfg.profile_min_distance > 0) {
                    out.long_range_profile = long_range_profile_from_rows(rows, cfg.scoring, cfg.profile_min_distance);
                }
            }
            out.record.doc_id = doc.doc_id;
            out.record.domain = doc.domain;
            out.original_length = doc.original_length;
            out.scored_length = doc.tokens.size();
            slot.scored = std::move(out);
        } catch (const std::exception& e) {
            slot.failure = DocumentFailure{doc.doc_id, e.what()};
        }
    });

    RunResult result;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        Slot& slot = slots[i];
        result.stats.add(docs[i].domain, docs[i].tokens.size());
        result.timing.provider_seconds += slot.provider_seconds;
        result.timing.scoring_seconds += slot.scoring_seconds;
        if (slot.scored) result.scores.push_back(std::move(*slot.scored));
        if (slot.failure) result.failures.push_back(std::move(*slot.failure));
    }
    std::sort(result.scores.begin(), result.scores.end(),
              [](const ScoredDocument& a, const ScoredDocument& b) { return a.record.doc_id < b.record.doc_id; });
    std::sort(result.failures.begin(), result.failures.end(),
              [](const DocumentFailure& a, const DocumentFailure& b) { return a.doc_id < b.doc_id; });
    result.timing.documents = result.scores.size();

    if (!docs.empty()) {
        std::vector<Candidate> candidates;
        candidates.reserve(result.scores.size());
        for (const auto& s : result.scores) {
            candidates.push_back({s.record.doc_id, s.record.domain, s.record.cds, s.scored_length});
        }
        const std::uint64_t budget = cfg.budget_tokens.value_or(result.stats.tokens);
        result.manifest = select(candidates, result.stats, budget);
    }
    if (result.failures.size() * 100 > docs.size()) result.exit_status = 2;
    result.timing.wall_seconds = seconds_since(start);
    return result;
}

RunResult run_scoring(const RunConfig& cfg) {
    cfg.validate();
    if (!fs::exists(cfg.input)) throw Error(ErrorCode::config, "input corpus " + cfg.input.string() + " does not exist");
    const auto start = Clock::now();
    IngestResult ingested = ingest(cfg.input, cfg.scoring.max_len);
    RunResult result = score_documents(cfg, ingested.documents);
    result.ingest = ingested.counters;
    result.timing.wall_seconds = seconds_since(start);

    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        write_text(cfg.out_dir / "scores.jsonl", scores_jsonl(result.scores));
        std::string failures;
        for (const auto& f : result.failures) {
            failures += nlohmann::ordered_json{{"doc_id", f.doc_id}, {"error", f.error}}.dump() + "\n";
        }
        for (const auto& msg : ingested.log) {
            failures += nlohmann::ordered_json{{"ingest", msg}}.dump() + "\n";
        }
        write_text(cfg.out_dir / "failures.jsonl", failures);
        write_text(cfg.out_dir / "manifest.jsonl", result.manifest.to_jsonl());
        write_text(cfg.out_dir / "stats.tsv", stats_tsv(result.stats));
        if (cfg.category_report && !result.scores.empty()) {
            write_text(cfg.out_dir / "categories.tsv", category_tsv(report_by_category(result.scores)));
        }
        write_text(cfg.out_dir / "summary.json", summary_json(result, cfg));
    }
    return result;
}

std::string score_line(const ScoredDocument& doc) {
    nlohmann::ordered_json afs = nlohmann::ordered_json::array();
    for (const auto& [j, v] : doc.record.afs_by_span) afs.push_back({j, v});
    nlohmann::ordered_json rec = {{"doc_id", doc.record.doc_id},
                                  {"domain", doc.record.domain},
                                  {"cds", doc.record.cds},
                                  {"pfs_count", doc.record.pfs_count},
                                  {"config_hash", hex64(doc.record.config_hash)},
                                  {"original_length", doc.original_length},
                                  {"scored_length", doc.scored_length},
                                  {"afs", std::move(afs)}};
    if (doc.long_range_profile) rec["long_range_profile"] = *doc.long_range_profile;
    return rec.dump();
}

std::string scores_jsonl(const std::vector<ScoredDocument>& scores) {
    std::string out;
    for (const auto& s : scores) out += score_line(s) + "\n";
    return out;
}

std::vector<ScoredDocument> read_scores(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open score file " + path.string());
    std::vector<ScoredDocument> out;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (trim(line).empty()) continue;
        try {
            const auto rec = nlohmann::json::parse(line);
            ScoredDocument d;
            d.record.doc_id = rec.at("doc_id").get<std::string>();
            d.record.domain = rec.at("domain").get<std::string>();
            d.record.cds = rec.at("cds").get<double>();
            d.record.pfs_count = rec.at("pfs_count").get<std::size_t>();
            d.record.config_hash = std::stoull(rec.at("config_hash").get<std::string>(), nullptr, 16);
            d.original_length = rec.at("original_length").get<std::size_t>();
            d.scored_length = rec.at("scored_length").get<std::size_t>();
            for (const auto& pair : rec.at("afs")) {
                d.record.afs_by_span.emplace_back(pair.at(0).get<std::size_t>(), pair.at(1).get<double>());
            }
            if (rec.contains("long_range_profile")) d.long_range_profile = rec["long_range_profile"].get<double>();
            out.push_back(std::move(d));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::format, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string stats_tsv(const CorpusStats& stats) {
    std::string out = "domain\tdocuments\ttokens\n";
    for (const auto& d : stats.domains) {
        out += d.domain + "\t" + std::to_string(d.documents) + "\t" + std::to_string(d.tokens) + "\n";
    }
    out += "TOTAL\t" + std::to_string(stats.documents) + "\t" + std::to_string(stats.tokens) + "\n";
    return out;
}

std::string summary_json(const RunResult& result, const RunConfig& cfg) {
    nlohmann::ordered_json s;
    s["ingest"] = {{"lines", result.ingest.lines},
                   {"ingested", result.ingest.ingested},
                   {"skipped_short", result.ingest.skipped_short},
                   {"malformed", result.ingest.malformed}};
    s["scored"] = result.scores.size();
    s["failed"] = result.failures.size();
    s["exit_status"] = result.exit_status;
    s["config"] = cfg.scoring.canonical();
    s["config_hash"] = hex64(cfg.scoring.hash());
    s["budget_tokens"] = result.manifest.budget_tokens;
    s["selected_tokens"] = result.manifest.selected_tokens;
    s["timing"] = {{"wall_seconds", result.timing.wall_seconds},
                   {"seconds_per_sample", result.timing.wall_seconds_per_sample()},
                   {"provider_seconds_per_sample", result.timing.provider_seconds_per_sample()},
                   {"scoring_seconds_per_sample", result.timing.scoring_seconds_per_sample()},
                   {"workers", cfg.workers}};
    return s.dump(2) + "\n";
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw Error(ErrorCode::invalid_argument, "quantile of an empty set");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<CategoryRow> report_by_category(const std::vector<ScoredDocument>& scores) {
    std::map<std::string, std::vector<double>> by_domain;
    for (const auto& s : scores) by_domain[s.record.domain].push_back(s.record.cds);
    std::vector<CategoryRow> rows;
    for (auto& [domain, values] : by_domain) {
        std::sort(values.begin(), values.end());
        rows.push_back({domain, values.size(), median(values), quantile_sorted(values, 0.25),
                        quantile_sorted(values, 0.75)});
    }
    return rows;
}

std::string category_tsv(const std::vector<CategoryRow>& rows) {
    std::string out = "domain\tcount\tmedian\tq1\tq3\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "\t%zu\t%.9g\t%.9g\t%.9g\n", r.count, r.median, r.q1, r.q3);
        out += r.domain + buf;
    }
    return out;
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw Error(ErrorCode::invalid_argument, "pearson needs two equal-length vectors of >= 2 values");
    }
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<StrideStudyRow> stride_study(const RunConfig& cfg, const std::vector<TokenizedDocument>& docs,
                                         const std::vector<std::pair<std::size_t, std::size_t>>& configs) {
    cfg.validate();
    if (configs.size() < 2) throw Error(ErrorCode::config, "stride study needs at least 2 configurations");
    if (docs.size() < 3) {
        throw Error(ErrorCode::invalid_argument, "stride study needs at least 3 documents for a correlation, got " +
                                                     std::to_string(docs.size()));
    }
    std::vector<ScoringConfig> scorings;
    for (const auto& [d_afs, d_cds] : configs) {
        ScoringConfig s = cfg.scoring;
        s.pfs_stride = d_afs;
        s.cds_stride = d_cds;
        s.validate();
        scorings.push_back(s);
    }
    const QKProvider provider(cfg.provider);
    const SpanGrid grid = cfg.scoring.grid();
    const std::size_t nc = configs.size();
    std::vector<std::vector<double>> cds_values(nc, std::vector<double>(docs.size()));
    std::vector<std::vector<double>> seconds(nc, std::vector<double>(docs.size()));

    parallel_for(docs.size(), cfg.workers, [&](std::size_t idx) {
        const QKTensors tensors = provider.provide(docs[idx]);
        for (std::size_t c = 0; c < nc; ++c) {
            for (std::size_t rep = 0; rep < cfg.timing_repeats; ++rep) {
                const auto t0 = Clock::now();
                const double v = cds(tensors, grid, scorings[c]).cds;
                const double t = seconds_since(t0);
                cds_values[c][idx] = v;
                seconds[c][idx] = rep == 0 ? t : std::min(seconds[c][idx], t);
            }
        }
    });

    std::vector<StrideStudyRow> rows;
    for (std::size_t c = 0; c < nc; ++c) {
        StrideStudyRow row;
        row.d_afs = configs[c].first;
        row.d_cds = configs[c].second;
        double total = 0.0;
        for (double s : seconds[c]) total += s;
        row.seconds_per_sample = total / static_cast<double>(docs.size());
        row.pfs_evaluations = pfs_evaluation_count(scorings[c]);
        row.correlation = pearson(cds_values[0], cds_values[c]);
        row.cds = cds_values[c];
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<StrideStudyRow> stride_study(const RunConfig& cfg,
                                         const std::vector<std::pair<std::size_t, std::size_t>>& configs) {
    if (!fs::exists(cfg.input)) throw Error(ErrorCode::config, "input corpus " + cfg.input.string() + " does not exist");
    return stride_study(cfg, ingest(cfg.input, cfg.scoring.max_len).documents, configs);
}

std::string stride_study_tsv(const std::vector<StrideStudyRow>& rows) {
    std::string out = "d_afs\td_cds\tsec_per_sample\tpfs_evaluations\tcorrelation\n";
    char buf[160];
    for (const auto& r : rows) {
        std::string corr = "undefined";
        if (r.correlation) {
            char c[32];
            std::snprintf(c, sizeof c, "%.3f", *r.correlation);
            corr = c;
        }
        std::snprintf(buf, sizeof buf, "%zu\t%zu\t%.6f\t%zu\t", r.d_afs, r.d_cds, r.seconds_per_sample,
                      r.pfs_evaluations);
        out += buf + corr + "\n";
    }
    return out;
}

}  // namespace ladm
