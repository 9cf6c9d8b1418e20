// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#include "ladm/qk_provider.hpp"

#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <thread>
#include <vector>

#include "ladm/error.hpp"

namespace ladm {

namespace fs = std::filesystem;

namespace {

void put_u32(std::vector<char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > 0xFFFFFFFFu) throw Error(ErrorCode::invalid_argument, std::string(what) + " does not fit in u32");
    return static_cast<std::uint32_t>(v);
}

std::vector<char> read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (!fs::exists(path)) throw Error(ErrorCode::missing_dump, "no tensor dump at " + path.string());
        throw Error(ErrorCode::io, "cannot open " + path.string());
    }
    return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

TensorDumpHeader parse_header(const std::vector<char>& bytes, const fs::path& path) {
    constexpr std::size_t fixed = 8 + 6 * 4;
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kDumpMagic, 8) != 0) {
        throw Error(ErrorCode::format, path.string() + ": bad magic, not a .ladmqk file");
    }
    if (bytes.size() < fixed) throw Error(ErrorCode::truncated_payload, path.string() + ": header truncated");
    TensorDumpHeader h;
    const char* p = bytes.data() + 8;
    h.version = get_u32(p);
    if (h.version != kDumpVersion) {
        throw Error(ErrorCode::format, path.string() + ": unsupported version " + std::to_string(h.version));
    }
    h.layers = get_u32(p + 4);
    h.heads = get_u32(p + 8);
    h.seq_len = get_u32(p + 12);
    h.d_k = get_u32(p + 16);
    const std::uint32_t id_len = get_u32(p + 20);
    if (bytes.size() < fixed + id_len) {
        throw Error(ErrorCode::truncated_payload, path.string() + ": doc_id truncated");
    }
    h.doc_id.assign(bytes.data() + fixed, id_len);
    return h;
}

}  // namespace

fs::path dump_path(const fs::path& dir, const std::string& doc_id) { return dir / (doc_id + kDumpExtension); }

void write_dump(const QKTensors& tensors, const std::string& doc_id, const fs::path& path) {
    std::vector<char> out;
    out.reserve(8 + 24 + doc_id.size() +
                2 * tensors.layers() * tensors.heads() * tensors.seq_len() * tensors.d_k() * 4);
    out.insert(out.end(), kDumpMagic, kDumpMagic + 8);
    put_u32(out, kDumpVersion);
    put_u32(out, checked_u32(tensors.layers(), "layers"));
    put_u32(out, checked_u32(tensors.heads(), "heads"));
    put_u32(out, checked_u32(tensors.seq_len(), "seq_len"));
    put_u32(out, checked_u32(tensors.d_k(), "d_k"));
    put_u32(out, checked_u32(doc_id.size(), "doc_id length"));
    out.insert(out.end(), doc_id.begin(), doc_id.end());
    for (int side = 0; side < 2; ++side) {
        for (std::size_t l = 0; l < tensors.layers(); ++l) {
            for (std::size_t h = 0; h < tensors.heads(); ++h) {
                const Matrix& m = side == 0 ? tensors.q(l, h) : tensors.k(l, h);
                for (float f : m.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
            }
        }
    }

    static std::atomic<unsigned> counter{0};
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "." +
           std::to_string(counter++);
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::io, "cannot create " + tmp.string());
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) throw Error(ErrorCode::io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::io, "cannot rename dump into " + path.string());
    }
}

TensorDumpHeader read_dump_header(const fs::path& path) { return parse_header(read_all(path), path); }

TensorDump read_dump(const fs::path& path) {
    const auto bytes = read_all(path);
    TensorDumpHeader h = parse_header(bytes, path);
    const std::size_t start = h.header_bytes();
    const std::size_t have = bytes.size() - start;
    if (have < h.payload_bytes()) {
        throw Error(ErrorCode::truncated_payload, path.string() + ": payload has " + std::to_string(have) +
                                                      " bytes, header needs " + std::to_string(h.payload_bytes()));
    }
    if (have > h.payload_bytes()) {
        throw Error(ErrorCode::format, path.string() + ": " + std::to_string(have - h.payload_bytes()) +
                                           " trailing bytes after payload");
    }
    const std::size_t count = static_cast<std::size_t>(h.seq_len) * h.d_k;
    const char* p = bytes.data() + start;
    auto read_matrix = [&] {
        std::vector<float> v(count);
        for (float& f : v) {
            f = std::bit_cast<float>(get_u32(p));
            p += 4;
        }
        return Matrix(h.seq_len, h.d_k, std::move(v));
    };
    const std::size_t n = static_cast<std::size_t>(h.layers) * h.heads;
    std::vector<Matrix> q;
    std::vector<Matrix> k;
    q.reserve(n);
    k.reserve(n);
    for (std::size_t i = 0; i < n; ++i) q.push_back(read_matrix());
    for (std::size_t i = 0; i < n; ++i) k.push_back(read_matrix());
    QKTensors t(h.layers, h.heads, h.seq_len, h.d_k, std::move(q), std::move(k));
    return {std::move(h), std::move(t)};
}

void ProviderConfig::validate() const {
    if (mode == Mode::toy && !toy) throw Error(ErrorCode::config, "toy provider mode needs a toy model config");
    if (mode == Mode::file && !dump_dir) throw Error(ErrorCode::config, "file provider mode needs a dump directory");
    if (mode == Mode::toy) toy->validate();
}

QKProvider::QKProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.mode == ProviderConfig::Mode::toy) model_ = std::make_shared<const ToyModel>(*cfg_.toy);
}

QKTensors QKProvider::provide(const TokenizedDocument& doc) const {
    QKTensors tensors;
    if (cfg_.mode == ProviderConfig::Mode::toy) {
        tensors = model_->forward_qk(doc);
    } else {
        const fs::path path = dump_path(*cfg_.dump_dir, doc.doc_id);
        TensorDump dump = read_dump(path);
        if (dump.header.doc_id != doc.doc_id) {
            throw Error(ErrorCode::format, path.string() + ": header doc_id '" + dump.header.doc_id +
                                               "' does not match '" + doc.doc_id + "'");
        }
        if (dump.header.seq_len != doc.tokens.size()) {
            throw Error(ErrorCode::format, path.string() + ": header seq_len " + std::to_string(dump.header.seq_len) +
                                               " does not match scored length " +
                                               std::to_string(doc.tokens.size()));
        }
        tensors = std::move(dump.tensors);
    }
    if (cfg_.layer_selection.kind == LayerSelection::Kind::all) return tensors;
    return tensors.select_layers(cfg_.layer_selection.resolve(tensors.layers()));
}

QKTensors provide(const ProviderConfig& cfg, const TokenizedDocument& doc) { return QKProvider(cfg).provide(doc); }

}  // namespace ladm
