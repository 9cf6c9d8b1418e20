// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "ladm/document.hpp"
#include "ladm/model.hpp"

namespace ladm {

// .ladmqk layout, all integers and floats little-endian:
//
//   magic       8 bytes  "LADMQK01"
//   version     u32      1
//   layers      u32
//   heads       u32
//   seq_len     u32
//   d_k         u32
//   doc_id_len  u32
//   doc_id      doc_id_len bytes, UTF-8
//   payload     f32[2 * layers * heads * seq_len * d_k]
//
// The payload holds every Q matrix followed by every K matrix, ordered layer
// major then head, each seq_len x d_k row-major.
inline constexpr char kDumpMagic[8] = {'L', 'A', 'D', 'M', 'Q', 'K', '0', '1'};
inline constexpr std::uint32_t kDumpVersion = 1;
inline constexpr const char* kDumpExtension = ".ladmqk";

struct TensorDumpHeader {
    std::uint32_t version = kDumpVersion;
    std::uint32_t layers = 0;
    std::uint32_t heads = 0;
    std::uint32_t seq_len = 0;
    std::uint32_t d_k = 0;
    std::string doc_id;

    std::size_t header_bytes() const noexcept { return 8 + 6 * 4 + doc_id.size(); }
    std::size_t payload_bytes() const noexcept {
        return std::size_t{2} * layers * heads * seq_len * d_k * sizeof(float);
    }
};

struct TensorDump {
    TensorDumpHeader header;
    QKTensors tensors;
};

/// Writes atomically: the file appears under its final name only once complete.
void write_dump(const QKTensors& tensors, const std::string& doc_id, const std::filesystem::path& path);

/// Throws ErrorCode::missing_dump, ::format (bad magic, version, trailing
/// bytes) or ::truncated_payload.
TensorDump read_dump(const std::filesystem::path& path);
TensorDumpHeader read_dump_header(const std::filesystem::path& path);

std::filesystem::path dump_path(const std::filesystem::path& dir, const std::string& doc_id);

struct ProviderConfig {
    enum class Mode { toy, file };
    Mode mode = Mode::toy;
    std::optional<ToyModelConfig> toy = ToyModelConfig{};
    std::optional<std::filesystem::path> dump_dir;
    LayerSelection layer_selection;

    void validate() const;
};

/// Source of QK tensors per document. In toy mode the model is built once and
/// shared; provide() is safe to call concurrently.
class QKProvider {
public:
    explicit QKProvider(ProviderConfig cfg);

    const ProviderConfig& config() const noexcept { return cfg_; }
    QKTensors provide(const TokenizedDocument& doc) const;

private:
    ProviderConfig cfg_;
    std::shared_ptr<const ToyModel> model_;
};

QKTensors provide(const ProviderConfig& cfg, const TokenizedDocument& doc);

}  // namespace ladm
