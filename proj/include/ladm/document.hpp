// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ladm {

using TokenId = std::uint32_t;

struct TokenizedDocument {
    std::string doc_id;
    std::string domain;
    std::vector<TokenId> tokens;
    /// Length before truncation; always >= tokens.size().
    std::size_t original_length = 0;
};

}  // namespace ladm
