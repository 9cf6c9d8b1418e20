// Copyright (C) 2026 The LADM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ladm {

enum class ErrorCode {
    invalid_argument = 1,
    shape_mismatch,
    out_of_range,
    io,
    format,
    missing_dump,
    truncated_payload,
    config,
};

/// Exception type thrown by every ladm operation. The code maps one-to-one
/// onto the ladm_status values of the C API.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ladm
