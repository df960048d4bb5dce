// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mixquant {

enum class ErrorKind {
    InvalidValue,     // NaN / non-finite input to a numeric routine
    Shape,            // incompatible dimensions
    Config,           // invalid model or quantizer configuration
    ContextOverflow,  // sequence exceeds max_seq_len
    Format,           // malformed file or wire payload
    Integrity,        // CRC or digest mismatch
    Protocol,         // unexpected frame or message order
    Io,               // filesystem / socket failure
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace mixquant
