// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
#include "mixquant/error.hpp"

namespace mixquant {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidValue: return "invalid-value";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Config: return "config";
        case ErrorKind::ContextOverflow: return "context-overflow";
        case ErrorKind::Format: return "format";
        case ErrorKind::Integrity: return "integrity";
        case ErrorKind::Protocol: return "protocol";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace mixquant
