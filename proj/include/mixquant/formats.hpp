// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
//
// Software emulation of the E2M1 (FP4) element grid and the E4M3 (FP8)
// block-scale grid used by NVFP4 microscaling.
#pragma once

#include <cstdint>
#include <string>

namespace mixquant {

/// 4-bit E2M1 code: bit 3 sign, bits 2..1 exponent, bit 0 mantissa.
struct Fp4Code {
    std::uint8_t bits = 0;
    constexpr bool operator==(const Fp4Code&) const = default;
};

/// 8-bit E4M3 code (OCP convention): bit 7 sign, bits 6..3 exponent
/// (bias 7), bits 2..0 mantissa. S.1111.111 is NaN; there is no infinity.
struct Fp8E4M3Code {
    std::uint8_t bits = 0;
    constexpr bool operator==(const Fp8E4M3Code&) const = default;
};

inline constexpr float kFp4Max = 6.0f;
inline constexpr float kE4m3Max = 448.0f;
inline constexpr Fp8E4M3Code kE4m3PosZero{0x00};
inline constexpr Fp8E4M3Code kE4m3MaxCode{0x7E};

float e2m1_decode(Fp4Code code);

/// Nearest E2M1 value with clipping to +-6. Ties go to the code whose
/// mantissa bit is zero. The sign of x is kept on the zero code.
/// Throws Error(InvalidValue) on NaN.
Fp4Code pi_fp4(float x);

/// Round-to-nearest-even onto the E4M3 grid, saturating at +-448.
/// Never returns a NaN code. Throws Error(InvalidValue) on NaN.
Fp8E4M3Code pi_e4m3(float x);

/// Same projection applied to a binary64 input (single rounding).
Fp8E4M3Code pi_e4m3_wide(double x);

bool is_nan(Fp8E4M3Code code);

/// Exact grid value. Throws Error(InvalidValue) on the NaN codes.
float e4m3_decode(Fp8E4M3Code code);

/// Shortest decimal string that round-trips to the same binary32 value.
std::string shortest_repr(float value);

/// `code,value` lines for all 16 E2M1 codes in ascending bit order.
std::string fp4_table();

/// `code,value` lines for all 256 E4M3 codes in ascending bit order
/// (NaN codes print as `nan`).
std::string fp8_table();

}  // namespace mixquant
