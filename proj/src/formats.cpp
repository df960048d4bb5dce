// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
#include "mixquant/formats.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "mixquant/error.hpp"

namespace mixquant {

namespace {

constexpr std::array<float, 8> kE2m1Magnitudes = {0.0f, 0.5f, 1.0f, 1.5f,
                                                  2.0f, 3.0f, 4.0f, 6.0f};

constexpr std::uint8_t kFp4SignBit = 0x8;
constexpr std::uint8_t kFp8SignBit = 0x80;

// Index into kE2m1Magnitudes. Midpoints resolve toward the even-mantissa
// neighbour, which is why the comparison flips between < and <=.
std::uint8_t e2m1_magnitude_code(float mag) {
    if (mag <= 0.25f) return 0;
    if (mag < 0.75f) return 1;
    if (mag <= 1.25f) return 2;
    if (mag < 1.75f) return 3;
    if (mag <= 2.5f) return 4;
    if (mag < 3.5f) return 5;
    if (mag <= 5.0f) return 6;
    return 7;
}

template <typename Real>
Real round_half_even(Real v) {
    const Real lower = std::floor(v);
    const Real diff = v - lower;
    if (diff < Real(0.5)) return lower;
    if (diff > Real(0.5)) return lower + 1;
    return std::fmod(lower, Real(2)) == 0 ? lower : lower + 1;
}

// Encodes a positive value already known to lie exactly on the E4M3 grid.
std::uint8_t e4m3_encode_exact(float v) {
    int exp2 = 0;
    std::frexp(v, &exp2);
    const int unbiased = exp2 - 1;
    if (unbiased < -6) {
        return static_cast<std::uint8_t>(std::ldexp(v, 9));
    }
    const float mant = std::ldexp(v, -unbiased) - 1.0f;
    return static_cast<std::uint8_t>(((unbiased + 7) << 3) |
                                     static_cast<int>(mant * 8.0f));
}

}  // namespace

float e2m1_decode(Fp4Code code) {
    const float mag = kE2m1Magnitudes[code.bits & 0x7];
    return (code.bits & kFp4SignBit) ? -mag : mag;
}

Fp4Code pi_fp4(float x) {
    if (std::isnan(x)) {
        fail(ErrorKind::InvalidValue, "pi_fp4: NaN scaled value");
    }
    const std::uint8_t sign = std::signbit(x) ? kFp4SignBit : 0;
    return Fp4Code{static_cast<std::uint8_t>(sign | e2m1_magnitude_code(std::fabs(x)))};
}

template <typename Real>
Fp8E4M3Code project_e4m3(Real x) {
    if (std::isnan(x)) {
        fail(ErrorKind::InvalidValue, "pi_e4m3: NaN input");
    }
    const std::uint8_t sign = std::signbit(x) ? kFp8SignBit : 0;
    const Real mag = std::fabs(x);
    if (mag >= Real(kE4m3Max)) {
        return Fp8E4M3Code{static_cast<std::uint8_t>(sign | kE4m3MaxCode.bits)};
    }
    if (mag == 0) {
        return Fp8E4M3Code{sign};
    }
    int exp2 = 0;
    std::frexp(mag, &exp2);
    // Quantum of the binade holding mag; subnormals share 2^-9.
    const int quantum_exp = std::max(exp2 - 1, -6) - 3;
    const Real steps = round_half_even(std::ldexp(mag, -quantum_exp));
    if (steps == 0) {
        return Fp8E4M3Code{sign};
    }
    const auto rounded = static_cast<float>(std::ldexp(steps, quantum_exp));
    return Fp8E4M3Code{static_cast<std::uint8_t>(sign | e4m3_encode_exact(rounded))};
}

Fp8E4M3Code pi_e4m3(float x) { return project_e4m3(x); }

Fp8E4M3Code pi_e4m3_wide(double x) { return project_e4m3(x); }

bool is_nan(Fp8E4M3Code code) {
    return (code.bits & 0x7F) == 0x7F;
}

float e4m3_decode(Fp8E4M3Code code) {
    if (is_nan(code)) {
        fail(ErrorKind::InvalidValue, "e4m3_decode: NaN code");
    }
    const int exp_field = (code.bits >> 3) & 0xF;
    const int mant = code.bits & 0x7;
    const float mag = exp_field == 0
                          ? std::ldexp(static_cast<float>(mant), -9)
                          : std::ldexp(1.0f + static_cast<float>(mant) / 8.0f, exp_field - 7);
    return (code.bits & kFp8SignBit) ? -mag : mag;
}

std::string shortest_repr(float value) {
    std::array<char, 48> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

std::string fp4_table() {
    std::string out;
    for (unsigned c = 0; c < 16; ++c) {
        out += fmt::format("0x{:x},{}\n", c,
                           shortest_repr(e2m1_decode(Fp4Code{static_cast<std::uint8_t>(c)})));
    }
    return out;
}

std::string fp8_table() {
    std::string out;
    for (unsigned c = 0; c < 256; ++c) {
        const Fp8E4M3Code code{static_cast<std::uint8_t>(c)};
        out += fmt::format("0x{:02x},{}\n", c,
                           is_nan(code) ? std::string("nan") : shortest_repr(e4m3_decode(code)));
    }
    return out;
}

}  // namespace mixquant
