// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
//
// NVFP4 two-level block quantization. A tensor carries one binary32 tensor
// scale plus one E4M3 scale per 16-element block along the column
// (GEMM reduction) axis; elements are E2M1 codes:
//
//   q_i   = pi_fp4(x_i / (alpha * sigma_b))
//   x^_i  = alpha * sigma_b * decode(q_i)
//   sigma = pi_e4m3(max|x in block| / (alpha * 6))
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mixquant/formats.hpp"
#include "mixquant/tensor.hpp"

namespace mixquant {

inline constexpr std::size_t kNvfp4GroupSize = 16;

enum class TensorScalePolicy {
    AmaxCalibrated,  // alpha = amax / (6 * 448)
    Unit,            // alpha = 1
};

struct QuantConfig {
    std::size_t group_size = kNvfp4GroupSize;
    TensorScalePolicy tensor_scale_policy = TensorScalePolicy::AmaxCalibrated;
    /// Test hook: keep the unrounded block scales instead of E4M3 codes.
    bool exact_scales = false;
};

struct QuantizedTensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t group_size = kNvfp4GroupSize;
    std::vector<Fp4Code> codes;               // rows * cols, one code per entry
    std::vector<Fp8E4M3Code> block_scales;    // rows * (cols / group_size)
    std::vector<double> exact_block_scales;   // populated only by the exact_scales hook
    float tensor_scale = 1.0f;

    std::size_t blocks_per_row() const { return cols / group_size; }
    bool has_exact_scales() const { return !exact_block_scales.empty(); }

    /// Block scale value used for (de)quantization of block `block` in `row`.
    double block_scale_value(std::size_t row, std::size_t block) const;

    bool operator==(const QuantizedTensor&) const = default;
};

float tensor_scale(const Matrix& x, TensorScalePolicy policy);

/// Unrounded scale max|block| / (alpha * 6), or 0 for an all-zero block.
double block_scale_real(std::span<const float> block, float alpha);

Fp8E4M3Code block_scale(std::span<const float> block, float alpha);

/// x / (alpha * sigma) rounded once to binary32. alpha * sigma is formed
/// exactly in binary64.
float scaled_value(float x, float alpha, double sigma);

QuantizedTensor quantize(const Matrix& x, const QuantConfig& cfg = {});

/// x^ = (alpha * sigma) * q, formed exactly in binary64 then rounded once
/// to binary32.
Matrix dequantize(const QuantizedTensor& q);

/// Debug serialization, magic `MXQT`. Rejects tensors built with the
/// exact_scales hook.
std::vector<std::uint8_t> serialize_quantized(const QuantizedTensor& q);
QuantizedTensor deserialize_quantized(std::span<const std::uint8_t> bytes);

}  // namespace mixquant
