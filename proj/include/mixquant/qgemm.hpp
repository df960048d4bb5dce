// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
//
// W4A4 GEMM over NVFP4 operands. Computes Y = A * W^T with W stored n x k
// (output-major, the way linear layers hold weights).
//
// Accumulation order is fixed so results are bit-reproducible:
//   partial_b = sum_{t in b} qa[t] * qw[t]          (exact: FP4 products fit binary32)
//   acc      += (sigma_a[b] * sigma_w[b]) * partial_b  for b ascending
//   y         = (alpha_a * alpha_w) * acc
#pragma once

#include <cstddef>
#include <vector>

#include "mixquant/quantizer.hpp"
#include "mixquant/tensor.hpp"

namespace mixquant {

struct GemmSpec {
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t group_size = kNvfp4GroupSize;
};

GemmSpec gemm_spec(const QuantizedTensor& a, const QuantizedTensor& w);

/// Operand with FP4 codes expanded to their grid values and block scales
/// expanded to binary32. Expansion is exact, so this is a pure re-layout of
/// a QuantizedTensor.
struct DecodedOperand {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t group_size = kNvfp4GroupSize;
    float tensor_scale = 1.0f;
    /// Values stored column-major (cols x rows) when `transposed`, which is
    /// the layout used for the weight side of the kernel.
    bool transposed = false;
    std::vector<float> values;
    std::vector<float> scales;  // rows x blocks, or blocks x rows when transposed
};

DecodedOperand decode_operand(const QuantizedTensor& q, bool transposed);

Matrix qgemm(const QuantizedTensor& a, const QuantizedTensor& w);

/// Kernel entry used by the linear layers. `a` is row-major, `w` must be
/// transposed. Writes a.rows x w.rows into `out` starting at row `out_row`.
void qgemm_into(const DecodedOperand& a, const DecodedOperand& w, Matrix& out,
                std::size_t out_row = 0);

/// Double-precision oracle over dequantized operands: y = a * w^T with
/// terms accumulated in ascending k.
std::vector<double> reference_gemm(const Matrix& a, const Matrix& w);

}  // namespace mixquant
