// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
#include "mixquant/qgemm.hpp"

#include <algorithm>
#include <string>

#include "mixquant/error.hpp"

namespace mixquant {

GemmSpec gemm_spec(const QuantizedTensor& a, const QuantizedTensor& w) {
    if (a.cols != w.cols) {
        fail(ErrorKind::Shape, "qgemm: reduction dims differ (" + std::to_string(a.cols) + " vs " +
                                   std::to_string(w.cols) + ")");
    }
    if (a.group_size != w.group_size) {
        fail(ErrorKind::Shape, "qgemm: operands use different group sizes");
    }
    return GemmSpec{a.rows, w.rows, a.cols, a.group_size};
}

DecodedOperand decode_operand(const QuantizedTensor& q, bool transposed) {
    DecodedOperand d;
    d.rows = q.rows;
    d.cols = q.cols;
    d.group_size = q.group_size;
    d.tensor_scale = q.tensor_scale;
    d.transposed = transposed;
    d.values.resize(q.rows * q.cols);
    const std::size_t nb = q.blocks_per_row();
    d.scales.resize(q.rows * nb);
    for (std::size_t r = 0; r < q.rows; ++r) {
        for (std::size_t c = 0; c < q.cols; ++c) {
            const float v = e2m1_decode(q.codes[r * q.cols + c]);
            d.values[transposed ? c * q.rows + r : r * q.cols + c] = v;
        }
        for (std::size_t b = 0; b < nb; ++b) {
            const auto s = static_cast<float>(q.block_scale_value(r, b));
            d.scales[transposed ? b * q.rows + r : r * nb + b] = s;
        }
    }
    return d;
}

void qgemm_into(const DecodedOperand& a, const DecodedOperand& w, Matrix& out, std::size_t out_row) {
    if (a.transposed || !w.transposed) {
        fail(ErrorKind::Shape, "qgemm_into: expects row-major activations and transposed weights");
    }
    if (a.cols != w.cols || a.group_size != w.group_size) {
        fail(ErrorKind::Shape, "qgemm_into: operand reduction layout mismatch");
    }
    const std::size_t n = w.rows;
    const std::size_t k = a.cols;
    const std::size_t g = a.group_size;
    const std::size_t nb = k / g;
    if (out.cols != n || out.rows < out_row + a.rows) {
        fail(ErrorKind::Shape, "qgemm_into: output matrix too small");
    }
    const float alpha = a.tensor_scale * w.tensor_scale;
    std::vector<float> acc(n);
    std::vector<float> partial(n);
    for (std::size_t i = 0; i < a.rows; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0f);
        const float* arow = a.values.data() + i * k;
        for (std::size_t b = 0; b < nb; ++b) {
            std::fill(partial.begin(), partial.end(), 0.0f);
            for (std::size_t t = b * g; t < (b + 1) * g; ++t) {
                const float av = arow[t];
                // Skipping zero terms is exact: partial starts at +0 and
                // x + (+-0) == x for every partial sum reachable here.
                if (av == 0.0f) continue;
                const float* wcol = w.values.data() + t * n;
                for (std::size_t j = 0; j < n; ++j) partial[j] += av * wcol[j];
            }
            const float sa = a.scales[i * nb + b];
            const float* sw = w.scales.data() + b * n;
            for (std::size_t j = 0; j < n; ++j) acc[j] += (sa * sw[j]) * partial[j];
        }
        float* orow = out.data.data() + (out_row + i) * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] = alpha * acc[j];
    }
}

Matrix qgemm(const QuantizedTensor& a, const QuantizedTensor& w) {
    const GemmSpec spec = gemm_spec(a, w);
    Matrix out(spec.m, spec.n);
    qgemm_into(decode_operand(a, false), decode_operand(w, true), out);
    return out;
}

std::vector<double> reference_gemm(const Matrix& a, const Matrix& w) {
    if (a.cols != w.cols) {
        fail(ErrorKind::Shape, "reference_gemm: reduction dims differ");
    }
    std::vector<double> out(a.rows * w.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < w.rows; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < a.cols; ++t) {
                acc += static_cast<double>(a(i, t)) * static_cast<double>(w(j, t));
            }
            out[i * w.rows + j] = acc;
        }
    }
    return out;
}

}  // namespace mixquant
