// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
#include "mixquant/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mixquant/bytes.hpp"
#include "mixquant/error.hpp"

namespace mixquant {

namespace {

constexpr std::uint32_t kQuantizedTensorVersion = 1;

float finite_amax(std::span<const float> values) {
    float amax = 0.0f;
    for (float v : values) {
        if (!std::isfinite(v)) {
            fail(ErrorKind::InvalidValue, "quantizer: non-finite input value");
        }
        amax = std::max(amax, std::fabs(v));
    }
    return amax;
}

}  // namespace

double QuantizedTensor::block_scale_value(std::size_t row, std::size_t block) const {
    const std::size_t idx = row * blocks_per_row() + block;
    if (has_exact_scales()) return exact_block_scales[idx];
    return static_cast<double>(e4m3_decode(block_scales[idx]));
}

float tensor_scale(const Matrix& x, TensorScalePolicy policy) {
    const float amax = finite_amax(x.data);
    if (policy == TensorScalePolicy::Unit || amax == 0.0f) {
        return 1.0f;
    }
    return amax / (kFp4Max * kE4m3Max);
}

double block_scale_real(std::span<const float> block, float alpha) {
    if (!(alpha > 0.0f) || !std::isfinite(alpha)) {
        fail(ErrorKind::InvalidValue, "block_scale: tensor scale must be positive and finite");
    }
    const float amax = finite_amax(block);
    if (amax == 0.0f) return 0.0;
    return static_cast<double>(amax) / (static_cast<double>(alpha) * static_cast<double>(kFp4Max));
}

Fp8E4M3Code block_scale(std::span<const float> block, float alpha) {
    const double real = block_scale_real(block, alpha);
    if (real == 0.0) return kE4m3PosZero;
    return pi_e4m3_wide(real);
}

float scaled_value(float x, float alpha, double sigma) {
    return static_cast<float>(static_cast<double>(x) / (static_cast<double>(alpha) * sigma));
}

QuantizedTensor quantize(const Matrix& x, const QuantConfig& cfg) {
    if (cfg.group_size == 0 || x.cols % cfg.group_size != 0) {
        fail(ErrorKind::Shape, "quantize: cols " + std::to_string(x.cols) +
                                   " not divisible by group size " + std::to_string(cfg.group_size));
    }
    QuantizedTensor q;
    q.rows = x.rows;
    q.cols = x.cols;
    q.group_size = cfg.group_size;
    q.tensor_scale = tensor_scale(x, cfg.tensor_scale_policy);
    q.codes.assign(x.rows * x.cols, Fp4Code{});
    q.block_scales.assign(x.rows * q.blocks_per_row(), kE4m3PosZero);
    if (cfg.exact_scales) q.exact_block_scales.assign(q.block_scales.size(), 0.0);

    const std::size_t g = cfg.group_size;
    for (std::size_t r = 0; r < x.rows; ++r) {
        for (std::size_t b = 0; b < q.blocks_per_row(); ++b) {
            const std::span<const float> block = x.row(r).subspan(b * g, g);
            const std::size_t idx = r * q.blocks_per_row() + b;
            const double real = block_scale_real(block, q.tensor_scale);
            double sigma = 0.0;
            if (cfg.exact_scales) {
                q.exact_block_scales[idx] = real;
                sigma = real;
            } else if (real != 0.0) {
                q.block_scales[idx] = pi_e4m3_wide(real);
                sigma = static_cast<double>(e4m3_decode(q.block_scales[idx]));
            }
            if (sigma == 0.0) continue;  // codes stay +0
            for (std::size_t t = 0; t < g; ++t) {
                q.codes[r * x.cols + b * g + t] = pi_fp4(scaled_value(block[t], q.tensor_scale, sigma));
            }
        }
    }
    return q;
}

Matrix dequantize(const QuantizedTensor& q) {
    Matrix out(q.rows, q.cols);
    const double alpha = q.tensor_scale;
    for (std::size_t r = 0; r < q.rows; ++r) {
        for (std::size_t b = 0; b < q.blocks_per_row(); ++b) {
            const double scale = alpha * q.block_scale_value(r, b);
            for (std::size_t t = 0; t < q.group_size; ++t) {
                const std::size_t i = r * q.cols + b * q.group_size + t;
                out.data[i] = static_cast<float>(scale * static_cast<double>(e2m1_decode(q.codes[i])));
            }
        }
    }
    return out;
}

std::vector<std::uint8_t> serialize_quantized(const QuantizedTensor& q) {
    if (q.has_exact_scales()) {
        fail(ErrorKind::Format, "serialize_quantized: exact-scale tensors have no wire form");
    }
    ByteWriter w;
    w.put_magic("MXQT");
    w.put_u32(kQuantizedTensorVersion);
    w.put_u32(static_cast<std::uint32_t>(q.rows));
    w.put_u32(static_cast<std::uint32_t>(q.cols));
    w.put_u32(static_cast<std::uint32_t>(q.group_size));
    w.put_f32(q.tensor_scale);
    for (std::size_t i = 0; i < q.codes.size(); i += 2) {
        const std::uint8_t lo = q.codes[i].bits & 0xF;
        const std::uint8_t hi = i + 1 < q.codes.size() ? (q.codes[i + 1].bits & 0xF) : 0;
        w.put_u8(static_cast<std::uint8_t>(lo | (hi << 4)));
    }
    for (Fp8E4M3Code s : q.block_scales) w.put_u8(s.bits);
    return w.take();
}

QuantizedTensor deserialize_quantized(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic("MXQT");
    if (const auto version = r.u32(); version != kQuantizedTensorVersion) {
        fail(ErrorKind::Format, "MXQT: unsupported version " + std::to_string(version));
    }
    QuantizedTensor q;
    q.rows = r.u32();
    q.cols = r.u32();
    q.group_size = r.u32();
    q.tensor_scale = r.f32();
    if (q.group_size == 0 || q.cols % q.group_size != 0) {
        fail(ErrorKind::Format, "MXQT: cols not divisible by group size");
    }
    if (!(q.tensor_scale > 0.0f) || !std::isfinite(q.tensor_scale)) {
        fail(ErrorKind::Format, "MXQT: tensor scale must be positive and finite");
    }
    const std::size_t n = q.rows * q.cols;
    auto packed = r.take((n + 1) / 2);
    q.codes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t byte = packed[i / 2];
        q.codes[i] = Fp4Code{static_cast<std::uint8_t>(i % 2 == 0 ? byte & 0xF : byte >> 4)};
    }
    auto scales = r.take(q.rows * q.blocks_per_row());
    q.block_scales.reserve(scales.size());
    for (std::uint8_t s : scales) {
        if (is_nan(Fp8E4M3Code{s})) fail(ErrorKind::Format, "MXQT: NaN block scale");
        q.block_scales.push_back(Fp8E4M3Code{s});
    }
    if (r.remaining() != 0) fail(ErrorKind::Format, "MXQT: trailing bytes");
    return q;
}

}  // namespace mixquant
