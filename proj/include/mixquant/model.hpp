// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
//
// Toy decoder-only transformer definition: config, weights, deterministic
// initialization and the MXQW weight file.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mixquant/tensor.hpp"

namespace mixquant {

using TokenId = std::int32_t;

enum class Precision { High, Nvfp4 };

std::string_view to_string(Precision p);

struct ModelConfig {
    std::uint32_t vocab_size = 256;
    std::uint32_t d_model = 64;
    std::uint32_t n_layers = 2;
    std::uint32_t n_heads = 4;
    std::uint32_t head_dim = 16;
    std::uint32_t ffn_hidden = 256;
    std::uint32_t max_seq_len = 512;
    double rope_base = 10000.0;
    std::uint64_t seed = 0;

    /// Throws Error(Config) on any divisibility or range violation.
    void validate() const;

    /// Serialized config block (little-endian, field order as declared).
    std::vector<std::uint8_t> serialize() const;
    static ModelConfig deserialize(std::span<const std::uint8_t> bytes);

    /// FNV-1a 64 over serialize().
    std::uint64_t digest() const;

    bool operator==(const ModelConfig&) const = default;
};

/// Fills in head_dim = d_model / n_heads and, when ffn_hidden == 0, the
/// default 4 * d_model rounded up to a multiple of 16.
ModelConfig make_config(std::uint32_t vocab_size, std::uint32_t d_model, std::uint32_t n_layers,
                        std::uint32_t n_heads, std::uint32_t max_seq_len, std::uint64_t seed,
                        std::uint32_t ffn_hidden = 0);

struct LayerWeights {
    std::vector<float> attn_norm;
    Matrix wq, wk, wv, wo;  // d_model x d_model, stored output-major
    std::vector<float> mlp_norm;
    Matrix w_gate, w_up;    // ffn_hidden x d_model
    Matrix w_down;          // d_model x ffn_hidden

    bool operator==(const LayerWeights&) const = default;
};

struct ModelWeights {
    ModelConfig config;
    Matrix embedding;  // vocab_size x d_model, tied to the output head
    std::vector<LayerWeights> layers;
    std::vector<float> final_norm;

    bool operator==(const ModelWeights&) const = default;
};

/// Normal(0, 0.02^2) weights from NormalStream(cfg.seed), drawn in the order
/// embedding, then per layer wq, wk, wv, wo, w_gate, w_up, w_down, each
/// row-major. RMSNorm gains are 1 and consume no draws.
ModelWeights init_weights(const ModelConfig& cfg);

/// MXQW file: magic, u32 version, u64 config digest, u32 config block size,
/// config block, then binary32 tensors in the order embedding, per layer
/// (attn_norm, wq, wk, wv, wo, mlp_norm, w_gate, w_up, w_down), final_norm.
std::vector<std::uint8_t> serialize_weights(const ModelWeights& w);
ModelWeights deserialize_weights(std::span<const std::uint8_t> bytes);

void save_weights(const std::string& path, const ModelWeights& w);
ModelWeights load_weights(const std::string& path);

}  // namespace mixquant
