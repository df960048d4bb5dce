// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
//
// Forward pass of the toy decoder: pre-norm RMSNorm, RoPE attention with a
// KV cache, SwiGLU MLP, tied output head. Only the seven linear projections
// per layer change with Precision; norms, RoPE, softmax, residuals, the
// embedding and the head always run in binary32.
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mixquant/model.hpp"
#include "mixquant/qgemm.hpp"
#include "mixquant/quantizer.hpp"
#include "mixquant/tensor.hpp"

namespace mixquant {

/// Test hook: Identity routes Nvfp4 linears through the high-precision
/// kernel, which makes every execution mode numerically identical.
enum class QuantizerKind { Nvfp4, Identity };

inline constexpr float kRmsNormEps = 1e-6f;

/// Per-layer keys and values laid out [seq, head, dim] in binary32.
class KvCache {
  public:
    KvCache() = default;
    KvCache(std::size_t n_layers, std::size_t n_heads, std::size_t head_dim, std::size_t max_seq_len);

    std::size_t n_layers() const { return keys_.size(); }
    std::size_t n_heads() const { return n_heads_; }
    std::size_t head_dim() const { return head_dim_; }
    std::size_t max_seq_len() const { return max_seq_len_; }
    std::size_t length() const { return length_; }
    std::size_t entry_size() const { return n_heads_ * head_dim_; }

    /// Writes one position of one layer. Positions may run ahead of
    /// length() until commit() publishes them.
    void write(std::size_t layer, std::size_t pos, std::span<const float> key,
               std::span<const float> value);
    void commit(std::size_t new_length);

    std::span<const float> key(std::size_t layer, std::size_t pos, std::size_t head) const;
    std::span<const float> value(std::size_t layer, std::size_t pos, std::size_t head) const;

    /// Committed [seq, head, dim] payloads of one layer.
    std::span<const float> layer_keys(std::size_t layer) const;
    std::span<const float> layer_values(std::size_t layer) const;

    /// Rebuilds a cache from committed payloads (used by the KV blob loader).
    static KvCache from_payloads(std::size_t n_heads, std::size_t head_dim, std::size_t max_seq_len,
                                 std::size_t length, std::vector<std::vector<float>> keys,
                                 std::vector<std::vector<float>> values);

    bool operator==(const KvCache&) const;

  private:
    std::size_t n_heads_ = 0;
    std::size_t head_dim_ = 0;
    std::size_t max_seq_len_ = 0;
    std::size_t length_ = 0;
    std::vector<std::vector<float>> keys_;
    std::vector<std::vector<float>> values_;
};

/// Post-softmax attention weights of one query position for every
/// (layer, head); each row covers keys 0..query_position.
struct AttentionRecord {
    std::size_t query_position = 0;
    std::size_t n_layers = 0;
    std::size_t n_heads = 0;
    std::vector<float> weights;  // [layer][head][query_position + 1]

    std::size_t seq_len() const { return query_position + 1; }
    std::span<const float> row(std::size_t layer, std::size_t head) const {
        return {weights.data() + (layer * n_heads + head) * seq_len(), seq_len()};
    }
    std::span<float> row(std::size_t layer, std::size_t head) {
        return {weights.data() + (layer * n_heads + head) * seq_len(), seq_len()};
    }
};

struct PrefillResult {
    KvCache cache;
    std::vector<float> logits;  // last prompt position
    std::optional<AttentionRecord> attention;
};

enum class Projection { Q, K, V, O, Gate, Up, Down };

class Model {
  public:
    explicit Model(ModelWeights weights, QuantizerKind quantizer = QuantizerKind::Nvfp4);
    ~Model();
    Model(Model&&) noexcept;
    Model& operator=(Model&&) noexcept;

    const ModelConfig& config() const { return weights_.config; }
    const ModelWeights& weights() const { return weights_; }
    std::uint64_t digest() const { return weights_.config.digest(); }
    QuantizerKind quantizer() const { return quantizer_; }

    KvCache new_cache() const;

    Matrix embed(std::span<const TokenId> tokens) const;

    /// x @ W^T for one projection. Under Nvfp4 each activation row is
    /// quantized on its own (AmaxCalibrated tensor scale, 16-wide blocks)
    /// and multiplied against the cached NVFP4 weight shadow.
    Matrix linear(const Matrix& x, std::size_t layer, Projection proj, Precision precision) const;

    /// One residual block over rows at positions start_pos.. . Writes this
    /// layer's K/V entries into the cache (not committed).
    Matrix forward_block(const Matrix& x, std::size_t layer, Precision precision, KvCache& kv,
                         std::size_t start_pos, AttentionRecord* record = nullptr) const;

    /// Runs all layers over a chunk appended at kv.length() and commits it.
    /// Returns the final hidden states (before the final norm).
    Matrix forward(KvCache& kv, std::span<const TokenId> tokens, Precision precision,
                   AttentionRecord* record = nullptr) const;

    /// Final RMSNorm then the tied head.
    std::vector<float> logits(std::span<const float> hidden) const;

    PrefillResult prefill(std::span<const TokenId> tokens, Precision precision,
                          bool record_attention = false) const;

    /// Appends a prompt chunk to an existing cache; returns last logits.
    std::vector<float> extend(KvCache& kv, std::span<const TokenId> tokens, Precision precision) const;

    std::vector<float> decode_step(KvCache& kv, TokenId token, Precision precision) const;

    /// Logits at every position of a single fresh pass (teacher forcing).
    Matrix forward_sequence(std::span<const TokenId> tokens, Precision precision) const;

    /// Quantized weight shadow, built on first use and shared afterwards.
    const QuantizedTensor& weight_shadow(std::size_t layer, Projection proj) const;

  private:
    struct Linear;
    struct Shadows;

    const Linear& linear_for(std::size_t layer, Projection proj) const;
    void check_tokens(std::span<const TokenId> tokens) const;

    ModelWeights weights_;
    QuantizerKind quantizer_;
    std::vector<Linear> linears_;  // n_layers * 7
    Matrix embedding_t_;           // d_model x vocab, for the head
    std::unique_ptr<Shadows> shadows_;
};

std::vector<float> rms_norm(std::span<const float> x, std::span<const float> gain);

}  // namespace mixquant
