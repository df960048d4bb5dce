// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
//
// Phase-wise precision orchestration: the prefill pass and the
// autoregressive decode loop can each run at high precision or NVFP4.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mixquant/model.hpp"
#include "mixquant/rng.hpp"
#include "mixquant/transformer.hpp"

namespace mixquant {

enum class ExecutionMode {
    Baseline16,  // high-precision prefill, high-precision decode
    UniformFp4,  // NVFP4 prefill, NVFP4 decode
    MixQuant,    // NVFP4 prefill, high-precision decode
    P16D4,       // high-precision prefill, NVFP4 decode
};

inline constexpr ExecutionMode kAllModes[] = {ExecutionMode::Baseline16, ExecutionMode::UniformFp4,
                                              ExecutionMode::MixQuant, ExecutionMode::P16D4};

Precision prefill_precision(ExecutionMode mode);
Precision decode_precision(ExecutionMode mode);
std::string_view to_string(ExecutionMode mode);
ExecutionMode parse_mode(std::string_view name);

enum class SamplingStrategy { Greedy, Temperature };

struct SamplerSpec {
    SamplingStrategy strategy = SamplingStrategy::Greedy;
    float temperature = 1.0f;  // used by Temperature only; must be > 0
    std::uint64_t seed = 0;    // used by Temperature only
    std::uint32_t max_new_tokens = 16;
    std::optional<TokenId> stop_token;

    void validate() const;
    bool operator==(const SamplerSpec&) const = default;
};

struct StepRecord {
    TokenId token = 0;
    std::vector<float> log_probs;  // full distribution the token was drawn from
};

struct Trajectory {
    ExecutionMode mode = ExecutionMode::Baseline16;
    SamplerSpec sampler;
    std::uint64_t config_digest = 0;
    std::vector<TokenId> prompt;
    std::vector<StepRecord> steps;

    std::vector<TokenId> tokens() const;
};

struct TokenDistribution {
    TokenId token = 0;
    std::vector<float> probs;
    std::vector<float> log_probs;
};

/// Softmax (max-subtracted, binary32) plus token choice. Greedy takes the
/// argmax, lowest id on ties. Temperature scales logits by 1/t, then draws
/// u in [0,1) from `rng` and returns the first id whose running cumulative
/// probability exceeds u.
TokenDistribution decode_distribution(std::span<const float> logits, const SamplerSpec& sampler,
                                      SplitMix64* rng = nullptr);

/// Stateful token chooser for one sequence.
class Sampler {
  public:
    explicit Sampler(const SamplerSpec& spec);
    TokenDistribution next(std::span<const float> logits);

  private:
    SamplerSpec spec_;
    SplitMix64 rng_;
};

/// One generation session: a private KV cache plus pending state so that
/// follow-up prompt chunks can be appended after a decode phase.
class Session {
  public:
    Session(const Model& model, ExecutionMode mode);

    /// Appends the chunk (preceded by the last generated token, if any)
    /// through the prefill precision, then decodes at the decode precision.
    Trajectory submit(std::span<const TokenId> chunk, const SamplerSpec& sampler);

    const KvCache& cache() const { return kv_; }

  private:
    const Model* model_;
    ExecutionMode mode_;
    KvCache kv_;
    std::optional<TokenId> pending_;
};

/// Decode loop starting from already-prefilled state: samples from
/// `logits`, feeds each sampled token back at `precision`, and stops at
/// max_new_tokens or the stop token.
std::vector<StepRecord> decode_loop(const Model& model, KvCache& kv, std::vector<float> logits,
                                    Precision precision, const SamplerSpec& sampler);

Trajectory generate(const Model& model, std::span<const TokenId> prompt, ExecutionMode mode,
                    const SamplerSpec& sampler);

/// Line-oriented dump: a header record then one record per step with the
/// top-8 (token, log-probability) pairs in descending probability.
std::string dump_trajectory(const Trajectory& t);

}  // namespace mixquant
