// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
//
// Attention concentration, trajectory divergence, a closed-form MAC cost
// model and perplexity. Reports render as key=value lines or JSON.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixquant/engine.hpp"
#include "mixquant/model.hpp"
#include "mixquant/transformer.hpp"

namespace mixquant {

// ---------------------------------------------------------------------------
// Attention mass

struct TopKMassReport {
    std::size_t query_position = 0;
    std::size_t n_layers = 0;
    std::size_t n_heads = 0;
    std::vector<std::size_t> ks;
    /// fractions[i][layer * n_heads + head]: mass of the ks[i] largest
    /// weights in that row over the row total.
    std::vector<std::vector<double>> fractions;
    std::vector<double> mean;  // per k, averaged over layers and heads
};

/// Throws Error(InvalidValue) if any k is < 1 or > seq_len.
TopKMassReport topk_mass(const AttentionRecord& attn, std::span<const std::size_t> ks);
TopKMassReport topk_mass(const AttentionRecord& attn, std::size_t k);

// ---------------------------------------------------------------------------
// Divergence

struct DivergenceReport {
    ExecutionMode reference_mode = ExecutionMode::Baseline16;
    ExecutionMode test_mode = ExecutionMode::Baseline16;
    std::size_t compared_steps = 0;
    std::optional<std::size_t> first_divergence;  // 1-based step index
    std::vector<double> kl;                       // KL(p_ref || p_test) per compared step
    std::vector<bool> top1_agreement;
};

inline constexpr double kKlProbabilityFloor = 1e-12;

/// KL in double from two log-probability vectors, with probabilities
/// floored at kKlProbabilityFloor.
double kl_divergence(std::span<const float> ref_log_probs, std::span<const float> test_log_probs);

/// Compares over the shared prefix plus the divergence step. Throws
/// Error(InvalidValue) when the prompts differ.
DivergenceReport compare_trajectories(const Trajectory& ref, const Trajectory& test);

// ---------------------------------------------------------------------------
// Cost model

struct PhaseCost {
    std::uint64_t linear_fp4 = 0;
    std::uint64_t linear_high = 0;
    std::uint64_t attention = 0;  // QK^T and AV, always high precision
    std::uint64_t head = 0;       // tied output head, always high precision

    std::uint64_t total() const { return linear_fp4 + linear_high + attention + head; }
    std::uint64_t high() const { return linear_high + attention + head; }
    double fp4_fraction() const;
    double fp4_linear_fraction() const;
    /// total / (fp4 / ratio + high): all-high time over mixed time.
    double modeled_speedup(double throughput_ratio) const;
};

struct CostReport {
    ExecutionMode mode = ExecutionMode::Baseline16;
    std::size_t prompt_len = 0;
    std::size_t generated = 0;
    double throughput_ratio = 1.0;
    PhaseCost prefill;
    PhaseCost decode;

    double prefill_speedup() const { return prefill.modeled_speedup(throughput_ratio); }
    double decode_speedup() const { return decode.modeled_speedup(throughput_ratio); }
};

/// Exact MAC counts for the engine as implemented: prefill runs the
/// projections on L positions, causal attention over i keys at query i,
/// and the head on the last position; decode runs T - 1 single-token
/// steps (the first token comes from the prefill logits).
CostReport cost_model(const ModelConfig& cfg, std::size_t prompt_len, std::size_t generated,
                      ExecutionMode mode, double throughput_ratio);

// ---------------------------------------------------------------------------
// Perplexity

/// exp(mean NLL) over every next-token prediction in the corpus. The
/// context of a scored token is prefilled at the mode's prefill precision
/// and the position that produces the prediction runs at its decode
/// precision.
double perplexity(const Model& model, ExecutionMode mode, std::span<const std::vector<TokenId>> corpus);

// ---------------------------------------------------------------------------
// Mode comparison

struct ModeComparison {
    std::uint64_t config_digest = 0;
    std::uint64_t model_seed = 0;
    std::vector<TokenId> prompt;
    SamplerSpec sampler;
    std::vector<Trajectory> trajectories;  // one per mode, in kAllModes order
    std::vector<DivergenceReport> reports; // each non-baseline mode vs Baseline16
};

ModeComparison compare_modes(const Model& model, std::span<const TokenId> prompt, const SamplerSpec& sampler);

// ---------------------------------------------------------------------------
// Rendering

std::string to_text(const TopKMassReport& r);
std::string to_json(const TopKMassReport& r);
std::string to_text(const DivergenceReport& r);
std::string to_text(const CostReport& r);
std::string to_json(const CostReport& r);
std::string to_text(const ModeComparison& c);
std::string to_json(const ModeComparison& c);

}  // namespace mixquant
