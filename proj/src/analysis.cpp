// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
#include "mixquant/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "mixquant/error.hpp"

namespace mixquant {

namespace {

using nlohmann::json;

std::size_t argmax(std::span<const float> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

json cost_json(const PhaseCost& c, double ratio) {
    return json{{"linear_fp4_macs", c.linear_fp4},
                {"linear_high_macs", c.linear_high},
                {"attention_macs", c.attention},
                {"head_macs", c.head},
                {"total_macs", c.total()},
                {"fp4_fraction", c.fp4_fraction()},
                {"fp4_linear_fraction", c.fp4_linear_fraction()},
                {"modeled_speedup", c.modeled_speedup(ratio)}};
}

std::string cost_text(std::string_view phase, const PhaseCost& c, double ratio) {
    return fmt::format(
        "{} linear_fp4_macs={} linear_high_macs={} attention_macs={} head_macs={} total_macs={} "
        "fp4_fraction={} fp4_linear_fraction={} modeled_speedup={}\n",
        phase, c.linear_fp4, c.linear_high, c.attention, c.head, c.total(), c.fp4_fraction(),
        c.fp4_linear_fraction(), c.modeled_speedup(ratio));
}

json divergence_json(const DivergenceReport& r) {
    json j;
    j["reference"] = to_string(r.reference_mode);
    j["test"] = to_string(r.test_mode);
    j["compared_steps"] = r.compared_steps;
    j["first_divergence"] = r.first_divergence ? json(*r.first_divergence) : json(nullptr);
    j["kl"] = r.kl;
    j["top1_agreement"] = r.top1_agreement;
    return j;
}

std::string sampler_text(const SamplerSpec& s) {
    if (s.strategy == SamplingStrategy::Greedy) return "greedy";
    return fmt::format("temperature:{}", s.temperature);
}

}  // namespace

// ---------------------------------------------------------------------------
// Attention mass

TopKMassReport topk_mass(const AttentionRecord& attn, std::span<const std::size_t> ks) {
    const std::size_t n = attn.seq_len();
    if (ks.empty()) fail(ErrorKind::InvalidValue, "topk_mass: no k given");
    for (std::size_t k : ks) {
        if (k < 1 || k > n) {
            fail(ErrorKind::InvalidValue, fmt::format("topk_mass: k={} outside [1, {}]", k, n));
        }
    }
    TopKMassReport r;
    r.query_position = attn.query_position;
    r.n_layers = attn.n_layers;
    r.n_heads = attn.n_heads;
    r.ks.assign(ks.begin(), ks.end());
    const std::size_t rows = attn.n_layers * attn.n_heads;
    r.fractions.assign(ks.size(), std::vector<double>(rows, 0.0));
    r.mean.assign(ks.size(), 0.0);

    std::vector<double> sorted(n);
    std::vector<double> prefix(n + 1);
    for (std::size_t l = 0; l < attn.n_layers; ++l) {
        for (std::size_t h = 0; h < attn.n_heads; ++h) {
            const auto row = attn.row(l, h);
            std::copy(row.begin(), row.end(), sorted.begin());
            std::sort(sorted.begin(), sorted.end(), std::greater<>());
            prefix[0] = 0.0;
            for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + sorted[i];
            const double total = prefix[n];
            if (!(total > 0.0)) fail(ErrorKind::InvalidValue, "topk_mass: attention row has no mass");
            for (std::size_t i = 0; i < ks.size(); ++i) {
                r.fractions[i][l * attn.n_heads + h] = prefix[ks[i]] / total;
            }
        }
    }
    for (std::size_t i = 0; i < ks.size(); ++i) {
        double sum = 0.0;
        for (double f : r.fractions[i]) sum += f;
        r.mean[i] = rows == 0 ? 0.0 : sum / static_cast<double>(rows);
    }
    return r;
}

TopKMassReport topk_mass(const AttentionRecord& attn, std::size_t k) {
    const std::size_t ks[1] = {k};
    return topk_mass(attn, ks);
}

// ---------------------------------------------------------------------------
// Divergence

double kl_divergence(std::span<const float> ref_log_probs, std::span<const float> test_log_probs) {
    if (ref_log_probs.size() != test_log_probs.size()) {
        fail(ErrorKind::Shape, "kl_divergence: distributions have different support");
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < ref_log_probs.size(); ++i) {
        const double p = std::max(std::exp(static_cast<double>(ref_log_probs[i])), kKlProbabilityFloor);
        const double q = std::max(std::exp(static_cast<double>(test_log_probs[i])), kKlProbabilityFloor);
        kl += p * (std::log(p) - std::log(q));
    }
    return kl;
}

DivergenceReport compare_trajectories(const Trajectory& ref, const Trajectory& test) {
    if (ref.prompt != test.prompt) fail(ErrorKind::InvalidValue, "compare_trajectories: prompts differ");
    DivergenceReport r;
    r.reference_mode = ref.mode;
    r.test_mode = test.mode;
    const std::size_t shared = std::min(ref.steps.size(), test.steps.size());
    for (std::size_t s = 0; s < shared; ++s) {
        if (ref.steps[s].token != test.steps[s].token) {
            r.first_divergence = s + 1;
            break;
        }
    }
    r.compared_steps = r.first_divergence ? *r.first_divergence : shared;
    for (std::size_t s = 0; s < r.compared_steps; ++s) {
        const auto& p = ref.steps[s].log_probs;
        const auto& q = test.steps[s].log_probs;
        r.kl.push_back(kl_divergence(p, q));
        r.top1_agreement.push_back(argmax(p) == argmax(q));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Cost model

double PhaseCost::fp4_fraction() const {
    const std::uint64_t t = total();
    return t == 0 ? 0.0 : static_cast<double>(linear_fp4) / static_cast<double>(t);
}

double PhaseCost::fp4_linear_fraction() const {
    const std::uint64_t t = linear_fp4 + linear_high;
    return t == 0 ? 0.0 : static_cast<double>(linear_fp4) / static_cast<double>(t);
}

double PhaseCost::modeled_speedup(double throughput_ratio) const {
    if (!(throughput_ratio > 0.0) || !std::isfinite(throughput_ratio)) {
        fail(ErrorKind::InvalidValue, "cost model: throughput ratio must be positive and finite");
    }
    const double mixed = static_cast<double>(linear_fp4) / throughput_ratio + static_cast<double>(high());
    return mixed == 0.0 ? 1.0 : static_cast<double>(total()) / mixed;
}

CostReport cost_model(const ModelConfig& cfg, std::size_t prompt_len, std::size_t generated, ExecutionMode mode,
                      double throughput_ratio) {
    cfg.validate();
    if (prompt_len < 1 || generated < 1) fail(ErrorKind::InvalidValue, "cost model: L and T must be at least 1");
    if (!(throughput_ratio > 0.0) || !std::isfinite(throughput_ratio)) {
        fail(ErrorKind::InvalidValue, "cost model: throughput ratio must be positive and finite");
    }
    const std::uint64_t d = cfg.d_model;
    const std::uint64_t layers = cfg.n_layers;
    const std::uint64_t per_token_linear = layers * (4 * d * d + 3 * d * cfg.ffn_hidden);
    const std::uint64_t head = d * cfg.vocab_size;
    const std::uint64_t L = prompt_len;

    CostReport r;
    r.mode = mode;
    r.prompt_len = prompt_len;
    r.generated = generated;
    r.throughput_ratio = throughput_ratio;

    // Query i (1-based) scores i keys and mixes i values: 2 * i * d MACs per layer.
    const std::uint64_t prefill_linear = L * per_token_linear;
    (prefill_precision(mode) == Precision::Nvfp4 ? r.prefill.linear_fp4 : r.prefill.linear_high) = prefill_linear;
    r.prefill.attention = layers * d * L * (L + 1);
    r.prefill.head = head;

    const std::uint64_t steps = generated - 1;
    const std::uint64_t decode_linear = steps * per_token_linear;
    (decode_precision(mode) == Precision::Nvfp4 ? r.decode.linear_fp4 : r.decode.linear_high) = decode_linear;
    // Step j (0-based) attends over L + j + 1 positions.
    std::uint64_t context_sum = 0;
    for (std::uint64_t j = 0; j < steps; ++j) context_sum += L + j + 1;
    r.decode.attention = 2 * layers * d * context_sum;
    r.decode.head = steps * head;
    return r;
}

// ---------------------------------------------------------------------------
// Perplexity

double perplexity(const Model& model, ExecutionMode mode, std::span<const std::vector<TokenId>> corpus) {
    if (corpus.empty()) fail(ErrorKind::InvalidValue, "perplexity: empty corpus");
    const Precision context_precision = prefill_precision(mode);
    const Precision scored_precision = decode_precision(mode);
    double nll = 0.0;
    std::size_t scored = 0;
    for (const auto& seq : corpus) {
        if (seq.size() < 2) continue;
        if (seq.size() > model.config().max_seq_len) {
            fail(ErrorKind::ContextOverflow,
                 fmt::format("perplexity: sequence of {} tokens exceeds max_seq_len {}", seq.size(),
                             model.config().max_seq_len));
        }
        // Rows are processed independently and attention is causal, so the
        // prefix of one context pass equals a fresh prefill of that prefix.
        KvCache context = model.new_cache();
        if (seq.size() > 2) {
            model.forward(context, std::span(seq).first(seq.size() - 2), context_precision);
        }
        for (std::size_t t = 1; t < seq.size(); ++t) {
            KvCache kv = context;
            kv.commit(t - 1);
            const std::vector<float> logits = model.decode_step(kv, seq[t - 1], scored_precision);
            double max_logit = logits[0];
            for (float l : logits) max_logit = std::max(max_logit, static_cast<double>(l));
            double denom = 0.0;
            for (float l : logits) denom += std::exp(static_cast<double>(l) - max_logit);
            const double log_p = static_cast<double>(logits[static_cast<std::size_t>(seq[t])]) - max_logit -
                                 std::log(denom);
            nll -= log_p;
            ++scored;
        }
    }
    if (scored == 0) fail(ErrorKind::InvalidValue, "perplexity: corpus has no sequence of two or more tokens");
    return std::exp(nll / static_cast<double>(scored));
}

// ---------------------------------------------------------------------------
// Mode comparison

ModeComparison compare_modes(const Model& model, std::span<const TokenId> prompt, const SamplerSpec& sampler) {
    ModeComparison c;
    c.config_digest = model.digest();
    c.model_seed = model.config().seed;
    c.prompt.assign(prompt.begin(), prompt.end());
    c.sampler = sampler;
    for (ExecutionMode m : kAllModes) c.trajectories.push_back(generate(model, prompt, m, sampler));
    for (std::size_t i = 1; i < c.trajectories.size(); ++i) {
        c.reports.push_back(compare_trajectories(c.trajectories[0], c.trajectories[i]));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Rendering

std::string to_text(const TopKMassReport& r) {
    std::string out = fmt::format("topk query_position={} seq_len={} layers={} heads={}\n", r.query_position,
                                  r.query_position + 1, r.n_layers, r.n_heads);
    for (std::size_t i = 0; i < r.ks.size(); ++i) {
        out += fmt::format("k={} mean={}\n", r.ks[i], r.mean[i]);
        for (std::size_t l = 0; l < r.n_layers; ++l) {
            for (std::size_t h = 0; h < r.n_heads; ++h) {
                out += fmt::format("k={} layer={} head={} fraction={}\n", r.ks[i], l, h,
                                   r.fractions[i][l * r.n_heads + h]);
            }
        }
    }
    return out;
}

std::string to_json(const TopKMassReport& r) {
    json j;
    j["query_position"] = r.query_position;
    j["seq_len"] = r.query_position + 1;
    j["n_layers"] = r.n_layers;
    j["n_heads"] = r.n_heads;
    j["ks"] = r.ks;
    j["fractions"] = r.fractions;
    j["mean"] = r.mean;
    return j.dump(2) + "\n";
}

std::string to_text(const DivergenceReport& r) {
    std::string out = fmt::format("divergence reference={} test={} compared_steps={} first_divergence={}\n",
                                  to_string(r.reference_mode), to_string(r.test_mode), r.compared_steps,
                                  r.first_divergence ? std::to_string(*r.first_divergence) : std::string("none"));
    for (std::size_t s = 0; s < r.kl.size(); ++s) {
        out += fmt::format("step test={} index={} kl={} top1_agree={}\n", to_string(r.test_mode), s + 1, r.kl[s],
                           r.top1_agreement[s] ? 1 : 0);
    }
    return out;
}

std::string to_text(const CostReport& r) {
    std::string out = fmt::format("cost mode={} prompt_len={} generated={} throughput_ratio={}\n", to_string(r.mode),
                                  r.prompt_len, r.generated, r.throughput_ratio);
    out += cost_text("prefill", r.prefill, r.throughput_ratio);
    out += cost_text("decode", r.decode, r.throughput_ratio);
    return out;
}

std::string to_json(const CostReport& r) {
    json j;
    j["mode"] = to_string(r.mode);
    j["prompt_len"] = r.prompt_len;
    j["generated"] = r.generated;
    j["throughput_ratio"] = r.throughput_ratio;
    j["prefill"] = cost_json(r.prefill, r.throughput_ratio);
    j["decode"] = cost_json(r.decode, r.throughput_ratio);
    return j.dump(2) + "\n";
}

std::string to_text(const ModeComparison& c) {
    std::string out = fmt::format("compare digest={:016x} model_seed={} sampler={} max_new={} prompt={}\n",
                                  c.config_digest, c.model_seed, sampler_text(c.sampler), c.sampler.max_new_tokens,
                                  fmt::join(c.prompt, ","));
    for (const Trajectory& t : c.trajectories) {
        out += fmt::format("tokens mode={} ids={}\n", to_string(t.mode), fmt::join(t.tokens(), ","));
    }
    for (const DivergenceReport& r : c.reports) out += to_text(r);
    return out;
}

std::string to_json(const ModeComparison& c) {
    json j;
    j["digest"] = fmt::format("{:016x}", c.config_digest);
    j["model_seed"] = c.model_seed;
    j["sampler"] = sampler_text(c.sampler);
    j["max_new"] = c.sampler.max_new_tokens;
    j["prompt"] = c.prompt;
    json tokens = json::object();
    for (const Trajectory& t : c.trajectories) tokens[std::string(to_string(t.mode))] = t.tokens();
    j["tokens"] = tokens;
    j["reports"] = json::array();
    for (const DivergenceReport& r : c.reports) j["reports"].push_back(divergence_json(r));
    return j.dump(2) + "\n";
}

}  // namespace mixquant
