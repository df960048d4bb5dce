// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
#include "mixquant/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mixquant/error.hpp"
#include "mixquant/formats.hpp"

namespace mixquant {

namespace {

constexpr std::size_t kDumpTopK = 8;

std::string join_tokens(std::span<const TokenId> tokens) {
    return fmt::format("{}", fmt::join(tokens, ","));
}

}  // namespace

Precision prefill_precision(ExecutionMode mode) {
    switch (mode) {
        case ExecutionMode::UniformFp4:
        case ExecutionMode::MixQuant: return Precision::Nvfp4;
        case ExecutionMode::Baseline16:
        case ExecutionMode::P16D4: return Precision::High;
    }
    return Precision::High;
}

Precision decode_precision(ExecutionMode mode) {
    switch (mode) {
        case ExecutionMode::UniformFp4:
        case ExecutionMode::P16D4: return Precision::Nvfp4;
        case ExecutionMode::Baseline16:
        case ExecutionMode::MixQuant: return Precision::High;
    }
    return Precision::High;
}

std::string_view to_string(ExecutionMode mode) {
    switch (mode) {
        case ExecutionMode::Baseline16: return "baseline16";
        case ExecutionMode::UniformFp4: return "uniform-fp4";
        case ExecutionMode::MixQuant: return "mixquant";
        case ExecutionMode::P16D4: return "p16d4";
    }
    return "unknown";
}

ExecutionMode parse_mode(std::string_view name) {
    for (ExecutionMode m : kAllModes) {
        if (to_string(m) == name) return m;
    }
    fail(ErrorKind::InvalidValue, fmt::format("unknown execution mode '{}'", name));
}

void SamplerSpec::validate() const {
    if (strategy == SamplingStrategy::Temperature && !(temperature > 0.0f && std::isfinite(temperature))) {
        fail(ErrorKind::InvalidValue, "sampler: temperature must be positive and finite");
    }
}

std::vector<TokenId> Trajectory::tokens() const {
    std::vector<TokenId> out;
    out.reserve(steps.size());
    for (const StepRecord& s : steps) out.push_back(s.token);
    return out;
}

TokenDistribution decode_distribution(std::span<const float> logits, const SamplerSpec& sampler,
                                      SplitMix64* rng) {
    if (logits.empty()) fail(ErrorKind::Shape, "decode_distribution: empty logits");
    for (float l : logits) {
        if (!std::isfinite(l)) fail(ErrorKind::InvalidValue, "decode_distribution: non-finite logit");
    }
    const bool tempered = sampler.strategy == SamplingStrategy::Temperature;
    std::vector<float> scaled(logits.begin(), logits.end());
    if (tempered) {
        sampler.validate();
        for (float& l : scaled) l /= sampler.temperature;
    }
    const float max_logit = *std::max_element(scaled.begin(), scaled.end());
    TokenDistribution out;
    out.probs.resize(scaled.size());
    float denom = 0.0f;
    for (std::size_t i = 0; i < scaled.size(); ++i) {
        out.probs[i] = std::exp(scaled[i] - max_logit);
        denom += out.probs[i];
    }
    const float log_denom = std::log(denom);
    out.log_probs.resize(scaled.size());
    for (std::size_t i = 0; i < scaled.size(); ++i) {
        out.probs[i] /= denom;
        out.log_probs[i] = (scaled[i] - max_logit) - log_denom;
    }

    if (!tempered) {
        // max_element returns the first maximum, i.e. the lowest id.
        out.token = static_cast<TokenId>(std::max_element(logits.begin(), logits.end()) - logits.begin());
        return out;
    }
    if (rng == nullptr) fail(ErrorKind::InvalidValue, "decode_distribution: temperature sampling needs a generator");
    const double u = rng->uniform();
    float cumulative = 0.0f;
    std::size_t chosen = scaled.size();
    std::size_t last_nonzero = 0;
    for (std::size_t i = 0; i < out.probs.size(); ++i) {
        if (out.probs[i] > 0.0f) last_nonzero = i;
        cumulative += out.probs[i];
        if (chosen == scaled.size() && u < static_cast<double>(cumulative)) chosen = i;
    }
    out.token = static_cast<TokenId>(chosen == scaled.size() ? last_nonzero : chosen);
    return out;
}

Sampler::Sampler(const SamplerSpec& spec) : spec_(spec), rng_(spec.seed) {
    spec_.validate();
}

TokenDistribution Sampler::next(std::span<const float> logits) {
    return decode_distribution(logits, spec_, &rng_);
}

std::vector<StepRecord> decode_loop(const Model& model, KvCache& kv, std::vector<float> logits,
                                    Precision precision, const SamplerSpec& spec) {
    Sampler sampler(spec);
    std::vector<StepRecord> steps;
    for (std::uint32_t step = 0; step < spec.max_new_tokens; ++step) {
        if (step > 0) {
            logits = model.decode_step(kv, steps.back().token, precision);
        }
        TokenDistribution dist = sampler.next(logits);
        steps.push_back(StepRecord{dist.token, std::move(dist.log_probs)});
        if (spec.stop_token && dist.token == *spec.stop_token) break;
    }
    return steps;
}

Session::Session(const Model& model, ExecutionMode mode)
    : model_(&model), mode_(mode), kv_(model.new_cache()) {}

Trajectory Session::submit(std::span<const TokenId> chunk, const SamplerSpec& sampler) {
    if (chunk.empty()) fail(ErrorKind::Shape, "submit: empty prompt chunk");
    sampler.validate();
    std::vector<TokenId> input;
    if (pending_) input.push_back(*pending_);
    input.insert(input.end(), chunk.begin(), chunk.end());
    if (kv_.length() + input.size() > model_->config().max_seq_len) {
        fail(ErrorKind::ContextOverflow,
             fmt::format("context overflow at position {}: prompt needs {} positions, max_seq_len is {}",
                         model_->config().max_seq_len, kv_.length() + input.size(), model_->config().max_seq_len));
    }
    std::vector<float> logits = model_->extend(kv_, input, prefill_precision(mode_));

    Trajectory t;
    t.mode = mode_;
    t.sampler = sampler;
    t.config_digest = model_->digest();
    t.prompt.assign(chunk.begin(), chunk.end());
    t.steps = decode_loop(*model_, kv_, std::move(logits), decode_precision(mode_), sampler);
    pending_.reset();
    if (!t.steps.empty()) pending_ = t.steps.back().token;
    return t;
}

Trajectory generate(const Model& model, std::span<const TokenId> prompt, ExecutionMode mode,
                    const SamplerSpec& sampler) {
    Session session(model, mode);
    return session.submit(prompt, sampler);
}

std::string dump_trajectory(const Trajectory& t) {
    std::string out;
    const std::string sampler = t.sampler.strategy == SamplingStrategy::Greedy
                                    ? std::string("greedy")
                                    : "temperature:" + shortest_repr(t.sampler.temperature);
    const std::string seed =
        t.sampler.strategy == SamplingStrategy::Greedy ? std::string("none") : std::to_string(t.sampler.seed);
    const std::string stop = t.sampler.stop_token ? std::to_string(*t.sampler.stop_token) : std::string("none");
    out += fmt::format("header mode={} sampler={} seed={} max_new={} stop={} digest={:016x} prompt={}\n",
                       to_string(t.mode), sampler, seed, t.sampler.max_new_tokens, stop, t.config_digest,
                       join_tokens(t.prompt));
    std::vector<std::size_t> order;
    for (std::size_t s = 0; s < t.steps.size(); ++s) {
        const StepRecord& step = t.steps[s];
        order.resize(step.log_probs.size());
        std::iota(order.begin(), order.end(), 0);
        const std::size_t k = std::min(kDumpTopK, order.size());
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              if (step.log_probs[a] != step.log_probs[b]) return step.log_probs[a] > step.log_probs[b];
                              return a < b;
                          });
        std::string top;
        for (std::size_t i = 0; i < k; ++i) {
            if (i > 0) top += ',';
            top += fmt::format("{}:{}", order[i], shortest_repr(step.log_probs[order[i]]));
        }
        out += fmt::format("step index={} token={} top8={}\n", s + 1, step.token, top);
    }
    return out;
}

}  // namespace mixquant
