// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
#include "mixquant/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <fmt/format.h>

#include "mixquant/error.hpp"

namespace mixquant {

namespace {

constexpr std::size_t kProjections = 7;

float silu(float x) { return x / (1.0f + std::exp(-x)); }

// y[i, :] = x[i, :] @ wt with every output accumulated in ascending k,
// the same order as a plain dot product against the untransposed weight.
Matrix dense_matmul(const Matrix& x, const Matrix& wt) {
    Matrix y(x.rows, wt.cols);
    const std::size_t n = wt.cols;
    for (std::size_t i = 0; i < x.rows; ++i) {
        float* yrow = y.data.data() + i * n;
        for (std::size_t t = 0; t < x.cols; ++t) {
            const float xv = x(i, t);
            const float* wrow = wt.data.data() + t * n;
            for (std::size_t j = 0; j < n; ++j) yrow[j] += xv * wrow[j];
        }
    }
    return y;
}

void apply_rope(std::span<float> vec, std::size_t head_dim, std::size_t pos, double base) {
    for (std::size_t i = 0; i < head_dim / 2; ++i) {
        const double inv_freq = std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(head_dim));
        const double angle = static_cast<double>(pos) * inv_freq;
        const auto c = static_cast<float>(std::cos(angle));
        const auto s = static_cast<float>(std::sin(angle));
        const float x0 = vec[2 * i];
        const float x1 = vec[2 * i + 1];
        vec[2 * i] = x0 * c - x1 * s;
        vec[2 * i + 1] = x0 * s + x1 * c;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// KvCache

KvCache::KvCache(std::size_t n_layers, std::size_t n_heads, std::size_t head_dim, std::size_t max_seq_len)
    : n_heads_(n_heads), head_dim_(head_dim), max_seq_len_(max_seq_len), keys_(n_layers), values_(n_layers) {}

void KvCache::write(std::size_t layer, std::size_t pos, std::span<const float> key,
                    std::span<const float> value) {
    if (layer >= n_layers() || pos >= max_seq_len_) {
        fail(ErrorKind::ContextOverflow,
             fmt::format("kv cache write out of range (layer {}, position {}, max_seq_len {})", layer, pos,
                         max_seq_len_));
    }
    if (key.size() != entry_size() || value.size() != entry_size()) {
        fail(ErrorKind::Shape, "kv cache write: entry size mismatch");
    }
    auto& k = keys_[layer];
    auto& v = values_[layer];
    const std::size_t need = (pos + 1) * entry_size();
    if (k.size() < need) {
        k.resize(need);
        v.resize(need);
    }
    std::copy(key.begin(), key.end(), k.begin() + static_cast<std::ptrdiff_t>(pos * entry_size()));
    std::copy(value.begin(), value.end(), v.begin() + static_cast<std::ptrdiff_t>(pos * entry_size()));
}

void KvCache::commit(std::size_t new_length) {
    if (new_length > max_seq_len_) {
        fail(ErrorKind::ContextOverflow, "kv cache commit beyond max_seq_len");
    }
    for (std::size_t l = 0; l < n_layers(); ++l) {
        if (keys_[l].size() < new_length * entry_size()) {
            fail(ErrorKind::Shape, fmt::format("kv cache commit: layer {} not written", l));
        }
    }
    length_ = new_length;
    // Entries beyond the committed length are never read; drop them so the
    // payload views stay exact.
    for (std::size_t l = 0; l < n_layers(); ++l) {
        keys_[l].resize(length_ * entry_size());
        values_[l].resize(length_ * entry_size());
    }
}

std::span<const float> KvCache::key(std::size_t layer, std::size_t pos, std::size_t head) const {
    return {keys_[layer].data() + pos * entry_size() + head * head_dim_, head_dim_};
}

std::span<const float> KvCache::value(std::size_t layer, std::size_t pos, std::size_t head) const {
    return {values_[layer].data() + pos * entry_size() + head * head_dim_, head_dim_};
}

std::span<const float> KvCache::layer_keys(std::size_t layer) const {
    return {keys_[layer].data(), length_ * entry_size()};
}

std::span<const float> KvCache::layer_values(std::size_t layer) const {
    return {values_[layer].data(), length_ * entry_size()};
}

KvCache KvCache::from_payloads(std::size_t n_heads, std::size_t head_dim, std::size_t max_seq_len,
                               std::size_t length, std::vector<std::vector<float>> keys,
                               std::vector<std::vector<float>> values) {
    if (keys.size() != values.size()) fail(ErrorKind::Shape, "kv payload layer count mismatch");
    if (length > max_seq_len) fail(ErrorKind::ContextOverflow, "kv payload longer than max_seq_len");
    KvCache kv(keys.size(), n_heads, head_dim, max_seq_len);
    for (std::size_t l = 0; l < keys.size(); ++l) {
        if (keys[l].size() != length * kv.entry_size() || values[l].size() != length * kv.entry_size()) {
            fail(ErrorKind::Shape, "kv payload size mismatch");
        }
    }
    kv.keys_ = std::move(keys);
    kv.values_ = std::move(values);
    kv.length_ = length;
    return kv;
}

bool KvCache::operator==(const KvCache& o) const {
    return n_heads_ == o.n_heads_ && head_dim_ == o.head_dim_ && max_seq_len_ == o.max_seq_len_ &&
           length_ == o.length_ && keys_ == o.keys_ && values_ == o.values_;
}

// ---------------------------------------------------------------------------
// Model

struct Model::Linear {
    const Matrix* weight = nullptr;  // n x k
    Matrix weight_t;                 // k x n
};

struct Model::Shadows {
    std::once_flag once;
    std::vector<QuantizedTensor> quantized;
    std::vector<DecodedOperand> decoded;
};

std::vector<float> rms_norm(std::span<const float> x, std::span<const float> gain) {
    float sum_sq = 0.0f;
    for (float v : x) sum_sq += v * v;
    const float inv = 1.0f / std::sqrt(sum_sq / static_cast<float>(x.size()) + kRmsNormEps);
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] * inv) * gain[i];
    return out;
}

Model::Model(ModelWeights weights, QuantizerKind quantizer)
    : weights_(std::move(weights)), quantizer_(quantizer), shadows_(std::make_unique<Shadows>()) {
    weights_.config.validate();
    linears_.resize(weights_.layers.size() * kProjections);
    for (std::size_t l = 0; l < weights_.layers.size(); ++l) {
        const LayerWeights& lw = weights_.layers[l];
        const Matrix* mats[kProjections] = {&lw.wq, &lw.wk, &lw.wv, &lw.wo, &lw.w_gate, &lw.w_up, &lw.w_down};
        for (std::size_t p = 0; p < kProjections; ++p) {
            Linear& lin = linears_[l * kProjections + p];
            lin.weight = mats[p];
            lin.weight_t = transpose(*mats[p]);
        }
    }
    embedding_t_ = transpose(weights_.embedding);
}

Model::~Model() = default;
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;

KvCache Model::new_cache() const {
    const ModelConfig& c = config();
    return KvCache(c.n_layers, c.n_heads, c.head_dim, c.max_seq_len);
}

const Model::Linear& Model::linear_for(std::size_t layer, Projection proj) const {
    return linears_.at(layer * kProjections + static_cast<std::size_t>(proj));
}

const QuantizedTensor& Model::weight_shadow(std::size_t layer, Projection proj) const {
    std::call_once(shadows_->once, [this] {
        shadows_->quantized.reserve(linears_.size());
        shadows_->decoded.reserve(linears_.size());
        for (const Linear& lin : linears_) {
            shadows_->quantized.push_back(quantize(*lin.weight));
            shadows_->decoded.push_back(decode_operand(shadows_->quantized.back(), true));
        }
    });
    return shadows_->quantized.at(layer * kProjections + static_cast<std::size_t>(proj));
}

void Model::check_tokens(std::span<const TokenId> tokens) const {
    for (TokenId t : tokens) {
        if (t < 0 || static_cast<std::uint32_t>(t) >= config().vocab_size) {
            fail(ErrorKind::InvalidValue,
                 fmt::format("token id {} outside vocabulary of {}", t, config().vocab_size));
        }
    }
}

Matrix Model::embed(std::span<const TokenId> tokens) const {
    check_tokens(tokens);
    Matrix x(tokens.size(), config().d_model);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto src = weights_.embedding.row(static_cast<std::size_t>(tokens[i]));
        std::copy(src.begin(), src.end(), x.row(i).begin());
    }
    return x;
}

Matrix Model::linear(const Matrix& x, std::size_t layer, Projection proj, Precision precision) const {
    const Linear& lin = linear_for(layer, proj);
    if (precision == Precision::High || quantizer_ == QuantizerKind::Identity) {
        return dense_matmul(x, lin.weight_t);
    }
    weight_shadow(layer, proj);
    const DecodedOperand& w = shadows_->decoded[layer * kProjections + static_cast<std::size_t>(proj)];
    Matrix y(x.rows, lin.weight->rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const Matrix row(1, x.cols, std::vector<float>(x.row(i).begin(), x.row(i).end()));
        qgemm_into(decode_operand(quantize(row), false), w, y, i);
    }
    return y;
}

Matrix Model::forward_block(const Matrix& x, std::size_t layer, Precision precision, KvCache& kv,
                            std::size_t start_pos, AttentionRecord* record) const {
    const ModelConfig& c = config();
    const LayerWeights& lw = weights_.layers.at(layer);
    if (start_pos != kv.length()) {
        fail(ErrorKind::Shape, fmt::format("forward_block: start position {} does not continue cache length {}",
                                           start_pos, kv.length()));
    }
    if (start_pos + x.rows > c.max_seq_len) {
        fail(ErrorKind::ContextOverflow,
             fmt::format("sequence of {} positions exceeds max_seq_len {}", start_pos + x.rows, c.max_seq_len));
    }
    const std::size_t n = x.rows;
    const std::size_t d = c.d_model;
    const std::size_t hd = c.head_dim;

    Matrix h(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto normed = rms_norm(x.row(i), lw.attn_norm);
        std::copy(normed.begin(), normed.end(), h.row(i).begin());
    }
    Matrix q = linear(h, layer, Projection::Q, precision);
    Matrix k = linear(h, layer, Projection::K, precision);
    const Matrix v = linear(h, layer, Projection::V, precision);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t head = 0; head < c.n_heads; ++head) {
            apply_rope(q.row(i).subspan(head * hd, hd), hd, start_pos + i, c.rope_base);
            apply_rope(k.row(i).subspan(head * hd, hd), hd, start_pos + i, c.rope_base);
        }
        kv.write(layer, start_pos + i, k.row(i), v.row(i));
    }

    const float scale = 1.0f / std::sqrt(static_cast<float>(hd));
    Matrix attn(n, d);
    std::vector<float> weights;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pos = start_pos + i;
        for (std::size_t head = 0; head < c.n_heads; ++head) {
            const auto qh = q.row(i).subspan(head * hd, hd);
            weights.assign(pos + 1, 0.0f);
            float max_score = -INFINITY;
            for (std::size_t j = 0; j <= pos; ++j) {
                const auto kh = kv.key(layer, j, head);
                float dot = 0.0f;
                for (std::size_t t = 0; t < hd; ++t) dot += qh[t] * kh[t];
                weights[j] = dot * scale;
                max_score = std::max(max_score, weights[j]);
            }
            float denom = 0.0f;
            for (float& w : weights) {
                w = std::exp(w - max_score);
                denom += w;
            }
            for (float& w : weights) w /= denom;
            if (record != nullptr && pos == record->query_position) {
                std::copy(weights.begin(), weights.end(), record->row(layer, head).begin());
            }
            auto out = attn.row(i).subspan(head * hd, hd);
            for (std::size_t j = 0; j <= pos; ++j) {
                const auto vh = kv.value(layer, j, head);
                for (std::size_t t = 0; t < hd; ++t) out[t] += weights[j] * vh[t];
            }
        }
    }

    const Matrix o = linear(attn, layer, Projection::O, precision);
    Matrix x1 = x;
    for (std::size_t i = 0; i < x1.data.size(); ++i) x1.data[i] += o.data[i];

    for (std::size_t i = 0; i < n; ++i) {
        const auto normed = rms_norm(x1.row(i), lw.mlp_norm);
        std::copy(normed.begin(), normed.end(), h.row(i).begin());
    }
    Matrix gate = linear(h, layer, Projection::Gate, precision);
    const Matrix up = linear(h, layer, Projection::Up, precision);
    for (std::size_t i = 0; i < gate.data.size(); ++i) gate.data[i] = silu(gate.data[i]) * up.data[i];
    const Matrix down = linear(gate, layer, Projection::Down, precision);
    for (std::size_t i = 0; i < x1.data.size(); ++i) x1.data[i] += down.data[i];
    return x1;
}

Matrix Model::forward(KvCache& kv, std::span<const TokenId> tokens, Precision precision,
                      AttentionRecord* record) const {
    if (tokens.empty()) fail(ErrorKind::Shape, "forward: empty token chunk");
    const std::size_t start = kv.length();
    if (start + tokens.size() > config().max_seq_len) {
        fail(ErrorKind::ContextOverflow,
             fmt::format("context overflow at position {}: {} tokens exceed max_seq_len {}", start + tokens.size() - 1,
                         start + tokens.size(), config().max_seq_len));
    }
    Matrix x = embed(tokens);
    for (std::size_t l = 0; l < weights_.layers.size(); ++l) {
        x = forward_block(x, l, precision, kv, start, record);
    }
    kv.commit(start + tokens.size());
    return x;
}

std::vector<float> Model::logits(std::span<const float> hidden) const {
    const auto h = rms_norm(hidden, weights_.final_norm);
    const std::size_t vocab = config().vocab_size;
    std::vector<float> out(vocab, 0.0f);
    for (std::size_t t = 0; t < h.size(); ++t) {
        const float hv = h[t];
        const float* erow = embedding_t_.data.data() + t * vocab;
        for (std::size_t v = 0; v < vocab; ++v) out[v] += hv * erow[v];
    }
    return out;
}

PrefillResult Model::prefill(std::span<const TokenId> tokens, Precision precision, bool record_attention) const {
    if (tokens.empty()) fail(ErrorKind::Shape, "prefill: empty prompt");
    if (tokens.size() > config().max_seq_len) {
        fail(ErrorKind::ContextOverflow, fmt::format("prefill: prompt of {} tokens exceeds max_seq_len {}",
                                                     tokens.size(), config().max_seq_len));
    }
    PrefillResult result;
    result.cache = new_cache();
    AttentionRecord* rec = nullptr;
    if (record_attention) {
        AttentionRecord r;
        r.query_position = tokens.size() - 1;
        r.n_layers = config().n_layers;
        r.n_heads = config().n_heads;
        r.weights.assign(r.n_layers * r.n_heads * r.seq_len(), 0.0f);
        result.attention = std::move(r);
        rec = &*result.attention;
    }
    const Matrix hidden = forward(result.cache, tokens, precision, rec);
    result.logits = logits(hidden.row(hidden.rows - 1));
    return result;
}

std::vector<float> Model::extend(KvCache& kv, std::span<const TokenId> tokens, Precision precision) const {
    const Matrix hidden = forward(kv, tokens, precision);
    return logits(hidden.row(hidden.rows - 1));
}

std::vector<float> Model::decode_step(KvCache& kv, TokenId token, Precision precision) const {
    if (kv.length() >= config().max_seq_len) {
        fail(ErrorKind::ContextOverflow,
             fmt::format("decode_step: cache full at position {} (max_seq_len {})", kv.length(), config().max_seq_len));
    }
    const TokenId one[1] = {token};
    return extend(kv, one, precision);
}

Matrix Model::forward_sequence(std::span<const TokenId> tokens, Precision precision) const {
    KvCache kv = new_cache();
    const Matrix hidden = forward(kv, tokens, precision);
    Matrix out(hidden.rows, config().vocab_size);
    for (std::size_t i = 0; i < hidden.rows; ++i) {
        const auto l = logits(hidden.row(i));
        std::copy(l.begin(), l.end(), out.row(i).begin());
    }
    return out;
}

}  // namespace mixquant
