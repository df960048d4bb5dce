// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
#include "mixquant/model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mixquant/bytes.hpp"
#include "mixquant/error.hpp"
#include "mixquant/rng.hpp"

namespace mixquant {

namespace {

constexpr std::uint32_t kWeightsVersion = 1;
constexpr std::size_t kConfigBlockSize = 7 * 4 + 8 + 8;
constexpr double kInitStd = 0.02;

void fill_normal(Matrix& m, NormalStream& normal) {
    for (float& v : m.data) v = static_cast<float>(kInitStd * normal.next());
}

void put_vec(ByteWriter& w, std::span<const float> v) {
    for (float x : v) w.put_f32(x);
}

void get_vec(ByteReader& r, std::span<float> v) {
    for (float& x : v) x = r.f32();
}

}  // namespace

std::string_view to_string(Precision p) {
    return p == Precision::High ? "high" : "nvfp4";
}

void ModelConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) fail(ErrorKind::Config, "model config: " + what);
    };
    require(vocab_size > 0, "vocab_size must be positive");
    require(n_layers > 0, "n_layers must be positive");
    require(n_heads > 0, "n_heads must be positive");
    require(max_seq_len > 0, "max_seq_len must be positive");
    require(d_model > 0 && d_model % 16 == 0,
            fmt::format("d_model={} must be a positive multiple of 16", d_model));
    require(head_dim > 0 && head_dim % 16 == 0,
            fmt::format("head_dim={} must be a positive multiple of 16", head_dim));
    require(ffn_hidden > 0 && ffn_hidden % 16 == 0,
            fmt::format("ffn_hidden={} must be a positive multiple of 16", ffn_hidden));
    require(static_cast<std::uint64_t>(n_heads) * head_dim == d_model,
            "n_heads * head_dim must equal d_model");
    require(std::isfinite(rope_base) && rope_base > 1.0, "rope_base must be finite and > 1");
}

std::vector<std::uint8_t> ModelConfig::serialize() const {
    ByteWriter w;
    w.put_u32(vocab_size);
    w.put_u32(d_model);
    w.put_u32(n_layers);
    w.put_u32(n_heads);
    w.put_u32(head_dim);
    w.put_u32(ffn_hidden);
    w.put_u32(max_seq_len);
    w.put_f64(rope_base);
    w.put_u64(seed);
    return w.take();
}

ModelConfig ModelConfig::deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    ModelConfig c;
    c.vocab_size = r.u32();
    c.d_model = r.u32();
    c.n_layers = r.u32();
    c.n_heads = r.u32();
    c.head_dim = r.u32();
    c.ffn_hidden = r.u32();
    c.max_seq_len = r.u32();
    c.rope_base = r.f64();
    c.seed = r.u64();
    if (r.remaining() != 0) fail(ErrorKind::Format, "model config block has trailing bytes");
    return c;
}

std::uint64_t ModelConfig::digest() const {
    return fnv1a64(serialize());
}

ModelConfig make_config(std::uint32_t vocab_size, std::uint32_t d_model, std::uint32_t n_layers,
                        std::uint32_t n_heads, std::uint32_t max_seq_len, std::uint64_t seed,
                        std::uint32_t ffn_hidden) {
    ModelConfig c;
    c.vocab_size = vocab_size;
    c.d_model = d_model;
    c.n_layers = n_layers;
    c.n_heads = n_heads;
    c.head_dim = n_heads == 0 ? 0 : d_model / n_heads;
    c.ffn_hidden = ffn_hidden != 0 ? ffn_hidden : (4 * d_model + 15) / 16 * 16;
    c.max_seq_len = max_seq_len;
    c.seed = seed;
    return c;
}

ModelWeights init_weights(const ModelConfig& cfg) {
    cfg.validate();
    NormalStream normal(cfg.seed);
    ModelWeights w;
    w.config = cfg;
    const std::size_t d = cfg.d_model;
    const std::size_t f = cfg.ffn_hidden;
    w.embedding = Matrix(cfg.vocab_size, d);
    fill_normal(w.embedding, normal);
    w.layers.resize(cfg.n_layers);
    for (LayerWeights& l : w.layers) {
        l.attn_norm.assign(d, 1.0f);
        l.mlp_norm.assign(d, 1.0f);
        for (Matrix* m : {&l.wq, &l.wk, &l.wv, &l.wo}) {
            *m = Matrix(d, d);
            fill_normal(*m, normal);
        }
        l.w_gate = Matrix(f, d);
        fill_normal(l.w_gate, normal);
        l.w_up = Matrix(f, d);
        fill_normal(l.w_up, normal);
        l.w_down = Matrix(d, f);
        fill_normal(l.w_down, normal);
    }
    w.final_norm.assign(d, 1.0f);
    return w;
}

std::vector<std::uint8_t> serialize_weights(const ModelWeights& m) {
    ByteWriter w;
    w.put_magic("MXQW");
    w.put_u32(kWeightsVersion);
    w.put_u64(m.config.digest());
    const auto block = m.config.serialize();
    w.put_u32(static_cast<std::uint32_t>(block.size()));
    w.put_bytes(block);
    put_vec(w, m.embedding.data);
    for (const LayerWeights& l : m.layers) {
        put_vec(w, l.attn_norm);
        put_vec(w, l.wq.data);
        put_vec(w, l.wk.data);
        put_vec(w, l.wv.data);
        put_vec(w, l.wo.data);
        put_vec(w, l.mlp_norm);
        put_vec(w, l.w_gate.data);
        put_vec(w, l.w_up.data);
        put_vec(w, l.w_down.data);
    }
    put_vec(w, m.final_norm);
    return w.take();
}

ModelWeights deserialize_weights(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic("MXQW");
    if (const auto version = r.u32(); version != kWeightsVersion) {
        fail(ErrorKind::Format, fmt::format("MXQW: unsupported version {}", version));
    }
    const std::uint64_t digest = r.u64();
    const std::uint32_t block_size = r.u32();
    if (block_size != kConfigBlockSize) {
        fail(ErrorKind::Format, fmt::format("MXQW: config block size {} != {}", block_size, kConfigBlockSize));
    }
    const auto block = r.take(block_size);
    if (fnv1a64(block) != digest) {
        fail(ErrorKind::Integrity, "MXQW: config digest mismatch");
    }
    ModelWeights m;
    m.config = ModelConfig::deserialize(block);
    m.config.validate();
    const ModelConfig& c = m.config;
    const std::size_t d = c.d_model;
    const std::size_t f = c.ffn_hidden;
    const std::size_t expected =
        4 * (static_cast<std::size_t>(c.vocab_size) * d + d +
             static_cast<std::size_t>(c.n_layers) * (2 * d + 4 * d * d + 3 * d * f));
    if (r.remaining() != expected) {
        fail(ErrorKind::Format, fmt::format("MXQW: tensor payload is {} bytes, expected {}",
                                            r.remaining(), expected));
    }
    m.embedding = Matrix(c.vocab_size, d);
    get_vec(r, m.embedding.data);
    m.layers.resize(c.n_layers);
    for (LayerWeights& l : m.layers) {
        l.attn_norm.resize(d);
        get_vec(r, l.attn_norm);
        for (Matrix* mat : {&l.wq, &l.wk, &l.wv, &l.wo}) {
            *mat = Matrix(d, d);
            get_vec(r, mat->data);
        }
        l.mlp_norm.resize(d);
        get_vec(r, l.mlp_norm);
        l.w_gate = Matrix(f, d);
        get_vec(r, l.w_gate.data);
        l.w_up = Matrix(f, d);
        get_vec(r, l.w_up.data);
        l.w_down = Matrix(d, f);
        get_vec(r, l.w_down.data);
    }
    m.final_norm.resize(d);
    get_vec(r, m.final_norm);
    return m;
}

void save_weights(const std::string& path, const ModelWeights& w) {
    write_file(path, serialize_weights(w));
}

ModelWeights load_weights(const std::string& path) {
    return deserialize_weights(read_file(path));
}

}  // namespace mixquant
