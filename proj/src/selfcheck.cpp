// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
#include "mixquant/selfcheck.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "mixquant/analysis.hpp"
#include "mixquant/error.hpp"
#include "mixquant/qgemm.hpp"
#include "mixquant/rng.hpp"

namespace mixquant {

namespace {

// E2M1 magnitudes by code (bits 2..0).
constexpr double kFp4Magnitudes[8] = {0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0};

double e4m3_magnitude(unsigned code) {
    const unsigned e = (code >> 3) & 0xF;
    const unsigned m = code & 0x7;
    if (e == 0) return std::ldexp(static_cast<double>(m), -9);
    return std::ldexp(1.0 + static_cast<double>(m) / 8.0, static_cast<int>(e) - 7);
}

// Nearest of `count` magnitudes (ascending by code), ties to even code.
unsigned nearest_code(double mag, unsigned count, double (*value)(unsigned)) {
    unsigned best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (unsigned c = 0; c < count; ++c) {
        const double err = std::fabs(value(c) - mag);
        if (err < best_err || (err == best_err && (c & 1u) == 0 && (best & 1u) != 0)) {
            best = c;
            best_err = err;
        }
    }
    return best;
}

double fp4_magnitude(unsigned code) { return kFp4Magnitudes[code]; }

class Recorder {
  public:
    explicit Recorder(std::string name) { result_.name = std::move(name); }

    template <typename... Args>
    void expect(bool ok, fmt::format_string<Args...> fmt_str, Args&&... args) {
        ++result_.cases;
        if (!ok) {
            if (result_.failures == 0) result_.detail = fmt::format(fmt_str, std::forward<Args>(args)...);
            ++result_.failures;
        }
    }

    void out_of_domain(std::string note) {
        ++result_.cases;
        if (result_.out_of_domain++ == 0) result_.note = std::move(note);
    }

    CheckResult done() { return std::move(result_); }

  private:
    CheckResult result_;
};

// Random matrix whose rows mix magnitudes across many binades, with
// occasional zero blocks and exact grid values.
Matrix random_blocks(SplitMix64& rng, std::size_t rows, std::size_t blocks, int exp_lo, int exp_hi) {
    Matrix m(rows, blocks * kNvfp4GroupSize);
    NormalStream normal(rng.next());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t b = 0; b < blocks; ++b) {
            const std::uint64_t kind = rng.next() % 8;
            const int e = exp_lo + static_cast<int>(rng.next() % static_cast<std::uint64_t>(exp_hi - exp_lo + 1));
            for (std::size_t t = 0; t < kNvfp4GroupSize; ++t) {
                float v = 0.0f;
                if (kind == 0) {
                    v = 0.0f;
                } else if (kind == 1) {
                    const double sign = (rng.next() & 1) ? -1.0 : 1.0;
                    v = static_cast<float>(std::ldexp(sign * kFp4Magnitudes[rng.next() % 8], e));
                } else {
                    v = static_cast<float>(std::ldexp(normal.next(), e));
                }
                m(r, b * kNvfp4GroupSize + t) = v;
            }
        }
    }
    return m;
}

template <typename Body>
std::size_t for_random_matrices(std::size_t min_blocks, std::uint64_t seed, int exp_lo, int exp_hi, Body body) {
    SplitMix64 rng(seed);
    std::size_t blocks = 0;
    while (blocks < min_blocks) {
        const std::size_t rows = 1 + rng.next() % 4;
        const std::size_t bpr = 1 + rng.next() % 4;
        body(random_blocks(rng, rows, bpr, exp_lo, exp_hi));
        blocks += rows * bpr;
    }
    return blocks;
}

float random_probe(SplitMix64& rng) {
    switch (rng.next() % 4) {
        case 0: {
            // Arbitrary finite bit pattern.
            while (true) {
                const auto bits = static_cast<std::uint32_t>(rng.next());
                const float f = std::bit_cast<float>(bits);
                if (std::isfinite(f)) return f;
            }
        }
        case 1: {
            // Grid points and midpoints, nudged by a few ulps.
            const double a = kFp4Magnitudes[rng.next() % 8];
            const double b = kFp4Magnitudes[rng.next() % 8];
            float f = static_cast<float>((rng.next() & 1) ? a : (a + b) / 2);
            const int nudge = static_cast<int>(rng.next() % 5) - 2;
            for (int i = 0; i < std::abs(nudge); ++i) {
                f = std::nextafter(f, nudge > 0 ? 1e9f : -1e9f);
            }
            return (rng.next() & 1) ? -f : f;
        }
        default: return static_cast<float>((rng.uniform() * 2.0 - 1.0) * 8.0);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Oracles

Fp4Code oracle_fp4(float x) {
    if (std::isnan(x)) fail(ErrorKind::InvalidValue, "oracle_fp4: NaN");
    // Clip first: beyond 6 the distances are no longer exact in binary64.
    const unsigned mag = nearest_code(std::min(std::fabs(static_cast<double>(x)), 6.0), 8, fp4_magnitude);
    return Fp4Code{static_cast<std::uint8_t>((std::signbit(x) ? 0x8u : 0u) | mag)};
}

Fp8E4M3Code oracle_e4m3(double x) {
    if (std::isnan(x)) fail(ErrorKind::InvalidValue, "oracle_e4m3: NaN");
    const unsigned mag = nearest_code(std::min(std::fabs(x), 448.0), 0x7F, e4m3_magnitude);
    return Fp8E4M3Code{static_cast<std::uint8_t>((std::signbit(x) ? 0x80u : 0u) | mag)};
}

double oracle_fp4_half_gap(double s) {
    const double a = std::fabs(s);
    for (unsigned c = 1; c < 8; ++c) {
        if (a <= kFp4Magnitudes[c]) return (kFp4Magnitudes[c] - kFp4Magnitudes[c - 1]) / 2;
    }
    return std::numeric_limits<double>::infinity();
}

Matrix mirror_gemm(const QuantizedTensor& a, const QuantizedTensor& w) {
    if (a.cols != w.cols || a.group_size != w.group_size) fail(ErrorKind::Shape, "mirror_gemm: shape mismatch");
    const std::size_t g = a.group_size;
    Matrix y(a.rows, w.rows);
    const float alpha = a.tensor_scale * w.tensor_scale;
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < w.rows; ++j) {
            float acc = 0.0f;
            for (std::size_t b = 0; b < a.blocks_per_row(); ++b) {
                float partial = 0.0f;
                for (std::size_t t = b * g; t < (b + 1) * g; ++t) {
                    partial += e2m1_decode(a.codes[i * a.cols + t]) * e2m1_decode(w.codes[j * w.cols + t]);
                }
                const float sa = e4m3_decode(a.block_scales[i * a.blocks_per_row() + b]);
                const float sw = e4m3_decode(w.block_scales[j * w.blocks_per_row() + b]);
                acc += (sa * sw) * partial;
            }
            y(i, j) = alpha * acc;
        }
    }
    return y;
}

double oracle_topk_fraction(std::span<const float> row, std::size_t k) {
    std::vector<float> sorted(row.begin(), row.end());
    std::sort(sorted.begin(), sorted.end());
    double top = 0.0;
    for (std::size_t i = 0; i < k; ++i) top += sorted[sorted.size() - 1 - i];
    double total = 0.0;
    for (float v : row) total += v;
    return top / total;
}

std::vector<float> oracle_softmax(std::span<const float> logits) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (float l : logits) max_logit = std::max(max_logit, static_cast<double>(l));
    std::vector<double> e(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        e[i] = std::exp(static_cast<double>(logits[i]) - max_logit);
        sum += e[i];
    }
    std::vector<float> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<float>(e[i] / sum);
    return out;
}

// ---------------------------------------------------------------------------
// Format checks

CheckResult check_format_tables() {
    Recorder rec("format-tables");
    std::multiset<std::string> fp4_values;
    std::istringstream fp4(fp4_table());
    for (std::string line; std::getline(fp4, line);) fp4_values.insert(line.substr(line.find(',') + 1));
    const std::multiset<std::string> expected = {"0",  "0.5",  "1",  "1.5",  "2",  "3",  "4",  "6",
                                                 "-0", "-0.5", "-1", "-1.5", "-2", "-3", "-4", "-6"};
    rec.expect(fp4_values == expected, "FP4 table values differ from the E2M1 grid");

    std::istringstream fp8(fp8_table());
    std::size_t lines = 0, nan_pos = 0, nan_neg = 0;
    double max_finite = 0.0;
    for (std::string line; std::getline(fp8, line); ++lines) {
        const auto code = std::stoul(line.substr(0, line.find(',')), nullptr, 16);
        const std::string value = line.substr(line.find(',') + 1);
        if (value == "nan") {
            ++(code & 0x80 ? nan_neg : nan_pos);
            continue;
        }
        max_finite = std::max(max_finite, std::stod(value));
        rec.expect(std::stod(value) == ((code & 0x80) ? -1.0 : 1.0) * e4m3_magnitude(code & 0x7F),
                   "FP8 code 0x{:02x} prints {}", code, value);
    }
    rec.expect(lines == 256, "FP8 table has {} lines", lines);
    rec.expect(max_finite == 448.0, "FP8 max finite is {}", max_finite);
    rec.expect(nan_pos == 1 && nan_neg == 1, "FP8 NaN patterns: {} positive, {} negative", nan_pos, nan_neg);
    return rec.done();
}

CheckResult check_fp4_projection(std::size_t samples, std::uint64_t seed) {
    Recorder rec("fp4-projection");
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
        const float x = random_probe(rng);
        const Fp4Code got = pi_fp4(x);
        const Fp4Code want = oracle_fp4(x);
        rec.expect(got == want, "pi_fp4({}) = 0x{:x}, oracle 0x{:x}", x, got.bits, want.bits);
    }
    return rec.done();
}

CheckResult check_e4m3_projection(std::size_t samples, std::uint64_t seed) {
    Recorder rec("e4m3-projection");
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
        double x = 0.0;
        if (rng.next() % 2 == 0) {
            // Exact grid point or midpoint between neighbours.
            const unsigned c = static_cast<unsigned>(rng.next() % 0x7E);
            x = (rng.next() & 1) ? e4m3_magnitude(c) : (e4m3_magnitude(c) + e4m3_magnitude(c + 1)) / 2;
        } else {
            x = std::ldexp(rng.uniform(), static_cast<int>(rng.next() % 24) - 14);
        }
        if (rng.next() & 1) x = -x;
        const Fp8E4M3Code got = pi_e4m3_wide(x);
        const Fp8E4M3Code want = oracle_e4m3(x);
        rec.expect(got == want, "pi_e4m3({}) = 0x{:02x}, oracle 0x{:02x}", x, got.bits, want.bits);
        const auto xf = static_cast<float>(x);
        rec.expect(pi_e4m3(xf) == oracle_e4m3(xf), "binary32 pi_e4m3({}) disagrees with oracle", xf);
    }
    return rec.done();
}

// ---------------------------------------------------------------------------
// Quantizer properties

CheckResult check_idempotence(std::size_t min_blocks, std::uint64_t seed) {
    Recorder rec("quantizer-idempotence");
    std::size_t blocks = 0;
    for (TensorScalePolicy policy : {TensorScalePolicy::AmaxCalibrated, TensorScalePolicy::Unit}) {
        QuantConfig cfg;
        cfg.tensor_scale_policy = policy;
        auto check = [&](const Matrix& x) {
            const QuantizedTensor q1 = quantize(x, cfg);
            const Matrix x1 = dequantize(q1);
            const QuantizedTensor q2 = quantize(x1, cfg);
            const bool same = q1.codes == q2.codes && q1.block_scales == q2.block_scales &&
                              q1.tensor_scale == q2.tensor_scale && dequantize(q2) == x1;
            const bool subnormal = std::any_of(q1.block_scales.begin(), q1.block_scales.end(),
                                               [](Fp8E4M3Code c) { return c.bits != 0 && (c.bits & 0x78) == 0; });
            if (subnormal && !same) {
                rec.out_of_domain(
                    fmt::format("{}x{} tensor with a subnormal block scale moved on re-quantization", x.rows, x.cols));
                return;
            }
            rec.expect(same, "re-quantizing a {}x{} tensor changed it", x.rows, x.cols);
        };
        // Unit keeps block scales inside E4M3 range only for moderate inputs.
        const int hi = policy == TensorScalePolicy::Unit ? 6 : 20;
        const int lo = policy == TensorScalePolicy::Unit ? -6 : -20;
        blocks += for_random_matrices(min_blocks / 2 + 1, seed + static_cast<std::uint64_t>(policy), lo, hi, check);
    }
    CheckResult result = rec.done();
    result.blocks = blocks;
    return result;
}

CheckResult check_pow2_equivariance(std::size_t min_blocks, std::uint64_t seed) {
    Recorder rec("quantizer-pow2-equivariance");
    SplitMix64 krng(seed ^ 0x5bd1e995u);
    const std::size_t blocks = for_random_matrices(min_blocks, seed, -8, 8, [&](const Matrix& x) {
        const int k = static_cast<int>(krng.next() % 17) - 8;
        Matrix xs = x;
        for (float& v : xs.data) v = std::ldexp(v, k);
        const Matrix base = dequantize(quantize(x));
        const Matrix scaled = dequantize(quantize(xs));
        Matrix expect = base;
        for (float& v : expect.data) v = std::ldexp(v, k);
        rec.expect(scaled == expect, "k={} breaks equivariance on a {}x{} tensor", k, x.rows, x.cols);
    });
    CheckResult result = rec.done();
    result.blocks = blocks;
    return result;
}

CheckResult check_zero_blocks(std::size_t min_blocks, std::uint64_t seed) {
    Recorder rec("quantizer-zero-blocks");
    const std::size_t blocks = for_random_matrices(min_blocks, seed, -10, 10, [&](const Matrix& x) {
        const QuantizedTensor q = quantize(x);
        const Matrix back = dequantize(q);
        for (std::size_t r = 0; r < x.rows; ++r) {
            for (std::size_t b = 0; b < q.blocks_per_row(); ++b) {
                const auto block = x.row(r).subspan(b * q.group_size, q.group_size);
                if (!std::all_of(block.begin(), block.end(), [](float v) { return v == 0.0f; })) continue;
                bool ok = q.block_scales[r * q.blocks_per_row() + b] == kE4m3PosZero;
                for (std::size_t t = 0; t < q.group_size; ++t) {
                    ok = ok && q.codes[r * q.cols + b * q.group_size + t] == Fp4Code{0};
                    ok = ok && back(r, b * q.group_size + t) == 0.0f;
                }
                rec.expect(ok, "zero block ({}, {}) not stored as +0 scale and +0 codes", r, b);
            }
        }
        rec.expect(q.tensor_scale > 0.0f && std::isfinite(q.tensor_scale), "tensor scale {} invalid",
                   q.tensor_scale);
    });
    CheckResult result = rec.done();
    result.blocks = blocks;
    return result;
}

CheckResult check_no_clip_bound(std::size_t min_blocks, std::uint64_t seed) {
    Recorder rec("quantizer-no-clip-bound");
    QuantConfig cfg;
    cfg.exact_scales = true;
    const std::size_t blocks = for_random_matrices(min_blocks, seed, -12, 12, [&](const Matrix& x) {
        const QuantizedTensor q = quantize(x, cfg);
        const Matrix back = dequantize(q);
        const double alpha = q.tensor_scale;
        for (std::size_t r = 0; r < x.rows; ++r) {
            for (std::size_t b = 0; b < q.blocks_per_row(); ++b) {
                const double sigma = q.block_scale_value(r, b);
                if (sigma == 0.0) continue;
                for (std::size_t t = 0; t < q.group_size; ++t) {
                    const std::size_t c = b * q.group_size + t;
                    const double s = scaled_value(x(r, c), q.tensor_scale, sigma);
                    rec.expect(std::fabs(s) <= 6.0, "scaled value {} outside [-6, 6]", s);
                    const double err = std::fabs(static_cast<double>(x(r, c)) - static_cast<double>(back(r, c)));
                    // Allowance for the two binary32 roundings (scaled value, output).
                    const double slack = 0x1.0p-23 * std::max(std::fabs(double(x(r, c))), std::fabs(double(back(r, c))));
                    const double bound = alpha * sigma * oracle_fp4_half_gap(s) + slack;
                    rec.expect(err <= bound, "|x - x^| = {} exceeds half-gap bound {} at scaled value {}", err,
                               bound, s);
                }
            }
        }
    });
    CheckResult result = rec.done();
    result.blocks = blocks;
    return result;
}

CheckResult check_worked_example() {
    Recorder rec("worked-example");
    Matrix x(1, 16);
    std::fill(x.data.begin(), x.data.end(), 3.0f);
    QuantConfig cfg;
    cfg.tensor_scale_policy = TensorScalePolicy::Unit;
    const QuantizedTensor q = quantize(x, cfg);
    rec.expect(q.tensor_scale == 1.0f, "alpha = {}", q.tensor_scale);
    rec.expect(e4m3_decode(q.block_scales[0]) == 0.5f, "sigma decodes to {}", e4m3_decode(q.block_scales[0]));
    for (Fp4Code c : q.codes) rec.expect(e2m1_decode(c) == 6.0f, "code decodes to {}", e2m1_decode(c));
    for (float v : dequantize(q).data) rec.expect(v == 3.0f, "reconstruction {}", v);
    return rec.done();
}

// ---------------------------------------------------------------------------
// GEMM

CheckResult check_qgemm(std::size_t instances, std::uint64_t seed, std::size_t max_mn, std::size_t max_k,
                        double rel_tol) {
    Recorder rec("qgemm-oracles");
    SplitMix64 rng(seed);
    const std::size_t max_blocks = std::max<std::size_t>(1, max_k / kNvfp4GroupSize);
    for (std::size_t i = 0; i < instances; ++i) {
        const std::size_t m = 1 + rng.next() % max_mn;
        const std::size_t n = 1 + rng.next() % max_mn;
        const std::size_t blocks = 1 + rng.next() % max_blocks;
        const QuantizedTensor a = quantize(random_blocks(rng, m, blocks, -6, 6));
        const QuantizedTensor w = quantize(random_blocks(rng, n, blocks, -6, 6));
        const Matrix y = qgemm(a, w);
        const Matrix mirror = mirror_gemm(a, w);
        rec.expect(y == mirror, "instance {} ({}x{}x{}) differs from the mirror", i, m, n, blocks * 16);

        const Matrix da = dequantize(a);
        const Matrix dw = dequantize(w);
        const std::vector<double> ref = reference_gemm(da, dw);
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                double magnitude = 0.0;
                for (std::size_t t = 0; t < da.cols; ++t) {
                    magnitude += std::fabs(static_cast<double>(da(r, t)) * static_cast<double>(dw(c, t)));
                }
                const double err = std::fabs(static_cast<double>(y(r, c)) - ref[r * n + c]);
                rec.expect(err <= rel_tol * magnitude, "instance {} ({}, {}): |y - ref| = {} vs magnitude {}", i,
                           r, c, err, magnitude);
            }
        }
    }
    return rec.done();
}

// ---------------------------------------------------------------------------
// Metrics

CheckResult check_topk(std::size_t matrices, std::uint64_t seed, double tol) {
    Recorder rec("topk-mass");
    SplitMix64 rng(seed);
    NormalStream normal(seed ^ 0x9e3779b97f4a7c15ull);
    for (std::size_t i = 0; i < matrices; ++i) {
        AttentionRecord attn;
        attn.query_position = rng.next() % 64;
        attn.n_layers = 1 + rng.next() % 3;
        attn.n_heads = 1 + rng.next() % 4;
        const std::size_t n = attn.seq_len();
        const double spread = 0.5 + 4.0 * rng.uniform();
        attn.weights.resize(attn.n_layers * attn.n_heads * n);
        std::vector<float> logits(n);
        for (std::size_t l = 0; l < attn.n_layers; ++l) {
            for (std::size_t h = 0; h < attn.n_heads; ++h) {
                for (float& v : logits) v = static_cast<float>(spread * normal.next());
                const auto p = oracle_softmax(logits);
                std::copy(p.begin(), p.end(), attn.row(l, h).begin());
            }
        }
        std::vector<std::size_t> ks = {1, 1 + rng.next() % n, n};
        const TopKMassReport r = topk_mass(attn, ks);
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            double mean = 0.0;
            for (std::size_t l = 0; l < attn.n_layers; ++l) {
                for (std::size_t h = 0; h < attn.n_heads; ++h) {
                    const double want = oracle_topk_fraction(attn.row(l, h), ks[ki]);
                    const double got = r.fractions[ki][l * attn.n_heads + h];
                    mean += want;
                    rec.expect(std::fabs(got - want) <= tol, "matrix {} k={} row ({}, {}): {} vs {}", i, ks[ki], l,
                               h, got, want);
                }
            }
            mean /= static_cast<double>(attn.n_layers * attn.n_heads);
            rec.expect(std::fabs(r.mean[ki] - mean) <= tol, "matrix {} k={} mean {} vs {}", i, ks[ki], r.mean[ki],
                       mean);
        }
        rec.expect(std::fabs(r.mean.back() - 1.0) <= 1e-6, "matrix {} full mass {}", i, r.mean.back());
    }

    // Closed-form cases.
    AttentionRecord uniform;
    uniform.query_position = 7;
    uniform.n_layers = 1;
    uniform.n_heads = 1;
    uniform.weights.assign(8, 0.125f);
    for (std::size_t k = 1; k <= 8; ++k) {
        const double got = topk_mass(uniform, k).mean[0];
        rec.expect(got == static_cast<double>(k) / 8.0, "uniform k={} gives {}", k, got);
    }
    AttentionRecord onehot = uniform;
    std::fill(onehot.weights.begin(), onehot.weights.end(), 0.0f);
    onehot.weights[3] = 1.0f;
    rec.expect(topk_mass(onehot, 1).mean[0] == 1.0, "one-hot k=1 gives {}", topk_mass(onehot, 1).mean[0]);
    return rec.done();
}

CheckResult check_kl_self(std::size_t samples, std::uint64_t seed, double tol) {
    Recorder rec("kl-self");
    SplitMix64 rng(seed);
    NormalStream normal(seed + 1);
    for (std::size_t i = 0; i < samples; ++i) {
        const std::size_t n = 2 + rng.next() % 300;
        std::vector<float> logits(n);
        for (float& v : logits) v = static_cast<float>(3.0 * normal.next());
        SamplerSpec greedy;
        const TokenDistribution d = decode_distribution(logits, greedy);
        const double kl = kl_divergence(d.log_probs, d.log_probs);
        rec.expect(std::fabs(kl) <= tol, "KL(p||p) = {} for sample {}", kl, i);
    }
    return rec.done();
}

// ---------------------------------------------------------------------------

bool run_selftest(std::ostream& out) {
    const std::vector<CheckResult> results = {
        check_format_tables(),
        check_fp4_projection(100000, 1),
        check_e4m3_projection(100000, 2),
        check_idempotence(10000, 3),
        check_pow2_equivariance(10000, 4),
        check_zero_blocks(10000, 5),
        check_no_clip_bound(10000, 6),
        check_worked_example(),
        check_qgemm(100, 7, 32, 256, 1e-5),
        check_topk(200, 8, 1e-6),
        check_kl_self(200, 9, 1e-9),
    };
    bool ok = true;
    for (const CheckResult& r : results) {
        ok = ok && r.passed();
        out << fmt::format("suite {} {} cases={} failures={}{}{}\n", r.name, r.passed() ? "pass" : "FAIL", r.cases,
                           r.failures, r.detail.empty() ? "" : " first=\"" + r.detail + "\"",
                           r.out_of_domain == 0 ? "" : fmt::format(" out_of_domain={}", r.out_of_domain));
    }
    return ok;
}

}  // namespace mixquant
