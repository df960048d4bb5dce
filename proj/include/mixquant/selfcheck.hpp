// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
//
// Independent oracles and the randomized property checks built on them.
// The oracles deliberately avoid the production code paths: grid
// projection is a brute-force scan, the GEMM mirror is a plain triple loop,
// top-k mass is sort-and-sum.
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mixquant/formats.hpp"
#include "mixquant/quantizer.hpp"
#include "mixquant/tensor.hpp"

namespace mixquant {

// ---------------------------------------------------------------------------
// Oracles

/// Nearest of the 16 E2M1 codes by exhaustive scan; ties to the even
/// mantissa, sign taken from x.
Fp4Code oracle_fp4(float x);

/// Nearest finite E4M3 code by scan over the 127 non-negative finite codes,
/// ties to the even mantissa, magnitudes above 448 saturate.
Fp8E4M3Code oracle_e4m3(double x);

/// Half the spacing of the E2M1 grid interval containing |s| (|s| <= 6).
double oracle_fp4_half_gap(double s);

/// Straight triple loop over decoded codes and scales in the kernel's
/// documented accumulation order (no re-layout, no zero skipping).
Matrix mirror_gemm(const QuantizedTensor& a, const QuantizedTensor& w);

/// Sum of the k largest entries over the row total, by full sort.
double oracle_topk_fraction(std::span<const float> row, std::size_t k);

/// Row softmax in double, rounded to binary32.
std::vector<float> oracle_softmax(std::span<const float> logits);

// ---------------------------------------------------------------------------
// Checks

struct CheckResult {
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::size_t blocks = 0;  // random 16-element blocks drawn, where applicable
    std::string detail;  // first failure, if any
    /// Violations on inputs where the property is known not to hold; they
    /// are reported but do not count as failures.
    std::size_t out_of_domain = 0;
    std::string note;

    bool passed() const { return failures == 0 && cases > 0; }
};

CheckResult check_format_tables();
CheckResult check_fp4_projection(std::size_t samples, std::uint64_t seed);
CheckResult check_e4m3_projection(std::size_t samples, std::uint64_t seed);

/// Violations on tensors holding a subnormal E4M3 block scale are counted
/// in out_of_domain: there the scale grid is too coarse for a fixed point.
CheckResult check_idempotence(std::size_t min_blocks, std::uint64_t seed);
CheckResult check_pow2_equivariance(std::size_t min_blocks, std::uint64_t seed);
CheckResult check_zero_blocks(std::size_t min_blocks, std::uint64_t seed);
CheckResult check_no_clip_bound(std::size_t min_blocks, std::uint64_t seed);
CheckResult check_worked_example();

/// Bit-exact against mirror_gemm and within `rel_tol` of reference_gemm,
/// relative to sum |a_t * w_t| for each output.
CheckResult check_qgemm(std::size_t instances, std::uint64_t seed, std::size_t max_mn, std::size_t max_k,
                        double rel_tol);

CheckResult check_topk(std::size_t matrices, std::uint64_t seed, double tol);
CheckResult check_kl_self(std::size_t samples, std::uint64_t seed, double tol);

/// Reduced-size run of every suite, one `suite <name> pass|FAIL ...` line
/// each. Returns true when all pass.
bool run_selftest(std::ostream& out);

}  // namespace mixquant
