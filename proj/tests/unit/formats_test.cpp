// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "mixquant/error.hpp"
#include "mixquant/formats.hpp"
#include "mixquant/rng.hpp"
#include "mixquant/selfcheck.hpp"

namespace mixquant {
namespace {

Fp4Code fp4(unsigned s, unsigned e, unsigned m) { return Fp4Code{static_cast<std::uint8_t>(s << 3 | e << 1 | m)}; }
Fp8E4M3Code fp8(unsigned s, unsigned e, unsigned m) {
    return Fp8E4M3Code{static_cast<std::uint8_t>(s << 7 | e << 3 | m)};
}

TEST(E2m1Decode, EnumeratedValues) {
    EXPECT_EQ(e2m1_decode(fp4(0, 0, 1)), 0.5f);
    EXPECT_EQ(e2m1_decode(fp4(0, 3, 1)), 6.0f);
    const float neg_zero = e2m1_decode(fp4(1, 0, 0));
    EXPECT_EQ(neg_zero, 0.0f);
    EXPECT_TRUE(std::signbit(neg_zero));
}

TEST(E2m1Decode, GridIsExactlyTheSixteenValues) {
    std::multiset<float> got;
    for (unsigned c = 0; c < 16; ++c) got.insert(e2m1_decode(Fp4Code{static_cast<std::uint8_t>(c)}));
    const std::multiset<float> want = {0, 0.5, 1, 1.5, 2, 3, 4, 6, -0.0f, -0.5, -1, -1.5, -2, -3, -4, -6};
    EXPECT_EQ(got, want);
}

TEST(PiFp4, WorkedExamples) {
    EXPECT_EQ(e2m1_decode(pi_fp4(2.4f)), 2.0f);
    EXPECT_EQ(e2m1_decode(pi_fp4(2.5f)), 2.0f);
    EXPECT_EQ(e2m1_decode(pi_fp4(7.0f)), 6.0f);
    EXPECT_EQ(e2m1_decode(pi_fp4(0.75f)), 1.0f);
}

TEST(PiFp4, TiesGoToEvenMantissa) {
    EXPECT_EQ(e2m1_decode(pi_fp4(0.25f)), 0.0f);
    EXPECT_EQ(e2m1_decode(pi_fp4(1.25f)), 1.0f);
    EXPECT_EQ(e2m1_decode(pi_fp4(1.75f)), 2.0f);
    EXPECT_EQ(e2m1_decode(pi_fp4(3.5f)), 4.0f);
    EXPECT_EQ(e2m1_decode(pi_fp4(5.0f)), 4.0f);
    EXPECT_EQ(e2m1_decode(pi_fp4(-5.0f)), -4.0f);
}

TEST(PiFp4, SignedZeroAndClipping) {
    EXPECT_EQ(pi_fp4(-0.0f), fp4(1, 0, 0));
    EXPECT_EQ(pi_fp4(-0.1f), fp4(1, 0, 0));
    EXPECT_EQ(pi_fp4(0.1f), fp4(0, 0, 0));
    EXPECT_EQ(e2m1_decode(pi_fp4(-1e30f)), -6.0f);
    EXPECT_EQ(e2m1_decode(pi_fp4(std::numeric_limits<float>::infinity())), 6.0f);
}

TEST(PiFp4, NanIsAnError) {
    try {
        pi_fp4(std::numeric_limits<float>::quiet_NaN());
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidValue);
    }
}

TEST(PiFp4, RoundTripsEveryCode) {
    for (unsigned c = 0; c < 16; ++c) {
        const Fp4Code code{static_cast<std::uint8_t>(c)};
        EXPECT_EQ(pi_fp4(e2m1_decode(code)), code) << c;
    }
}

TEST(PiFp4, MonotoneAndSignSymmetric) {
    SplitMix64 rng(42);
    for (int i = 0; i < 1'000'000; ++i) {
        float x = static_cast<float>((rng.uniform() * 2 - 1) * 8);
        float y = static_cast<float>((rng.uniform() * 2 - 1) * 8);
        if (y < x) std::swap(x, y);
        ASSERT_LE(e2m1_decode(pi_fp4(x)), e2m1_decode(pi_fp4(y))) << x << " " << y;
        ASSERT_EQ(e2m1_decode(pi_fp4(-x)), -e2m1_decode(pi_fp4(x))) << x;
    }
}

TEST(PiFp4, NearestPointAndHalfGap) {
    SplitMix64 rng(7);
    for (int i = 0; i < 200'000; ++i) {
        const float x = static_cast<float>((rng.uniform() * 2 - 1) * 6);
        const double q = e2m1_decode(pi_fp4(x));
        for (unsigned c = 0; c < 16; ++c) {
            ASSERT_LE(std::fabs(x - q), std::fabs(x - e2m1_decode(Fp4Code{static_cast<std::uint8_t>(c)})));
        }
        ASSERT_LE(std::fabs(x - q), oracle_fp4_half_gap(x));
        ASSERT_LE(std::fabs(x - q), 1.0);
    }
}

TEST(PiFp4, MatchesExhaustiveOracle) {
    const CheckResult r = check_fp4_projection(200'000, 11);
    EXPECT_TRUE(r.passed()) << r.detail;
}

TEST(PiE4m3, WorkedExamples) {
    EXPECT_EQ(e4m3_decode(pi_e4m3(0.5f)), 0.5f);
    EXPECT_EQ(e4m3_decode(pi_e4m3(449.0f)), 448.0f);
    EXPECT_EQ(pi_e4m3(0.0f), kE4m3PosZero);
    EXPECT_EQ(e4m3_decode(fp8(0, 0xF, 6)), 448.0f);
    EXPECT_EQ(e4m3_decode(fp8(0, 0, 1)), std::ldexp(1.0f, -9));
    EXPECT_EQ(e4m3_decode(kE4m3PosZero), 0.0f);
}

TEST(PiE4m3, SaturatesAndNeverProducesNan) {
    EXPECT_EQ(pi_e4m3(1e30f), kE4m3MaxCode);
    EXPECT_EQ(e4m3_decode(pi_e4m3(-1e30f)), -448.0f);
    EXPECT_EQ(pi_e4m3(std::numeric_limits<float>::infinity()), kE4m3MaxCode);
    EXPECT_EQ(e4m3_decode(pi_e4m3(464.0f)), 448.0f);
    EXPECT_THROW(pi_e4m3(std::numeric_limits<float>::quiet_NaN()), Error);
}

TEST(PiE4m3, SubnormalsAndTies) {
    for (unsigned m = 1; m < 8; ++m) {
        EXPECT_EQ(e4m3_decode(fp8(0, 0, m)), std::ldexp(static_cast<float>(m), -9));
    }
    // Halfway between 0 and 2^-9 goes to zero; between 2^-9 and 2^-8 goes to 2^-8 (even).
    EXPECT_EQ(pi_e4m3(std::ldexp(1.0f, -10)), kE4m3PosZero);
    EXPECT_EQ(e4m3_decode(pi_e4m3(std::ldexp(3.0f, -10))), std::ldexp(1.0f, -8));
    // 1 + 1/16 sits between 1 and 1.125; even mantissa picks 1.
    EXPECT_EQ(e4m3_decode(pi_e4m3(1.0625f)), 1.0f);
    EXPECT_EQ(e4m3_decode(pi_e4m3(1.1875f)), 1.25f);
}

TEST(PiE4m3, RoundTripsAndNanPatterns) {
    int nans = 0;
    for (unsigned c = 0; c < 256; ++c) {
        const Fp8E4M3Code code{static_cast<std::uint8_t>(c)};
        if (is_nan(code)) {
            ++nans;
            EXPECT_THROW(e4m3_decode(code), Error);
            continue;
        }
        EXPECT_EQ(pi_e4m3(e4m3_decode(code)), code) << c;
        EXPECT_EQ(pi_e4m3_wide(e4m3_decode(code)), code) << c;
    }
    EXPECT_EQ(nans, 2);
}

TEST(PiE4m3, MonotoneAndSignSymmetric) {
    SplitMix64 rng(9);
    for (int i = 0; i < 1'000'000; ++i) {
        float x = static_cast<float>(std::ldexp(rng.uniform() * 2 - 1, static_cast<int>(rng.next() % 24) - 12));
        float y = static_cast<float>(std::ldexp(rng.uniform() * 2 - 1, static_cast<int>(rng.next() % 24) - 12));
        if (y < x) std::swap(x, y);
        ASSERT_LE(e4m3_decode(pi_e4m3(x)), e4m3_decode(pi_e4m3(y))) << x << " " << y;
        ASSERT_EQ(e4m3_decode(pi_e4m3(-x)), -e4m3_decode(pi_e4m3(x))) << x;
    }
}

TEST(PiE4m3, MatchesScanOracle) {
    const CheckResult r = check_e4m3_projection(100'000, 12);
    EXPECT_TRUE(r.passed()) << r.detail;
}

TEST(Tables, Fp4TableLines) {
    std::istringstream in(fp4_table());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "0x0,0");
    std::getline(in, line);
    EXPECT_EQ(line, "0x1,0.5");
    for (int i = 0; i < 6; ++i) std::getline(in, line);
    EXPECT_EQ(line, "0x7,6");
    std::getline(in, line);
    EXPECT_EQ(line, "0x8,-0");
}

TEST(Tables, Fp8TableLines) {
    const std::string t = fp8_table();
    EXPECT_NE(t.find("0x01,0.001953125\n"), std::string::npos);
    EXPECT_NE(t.find("0x7e,448\n"), std::string::npos);
    EXPECT_NE(t.find("0x7f,nan\n"), std::string::npos);
    EXPECT_NE(t.find("0xff,nan\n"), std::string::npos);
    EXPECT_NE(t.find("0x80,-0\n"), std::string::npos);
    EXPECT_TRUE(check_format_tables().passed());
}

TEST(ShortestRepr, RoundTrips) {
    EXPECT_EQ(shortest_repr(0.1f), "0.1");
    EXPECT_EQ(shortest_repr(448.0f), "448");
    EXPECT_EQ(shortest_repr(-0.0f), "-0");
}

}  // namespace
}  // namespace mixquant
