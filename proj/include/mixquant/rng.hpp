// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pinned deterministic generators. Weight init and temperature sampling
// must match bit-for-bit across implementations, so nothing here may be
// swapped for <random> distributions (whose algorithms are unspecified).
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mixquant {

/// SplitMix64 (Steele, Lea, Flood 2014); see https://prng.di.unimi.it
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1): top 53 bits of one output.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1]: used for the log argument of Box-Muller.
    double uniform_open_zero() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

/// Box-Muller over a SplitMix64 stream. Each pair of draws (u1 in (0,1],
/// u2 in [0,1)) yields r*cos(2 pi u2) then r*sin(2 pi u2), r = sqrt(-2 ln u1),
/// returned in that order.
class NormalStream {
  public:
    explicit NormalStream(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = rng_.uniform_open_zero();
        const double u2 = rng_.uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

  private:
    SplitMix64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mixquant
