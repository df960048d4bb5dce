// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
//
// Little-endian byte encoding helpers shared by the on-disk and wire formats.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mixquant {

class ByteWriter {
  public:
    void put_u8(std::uint8_t v) { bytes_.push_back(v); }
    void put_u32(std::uint32_t v);
    void put_u64(std::uint64_t v);
    void put_f32(float v);
    void put_f64(double v);
    void put_bytes(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
    void put_magic(std::string_view magic);

    std::size_t size() const { return bytes_.size(); }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

  private:
    std::vector<std::uint8_t> bytes_;
};

/// Bounds-checked reader; every overrun throws Error(Format).
class ByteReader {
  public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    double f64();
    std::span<const std::uint8_t> take(std::size_t n);
    void expect_magic(std::string_view magic);

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

  private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

/// CRC-32 (IEEE 802.3 polynomial, as used by zlib/PNG).
std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes);

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace mixquant
