#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fovstream/refcodec.hpp"

namespace fovstream::detail {

// MSB-first bit packing with Exp-Golomb codes.
class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void put_bits(std::uint32_t value, int count) {
    for (int i = count - 1; i >= 0; --i) put_bit((value >> i) & 1u);
  }

  void put_bit(std::uint32_t bit) {
    if (fill_ == 0) out_.push_back(0);
    if (bit) out_.back() |= static_cast<std::uint8_t>(0x80u >> fill_);
    fill_ = (fill_ + 1) & 7;
  }

  void put_ue(std::uint32_t n) {
    const std::uint32_t v = n + 1;
    int len = 0;
    while ((v >> len) > 1) ++len;
    put_bits(0, len);
    put_bits(v, len + 1);
  }

  void put_se(std::int32_t k) {
    put_ue(k > 0 ? static_cast<std::uint32_t>(2 * k - 1) : static_cast<std::uint32_t>(-2 * k));
  }

  // Pads with zero bits to the next byte boundary.
  void align() { fill_ = 0; }

 private:
  std::vector<std::uint8_t>& out_;
  int fill_ = 0;
};

class BitReader {
 public:
  BitReader(std::span<const std::uint8_t> in, std::size_t start_byte)
      : in_(in), pos_(start_byte * 8) {}

  std::size_t position() const { return pos_; }

  std::uint32_t get_bit() {
    if (pos_ >= in_.size() * 8) throw DecodeError("truncated payload", pos_);
    const std::uint32_t bit = (in_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u;
    ++pos_;
    return bit;
  }

  std::uint32_t get_ue() {
    const std::size_t start = pos_;
    int zeros = 0;
    while (get_bit() == 0) {
      if (++zeros > 31) throw DecodeError("exp-golomb prefix too long", start);
    }
    std::uint64_t v = 1;
    for (int i = 0; i < zeros; ++i) v = (v << 1) | get_bit();
    return static_cast<std::uint32_t>(v - 1);
  }

  std::int32_t get_se() {
    const std::uint32_t n = get_ue();
    const auto half = static_cast<std::int32_t>((n + 1) / 2);
    return (n & 1u) ? half : -half;
  }

  void align() { pos_ = (pos_ + 7) & ~std::size_t{7}; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_;
};

}  // namespace fovstream::detail
