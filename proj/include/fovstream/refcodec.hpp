#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fovstream/frame.hpp"

namespace fovstream {

// Scalar quantizer step in Q8.8 fixed point; valid steps are [1, 255].
class Quantizer {
 public:
  static constexpr std::uint16_t kMinRaw = 256;
  static constexpr std::uint16_t kMaxRaw = 255 * 256;

  Quantizer() = default;
  // Throws std::invalid_argument outside [1, 255].
  static Quantizer from_raw(std::uint16_t raw);
  static Quantizer from_step(double step);

  std::uint16_t raw() const { return raw_; }
  double step() const { return raw_ / 256.0; }

  friend bool operator==(Quantizer, Quantizer) = default;

 private:
  std::uint16_t raw_ = kMinRaw;
};

// A complete encoded frame: 11-byte header followed by the entropy-coded
// planes. Every byte counts toward the bitrate.
struct Bitstream {
  std::vector<std::uint8_t> bytes;

  std::size_t bit_count() const { return bytes.size() * 8; }
  friend bool operator==(const Bitstream&, const Bitstream&) = default;
};

struct BitstreamHeader {
  int width = 0;
  int height = 0;
  Quantizer q;
};

class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, std::size_t bit_offset)
      : std::runtime_error(what + " at bit " + std::to_string(bit_offset)),
        bit_offset_(bit_offset) {}
  std::size_t bit_offset() const { return bit_offset_; }

 private:
  std::size_t bit_offset_;
};

using Block8 = Eigen::Matrix<double, 8, 8>;

// Orthonormal 2-D DCT-II and its inverse.
Block8 dct8_forward(const Block8& block);
Block8 dct8_inverse(const Block8& coefficients);

// Zigzag scan position -> row-major index within an 8x8 block.
const std::array<int, 64>& zigzag_order();

Bitstream encode_frame(const Frame& frame, Quantizer q);
BitstreamHeader parse_header(std::span<const std::uint8_t> bytes);
Frame decode_frame(std::span<const std::uint8_t> bytes);
inline Frame decode_frame(const Bitstream& bits) { return decode_frame(bits.bytes); }

// Encoder contract for the streaming pipeline. Implementations must be
// deterministic: identical (frame, q) yields identical bytes.
class Codec {
 public:
  virtual ~Codec() = default;
  virtual Bitstream encode(const Frame& frame, Quantizer q) = 0;
  virtual Frame decode(const Bitstream& bits) = 0;
  // Resample to w x h, then encode / decode, then resample to w x h. Caching
  // implementations may skip the resampling on a hit.
  virtual Bitstream encode_scaled(const Frame& frame, int w, int h, Quantizer q);
  virtual Frame decode_scaled(const Bitstream& bits, int w, int h);
};

class RefCodec final : public Codec {
 public:
  Bitstream encode(const Frame& frame, Quantizer q) override { return encode_frame(frame, q); }
  Frame decode(const Bitstream& bits) override { return decode_frame(bits); }
};

std::shared_ptr<Codec> make_ref_codec();

}  // namespace fovstream
