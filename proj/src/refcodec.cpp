#include "fovstream/refcodec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bitio.hpp"

namespace fovstream {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'F', 'V', 'C', '1'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 11;

const Block8& dct_basis() {
  static const Block8 basis = [] {
    Block8 c;
    for (int k = 0; k < 8; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int n = 0; n < 8; ++n) {
        c(k, n) = scale * std::cos(std::numbers::pi * (2 * n + 1) * k / 16.0);
      }
    }
    return c;
  }();
  return basis;
}

std::int32_t quantize(double coefficient, double step) {
  // round half away from zero
  return static_cast<std::int32_t>(round_half_away(coefficient / step));
}

// Edge-replicated sample access for padding to block multiples.
std::uint8_t padded_sample(const Plane& p, int y, int x) {
  return p(std::min(y, static_cast<int>(p.rows()) - 1), std::min(x, static_cast<int>(p.cols()) - 1));
}

void put_u16be(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

std::uint16_t get_u16be(std::span<const std::uint8_t> in, std::size_t at) {
  return static_cast<std::uint16_t>((in[at] << 8) | in[at + 1]);
}

}  // namespace

Quantizer Quantizer::from_raw(std::uint16_t raw) {
  if (raw < kMinRaw || raw > kMaxRaw) {
    throw std::invalid_argument("quantizer: step must be in [1, 255]");
  }
  Quantizer q;
  q.raw_ = raw;
  return q;
}

Quantizer Quantizer::from_step(double step) {
  if (!(step >= 1.0 && step <= 255.0)) {
    throw std::invalid_argument("quantizer: step must be in [1, 255]");
  }
  return from_raw(static_cast<std::uint16_t>(std::lround(step * 256.0)));
}

Block8 dct8_forward(const Block8& block) {
  const Block8& c = dct_basis();
  return c.lazyProduct(block).eval().lazyProduct(c.transpose());
}

Block8 dct8_inverse(const Block8& coefficients) {
  const Block8& c = dct_basis();
  return c.transpose().lazyProduct(coefficients).eval().lazyProduct(c);
}

const std::array<int, 64>& zigzag_order() {
  static const std::array<int, 64> order = [] {
    std::array<int, 64> o{};
    int i = 0;
    for (int s = 0; s < 15; ++s) {
      if (s % 2 == 0) {
        for (int y = std::min(s, 7); y >= std::max(0, s - 7); --y) o[i++] = y * 8 + (s - y);
      } else {
        for (int y = std::max(0, s - 7); y <= std::min(s, 7); ++y) o[i++] = y * 8 + (s - y);
      }
    }
    return o;
  }();
  return order;
}

Bitstream encode_frame(const Frame& frame, Quantizer q) {
  const int w = frame.width();
  const int h = frame.height();
  if (w < 1 || h < 1 || w > 0xffff || h > 0xffff) {
    throw std::invalid_argument("encode: frame dimensions must be in [1, 65535]");
  }
  Bitstream out;
  out.bytes.reserve(kHeaderBytes + static_cast<std::size_t>(w) * h / 8);
  out.bytes.insert(out.bytes.end(), kMagic.begin(), kMagic.end());
  out.bytes.push_back(kVersion);
  put_u16be(out.bytes, static_cast<std::uint16_t>(w));
  put_u16be(out.bytes, static_cast<std::uint16_t>(h));
  put_u16be(out.bytes, q.raw());

  const double step = q.step();
  const auto& zz = zigzag_order();
  detail::BitWriter bw(out.bytes);
  Block8 block;
  for (const Plane& plane : frame.planes) {
    for (int by = 0; by < h; by += 8) {
      for (int bx = 0; bx < w; bx += 8) {
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) block(y, x) = padded_sample(plane, by + y, bx + x);
        }
        const Block8 coef = dct8_forward(block);
        std::uint32_t run = 0;
        for (int i = 0; i < 64; ++i) {
          const int idx = zz[i];
          const std::int32_t level = quantize(coef(idx / 8, idx % 8), step);
          if (level == 0) {
            ++run;
            continue;
          }
          bw.put_ue(run);
          bw.put_se(level);
          run = 0;
        }
        // end of block: (run 0, level 0)
        bw.put_ue(0);
        bw.put_se(0);
      }
    }
    bw.align();
  }
  return out;
}

BitstreamHeader parse_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw DecodeError("truncated header", bytes.size() * 8);
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw DecodeError("bad magic", 0);
  }
  if (bytes[4] != kVersion) throw DecodeError("unsupported version", 32);
  BitstreamHeader hdr;
  hdr.width = get_u16be(bytes, 5);
  hdr.height = get_u16be(bytes, 7);
  if (hdr.width == 0 || hdr.height == 0) throw DecodeError("zero frame dimension", 40);
  const std::uint16_t raw_q = get_u16be(bytes, 9);
  if (raw_q < Quantizer::kMinRaw || raw_q > Quantizer::kMaxRaw) {
    throw DecodeError("quantizer out of range", 72);
  }
  hdr.q = Quantizer::from_raw(raw_q);
  return hdr;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  const BitstreamHeader hdr = parse_header(bytes);
  const int w = hdr.width;
  const int h = hdr.height;
  const double step = hdr.q.step();
  const auto& zz = zigzag_order();

  Frame out(w, h);
  detail::BitReader br(bytes, kHeaderBytes);
  Block8 coef;
  for (Plane& plane : out.planes) {
    for (int by = 0; by < h; by += 8) {
      for (int bx = 0; bx < w; bx += 8) {
        coef.setZero();
        int pos = 0;
        while (true) {
          const std::size_t pair_at = br.position();
          const std::uint32_t run = br.get_ue();
          const std::int32_t level = br.get_se();
          if (level == 0) {
            if (run != 0) throw DecodeError("zero level with non-zero run", pair_at);
            break;
          }
          if (static_cast<std::int64_t>(pos) + run > 63) {
            throw DecodeError("coefficient run past end of block", pair_at);
          }
          pos += static_cast<int>(run);
          const int idx = zz[pos];
          coef(idx / 8, idx % 8) = level * step;
          ++pos;
        }
        const Block8 pixels = dct8_inverse(coef);
        for (int y = 0; y < 8 && by + y < h; ++y) {
          for (int x = 0; x < 8 && bx + x < w; ++x) {
            plane(by + y, bx + x) =
                static_cast<std::uint8_t>(std::clamp(round_half_away(pixels(y, x)), 0.0, 255.0));
          }
        }
      }
    }
    br.align();
  }
  if (br.position() != bytes.size() * 8) {
    throw DecodeError("trailing data after last plane", br.position());
  }
  return out;
}

Bitstream Codec::encode_scaled(const Frame& frame, int w, int h, Quantizer q) {
  if (frame.width() == w && frame.height() == h) return encode(frame, q);
  return encode(scale_frame(frame, w, h), q);
}

Frame Codec::decode_scaled(const Bitstream& bits, int w, int h) {
  Frame f = decode(bits);
  if (f.width() == w && f.height() == h) return f;
  return scale_frame(f, w, h);
}

std::shared_ptr<Codec> make_ref_codec() { return std::make_shared<RefCodec>(); }

}  // namespace fovstream
