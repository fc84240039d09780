#pragma once

#include <array>
#include <cstdint>

namespace acrlnc {

// GF(2^8) over x^8+x^4+x^3+x^2+1 (0x11d), generator 2.
class Gf256 {
public:
  static constexpr unsigned polynomial = 0x11d;

  static std::uint8_t add(std::uint8_t a, std::uint8_t b) { return a ^ b; }

  static std::uint8_t mul(std::uint8_t a, std::uint8_t b) { return tables().mul[a][b]; }

  static std::uint8_t inv(std::uint8_t a) { return tables().inv[a]; }

  static std::uint8_t div(std::uint8_t a, std::uint8_t b) { return mul(a, inv(b)); }

  // Row of the product table, handy in inner loops: row(c)[x] == c*x.
  static const std::uint8_t* row(std::uint8_t c) { return tables().mul[c].data(); }

  // dst[i] ^= c * src[i]
  static void axpy(std::uint8_t* dst, const std::uint8_t* src, std::uint8_t c, std::size_t n) {
    if (c == 0) return;
    const std::uint8_t* r = row(c);
    for (std::size_t i = 0; i < n; ++i) dst[i] ^= r[src[i]];
  }

  static void scale(std::uint8_t* dst, std::uint8_t c, std::size_t n) {
    const std::uint8_t* r = row(c);
    for (std::size_t i = 0; i < n; ++i) dst[i] = r[dst[i]];
  }

private:
  struct Tables {
    std::array<std::uint8_t, 512> exp{};
    std::array<int, 256> log{};
    std::array<std::array<std::uint8_t, 256>, 256> mul{};
    std::array<std::uint8_t, 256> inv{};

    Tables() {
      unsigned x = 1;
      for (int i = 0; i < 255; ++i) {
        exp[i] = static_cast<std::uint8_t>(x);
        log[x] = i;
        x <<= 1;
        if (x & 0x100) x ^= polynomial;
      }
      for (int i = 255; i < 512; ++i) exp[i] = exp[i - 255];
      log[0] = -1;
      for (int a = 1; a < 256; ++a) {
        for (int b = 1; b < 256; ++b) mul[a][b] = exp[log[a] + log[b]];
        inv[a] = exp[255 - log[a]];
      }
    }
  };

  static const Tables& tables() {
    static const Tables t;
    return t;
  }
};

} // namespace acrlnc
