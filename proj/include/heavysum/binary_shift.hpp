#pragma once

#include <cstdint>

#include "heavysum/circle.hpp"
#include "heavysum/rng.hpp"

namespace heavysum {

/// Uniform random bits delivered most-significant first from a 64-bit engine.
class BitSource {
 public:
  explicit BitSource(std::uint64_t seed) : eng_(seed) {}

  /// Next n bits (1 <= n <= 64) as the low n bits of the result.
  std::uint64_t take(int n) {
    if (n == 64 && bits_ == 0) return eng_();
    std::uint64_t out = 0;
    int need = n;
    while (need > 0) {
      if (bits_ == 0) {
        res_ = eng_();
        bits_ = 64;
      }
      int k = need < bits_ ? need : bits_;
      std::uint64_t chunk = k == 64 ? res_ : (res_ >> (64 - k));
      out = k == 64 ? chunk : ((out << k) | chunk);
      res_ = k == 64 ? 0 : (res_ << k);
      bits_ -= k;
      need -= k;
    }
    return out;
  }

  std::uint64_t take_bit() {
    if (bits_ == 0) {
      res_ = eng_();
      bits_ = 64;
    }
    std::uint64_t b = res_ >> 63;
    res_ <<= 1;
    --bits_;
    return b;
  }

  void discard(std::uint64_t n) {
    std::uint64_t from_res = n < static_cast<std::uint64_t>(bits_) ? n : bits_;
    if (from_res > 0) {
      res_ = from_res == 64 ? 0 : (res_ << from_res);
      bits_ -= static_cast<int>(from_res);
      n -= from_res;
    }
    eng_.discard(n / 64);
    int rem = static_cast<int>(n % 64);
    if (rem > 0) take(rem);
  }

  Engine& engine() noexcept { return eng_; }

 private:
  Engine eng_;
  std::uint64_t res_ = 0;
  int bits_ = 0;
};

/// Doubling-map orbit of a Lebesgue-random point, exact to 2^-64: the state is
/// the next 64 binary digits, and one step shifts in a fresh digit.
class DoublingOrbit {
 public:
  explicit DoublingOrbit(std::uint64_t seed) : src_(seed) { window_ = src_.take(64); }

  Fixed point() const noexcept { return window_; }

  Fixed advance() {
    window_ = (window_ << 1) | src_.take_bit();
    return window_;
  }

  void skip(std::uint64_t n) {
    if (n < 64) {
      for (std::uint64_t i = 0; i < n; ++i) advance();
      return;
    }
    src_.discard(n - 64);
    window_ = src_.take(64);
  }

 private:
  BitSource src_;
  Fixed window_;
};

}  // namespace heavysum
