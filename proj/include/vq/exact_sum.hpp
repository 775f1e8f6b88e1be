#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>

#include "vq/errors.hpp"

namespace vq {

// Exact accumulator for non-negative finite doubles.
//
// The running sum is held as a wide fixed-point integer whose least significant
// bit is below the smallest subnormal, so every addition is exact and the result
// does not depend on the order in which terms (or partial accumulators) are
// combined. value() rounds the exact sum once, to nearest-even.
//
// This is what lets per-worker distortions be integrated into a total that is
// bit-identical for any number of workers.
class ExactSum {
 public:
  ExactSum() = default;
  explicit ExactSum(double x) { add(x); }

  void add(double x) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw DomainError("exact sum accepts only finite non-negative terms");
    if (x == 0.0) return;
    int exp = 0;
    const double frac = std::frexp(x, &exp);  // x = frac * 2^exp, frac in [0.5, 1)
    const auto mantissa = static_cast<std::uint64_t>(std::ldexp(frac, 53));
    add_shifted(mantissa, exp - 53 + kBias);
  }

  ExactSum& operator+=(double x) {
    add(x);
    return *this;
  }

  ExactSum& operator+=(const ExactSum& other) {
    std::uint64_t carry = 0;
    for (std::size_t i = 0; i < kLimbs; ++i) {
      const std::uint64_t a = limbs_[i];
      const std::uint64_t s = a + other.limbs_[i];
      const std::uint64_t c1 = s < a;
      const std::uint64_t t = s + carry;
      const std::uint64_t c2 = t < s;
      limbs_[i] = t;
      carry = c1 + c2;
    }
    return *this;
  }

  bool is_zero() const noexcept {
    for (auto l : limbs_)
      if (l != 0) return false;
    return true;
  }

  /// The exact sum rounded to the nearest double (ties to even); +inf on overflow.
  double value() const noexcept {
    int top = -1;
    for (int i = static_cast<int>(kLimbs) - 1; i >= 0; --i) {
      if (limbs_[i] != 0) {
        top = i * 64 + 63 - std::countl_zero(limbs_[i]);
        break;
      }
    }
    if (top < 0) return 0.0;
    // Subnormal results keep fewer than 53 significant bits.
    const int lsb = std::max(top - 52, kBias - 1074);
    std::uint64_t mantissa = extract(lsb, top - lsb + 1);
    if (lsb > 0 && bit(lsb - 1) && (mantissa & 1 || any_below(lsb - 1))) ++mantissa;
    return std::ldexp(static_cast<double>(mantissa), lsb - kBias);
  }

  friend bool operator==(const ExactSum&, const ExactSum&) = default;

 private:
  // Bit position of 2^0; puts 2^-1074 well above bit 0.
  static constexpr int kBias = 1152;
  // 2^1024 sits at bit 2176; leaves more than 64 bits of headroom for carries.
  static constexpr std::size_t kLimbs = 36;

  void add_shifted(std::uint64_t mantissa, int position) {
    const auto limb = static_cast<std::size_t>(position / 64);
    const int shift = position % 64;
    const std::uint64_t lo = mantissa << shift;
    const std::uint64_t hi = shift == 0 ? 0 : mantissa >> (64 - shift);
    propagate(limb, lo);
    if (hi != 0) propagate(limb + 1, hi);
  }

  void propagate(std::size_t limb, std::uint64_t addend) {
    for (std::size_t i = limb; i < kLimbs && addend != 0; ++i) {
      const std::uint64_t before = limbs_[i];
      limbs_[i] = before + addend;
      addend = limbs_[i] < before ? 1 : 0;
    }
  }

  bool bit(int pos) const noexcept {
    return (limbs_[static_cast<std::size_t>(pos / 64)] >> (pos % 64)) & 1U;
  }

  bool any_below(int pos) const noexcept {
    const auto limb = static_cast<std::size_t>(pos / 64);
    const int shift = pos % 64;
    if (shift != 0 && (limbs_[limb] & ((std::uint64_t{1} << shift) - 1)) != 0) return true;
    for (std::size_t i = 0; i < limb; ++i)
      if (limbs_[i] != 0) return true;
    return false;
  }

  // count <= 64 bits starting at pos.
  std::uint64_t extract(int pos, int count) const noexcept {
    std::uint64_t out = 0;
    for (int i = count - 1; i >= 0; --i) out = (out << 1) | (bit(pos + i) ? 1U : 0U);
    return out;
  }

  std::array<std::uint64_t, kLimbs> limbs_{};
};

}  // namespace vq
