#ifndef MPRF_FIELD_H_
#define MPRF_FIELD_H_

#include <compare>
#include <cstdint>
#include <string>

namespace mprf {

using uint128 = unsigned __int128;
using int128 = __int128;

std::string ToDecimal(uint128 v);
std::string ToDecimal(int128 v);
// Parses a decimal literal or the forms "2^k-c" / "2^k+c". Throws ConfigError.
uint128 ParseUint128(const std::string& text);

// An element of F_p. The modulus lives in the owning Field; elements are
// plain values so they can be stored densely inside share vectors.
class FieldElement {
 public:
  constexpr FieldElement() = default;
  constexpr explicit FieldElement(uint128 value) : value_(value) {}

  constexpr uint128 value() const { return value_; }

  friend constexpr bool operator==(FieldElement a, FieldElement b) {
    return a.value_ == b.value_;
  }
  friend constexpr auto operator<=>(FieldElement a, FieldElement b) {
    return a.value_ <=> b.value_;
  }

 private:
  uint128 value_ = 0;
};

enum class FieldOp { kAdd, kSub, kMul, kInv, kNeg };

// Arithmetic modulo a prime p < 2^127. Mersenne moduli 2^61-1 and 2^127-1
// use shift-based reduction; other moduli fall back to generic routines.
class Field {
 public:
  static constexpr uint128 kMersenne61 = (uint128{1} << 61) - 1;
  static constexpr uint128 kMersenne127 = (uint128{1} << 127) - 1;

  // Throws ConfigError unless `modulus` is a prime in [3, 2^127 - 1].
  explicit Field(uint128 modulus);

  uint128 modulus() const { return p_; }
  int bit_length() const { return bits_; }

  // Reduces an arbitrary value mod p.
  FieldElement Reduce(uint128 v) const;
  FieldElement FromUint(uint64_t v) const { return Reduce(v); }
  FieldElement FromSigned(int128 v) const;
  // Centered lift into (-p/2, p/2].
  int128 ToSigned(FieldElement a) const;

  FieldElement Add(FieldElement a, FieldElement b) const {
    uint128 s = a.value() + b.value();
    return FieldElement(s >= p_ ? s - p_ : s);
  }
  FieldElement Sub(FieldElement a, FieldElement b) const {
    return FieldElement(a.value() >= b.value() ? a.value() - b.value()
                                               : a.value() + (p_ - b.value()));
  }
  FieldElement Neg(FieldElement a) const {
    return FieldElement(a.value() == 0 ? 0 : p_ - a.value());
  }
  FieldElement Mul(FieldElement a, FieldElement b) const {
    if (reduction_ == Reduction::kMersenne127) return FieldElement(MulM127(a.value(), b.value()));
    return MulSlow(a, b);
  }
  // a * k for a machine-word integer k.
  FieldElement MulSmall(FieldElement a, int64_t k) const {
    if (reduction_ != Reduction::kMersenne127) return MulSmallSlow(a, k);
    const uint64_t m = k < 0 ? uint64_t{0} - static_cast<uint64_t>(k) : static_cast<uint64_t>(k);
    const uint128 p0 = static_cast<uint128>(static_cast<uint64_t>(a.value())) * m;
    const uint128 p1 = static_cast<uint128>(static_cast<uint64_t>(a.value() >> 64)) * m;
    const uint128 lo = p0 + (p1 << 64);
    const uint128 hi = (p1 >> 64) + (lo < p0 ? 1 : 0);
    const FieldElement r(FoldM127(hi, lo));
    return k < 0 ? Neg(r) : r;
  }
  // a * c, taking the small-integer path when c or -c fits in 63 bits.
  FieldElement MulAuto(FieldElement a, FieldElement c) const;
  // Throws DomainError for a == 0.
  FieldElement Inv(FieldElement a) const;
  FieldElement Pow(FieldElement a, uint128 e) const;

  // Dispatch form used by the CLI and tests; `b` is ignored for unary ops.
  FieldElement Apply(FieldOp op, FieldElement a, FieldElement b = {}) const;

  friend bool operator==(const Field& a, const Field& b) { return a.p_ == b.p_; }

 private:
  enum class Reduction { kMersenne61, kMersenne127, kNative64, kGeneric };

  static uint128 FoldM127(uint128 hi, uint128 lo) {
    // hi * 2^128 + lo with 2^127 == 1 and 2^128 == 2 (mod p).
    uint128 s = (hi << 1) + (lo & kMersenne127) + (lo >> 127);
    s = (s & kMersenne127) + (s >> 127);
    return s >= kMersenne127 ? s - kMersenne127 : s;
  }
  static uint128 MulM127(uint128 a, uint128 b) {
    const uint64_t a0 = static_cast<uint64_t>(a), a1 = static_cast<uint64_t>(a >> 64);
    const uint64_t b0 = static_cast<uint64_t>(b), b1 = static_cast<uint64_t>(b >> 64);
    const uint128 p00 = static_cast<uint128>(a0) * b0;
    // a1, b1 < 2^63, so the middle sum cannot wrap.
    const uint128 mid = static_cast<uint128>(a0) * b1 + static_cast<uint128>(a1) * b0;
    const uint128 lo = p00 + (mid << 64);
    const uint128 hi = static_cast<uint128>(a1) * b1 + (mid >> 64) + (lo < p00 ? 1 : 0);
    return FoldM127(hi, lo);
  }
  FieldElement MulSlow(FieldElement a, FieldElement b) const;
  FieldElement MulSmallSlow(FieldElement a, int64_t k) const;

  uint128 p_;
  int bits_;
  Reduction reduction_;
};

bool IsProbablePrime(uint128 n);

}  // namespace mprf

#endif  // MPRF_FIELD_H_
