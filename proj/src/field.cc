#include "mprf/field.h"

#include <algorithm>
#include <array>
#include <cctype>

#include "mprf/errors.h"

namespace mprf {

namespace {

uint128 MulModGeneric(uint128 a, uint128 b, uint128 p) {
  // Double-and-add; p < 2^127 so sums never wrap.
  uint128 result = 0;
  a %= p;
  while (b != 0) {
    if (b & 1) {
      result += a;
      if (result >= p) result -= p;
    }
    a += a;
    if (a >= p) a -= p;
    b >>= 1;
  }
  return result;
}

int BitLength(uint128 v) {
  int bits = 0;
  while (v != 0) {
    ++bits;
    v >>= 1;
  }
  return bits;
}

}  // namespace

std::string ToDecimal(uint128 v) {
  if (v == 0) return "0";
  std::string out;
  while (v != 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string ToDecimal(int128 v) {
  if (v < 0) return "-" + ToDecimal(static_cast<uint128>(-(v + 1)) + 1);
  return ToDecimal(static_cast<uint128>(v));
}

uint128 ParseUint128(const std::string& text) {
  auto parse_plain = [&](const std::string& s) {
    if (s.empty()) throw ConfigError("empty integer literal");
    uint128 v = 0;
    for (char c : s) {
      if (!std::isdigit(static_cast<unsigned char>(c))) {
        throw ConfigError("invalid integer literal: " + text);
      }
      uint128 next = v * 10 + static_cast<unsigned>(c - '0');
      if (next / 10 != v) throw ConfigError("integer literal overflows: " + text);
      v = next;
    }
    return v;
  };
  auto caret = text.find('^');
  if (caret == std::string::npos) return parse_plain(text);
  if (text.substr(0, caret) != "2") throw ConfigError("only 2^k forms supported: " + text);
  auto sign = text.find_first_of("+-", caret);
  int exponent = static_cast<int>(parse_plain(text.substr(caret + 1, sign - caret - 1)));
  if (exponent > 127) throw ConfigError("exponent too large: " + text);
  uint128 base = uint128{1} << exponent;
  if (sign == std::string::npos) return base;
  uint128 offset = parse_plain(text.substr(sign + 1));
  return text[sign] == '-' ? base - offset : base + offset;
}

bool IsProbablePrime(uint128 n) {
  if (n < 2) return false;
  static constexpr std::array<uint64_t, 12> kBases = {2,  3,  5,  7,  11, 13,
                                                      17, 19, 23, 29, 31, 37};
  for (uint64_t b : kBases) {
    if (n == b) return true;
    if (n % b == 0) return false;
  }
  uint128 d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  auto mulmod = [&](uint128 a, uint128 b) {
    if (n <= ~uint64_t{0}) return (a * b) % n;
    return MulModGeneric(a, b, n);
  };
  for (uint64_t base : kBases) {
    uint128 x = 1, a = base, e = d;
    while (e != 0) {
      if (e & 1) x = mulmod(x, a);
      a = mulmod(a, a);
      e >>= 1;
    }
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < r; ++i) {
      x = mulmod(x, x);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

Field::Field(uint128 modulus) : p_(modulus), bits_(BitLength(modulus)) {
  if (modulus < 3 || modulus > kMersenne127) {
    throw ConfigError("field modulus must lie in [3, 2^127 - 1]");
  }
  if (modulus == kMersenne61) {
    reduction_ = Reduction::kMersenne61;
  } else if (modulus == kMersenne127) {
    reduction_ = Reduction::kMersenne127;
  } else if (!IsProbablePrime(modulus)) {
    throw ConfigError("field modulus is not prime: " + ToDecimal(modulus));
  } else if (modulus <= ~uint64_t{0}) {
    reduction_ = Reduction::kNative64;
  } else {
    reduction_ = Reduction::kGeneric;
  }
}

FieldElement Field::Reduce(uint128 v) const {
  if (reduction_ == Reduction::kMersenne127) {
    v = (v & p_) + (v >> 127);
    return FieldElement(v >= p_ ? v - p_ : v);
  }
  return FieldElement(v % p_);
}

FieldElement Field::FromSigned(int128 v) const {
  if (v >= 0) return Reduce(static_cast<uint128>(v));
  uint128 mag = static_cast<uint128>(-(v + 1)) + 1;
  return Neg(Reduce(mag));
}

int128 Field::ToSigned(FieldElement a) const {
  if (a.value() > p_ / 2) return -static_cast<int128>(p_ - a.value());
  return static_cast<int128>(a.value());
}

FieldElement Field::MulSlow(FieldElement a, FieldElement b) const {
  switch (reduction_) {
    case Reduction::kMersenne61: {
      uint128 prod = a.value() * b.value();
      uint128 r = (prod & p_) + (prod >> 61);
      r = (r & p_) + (r >> 61);
      return FieldElement(r >= p_ ? r - p_ : r);
    }
    case Reduction::kMersenne127:
      return FieldElement(MulM127(a.value(), b.value()));
    case Reduction::kNative64:
      return FieldElement((a.value() * b.value()) % p_);
    case Reduction::kGeneric:
      break;
  }
  return FieldElement(MulModGeneric(a.value(), b.value(), p_));
}

FieldElement Field::MulSmallSlow(FieldElement a, int64_t k) const {
  const uint64_t m = k < 0 ? uint64_t{0} - static_cast<uint64_t>(k) : static_cast<uint64_t>(k);
  const FieldElement r = MulSlow(a, Reduce(m));
  return k < 0 ? Neg(r) : r;
}

FieldElement Field::MulAuto(FieldElement a, FieldElement c) const {
  constexpr uint128 kSmall = uint128{1} << 63;
  if (c.value() < kSmall) return MulSmall(a, static_cast<int64_t>(c.value()));
  if (p_ - c.value() < kSmall) return MulSmall(a, -static_cast<int64_t>(p_ - c.value()));
  return Mul(a, c);
}

FieldElement Field::Inv(FieldElement a) const {
  if (a.value() == 0) throw DomainError("inverse of zero in F_p");
  // Extended Euclid on signed 128-bit values; all magnitudes stay below p.
  int128 old_r = static_cast<int128>(a.value()), r = static_cast<int128>(p_);
  int128 old_s = 1, s = 0;
  while (r != 0) {
    int128 q = old_r / r;
    int128 tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * s;
    old_s = s;
    s = tmp;
  }
  return FromSigned(old_s);
}

FieldElement Field::Pow(FieldElement a, uint128 e) const {
  FieldElement result(1);
  while (e != 0) {
    if (e & 1) result = Mul(result, a);
    a = Mul(a, a);
    e >>= 1;
  }
  return result;
}

FieldElement Field::Apply(FieldOp op, FieldElement a, FieldElement b) const {
  switch (op) {
    case FieldOp::kAdd:
      return Add(a, b);
    case FieldOp::kSub:
      return Sub(a, b);
    case FieldOp::kMul:
      return Mul(a, b);
    case FieldOp::kInv:
      return Inv(a);
    case FieldOp::kNeg:
      return Neg(a);
  }
  throw ConfigError("unknown field op");
}

}  // namespace mprf
