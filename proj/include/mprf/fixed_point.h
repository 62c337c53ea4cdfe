#ifndef MPRF_FIXED_POINT_H_
#define MPRF_FIXED_POINT_H_

#include <span>
#include <vector>

#include "mprf/engine.h"

namespace mprf {

// A shared fixed-point real: raw encodes round(x * 2^f) with negatives
// stored as p - |raw|.
struct SecretFixed {
  ShareVector raw;
};

// A shared value carrying more fractional bits than the engine format.
struct WideFixed {
  ShareVector raw;
  int frac_bits = 0;
};

enum class FixedOp { kAdd, kSub, kMul, kDiv, kLt, kExp, kSqrt };

// Plaintext codec for the engine's (k_fx, f_fx) format.
class FixedCodec {
 public:
  FixedCodec(const Field& field, int k_fx, int f_fx);

  int frac_bits() const { return f_; }
  int total_bits() const { return k_; }
  double resolution() const;
  // Largest representable magnitude, 2^(k - f - 1).
  double max_magnitude() const;

  // Throws OverflowError when |x| is out of range or x is not finite.
  int128 EncodeRaw(double x) const;
  FieldElement Encode(double x) const;
  double Decode(FieldElement v) const;
  double DecodeRaw(int128 raw) const;
  int128 Lift(FieldElement v) const { return field_->ToSigned(v); }
  // Throws OverflowError unless |raw| < 2^(k-1).
  FieldElement FromRaw(int128 raw) const;

 private:
  const Field* field_;
  int k_;
  int f_;
};

// Fixed-point arithmetic on shares. Interactive non-linear steps are either
// gate_mul or ideal gates; truncation after products is a trusted gate.
class FixedArith {
 public:
  // Throws ConfigError if p is too small for the fixed-point format:
  // p must exceed 2^(k_fx + 40) and 2^(2 k_fx + f_fx).
  explicit FixedArith(Engine& engine);

  Engine& engine() { return *engine_; }
  const FixedCodec& codec() const { return codec_; }
  double resolution() const { return codec_.resolution(); }

  SecretFixed Constant(double x);
  SecretFixed Input(int party, double x);
  double Open(const SecretFixed& a);

  // Integer share b (typically a bit) as the fixed-point value b.
  SecretFixed FromInteger(const ShareVector& b);
  // Integer share times a public real, rounded once.
  SecretFixed ScaleInteger(const ShareVector& b, double c);

  SecretFixed Add(const SecretFixed& a, const SecretFixed& b);
  SecretFixed Sub(const SecretFixed& a, const SecretFixed& b);
  SecretFixed Neg(const SecretFixed& a);
  SecretFixed AddConstant(const SecretFixed& a, double c);
  SecretFixed MulPublic(const SecretFixed& a, double c);
  SecretFixed Mul(const SecretFixed& a, const SecretFixed& b);
  // Product with an integer share; no truncation needed.
  SecretFixed MulInteger(const ShareVector& b, const SecretFixed& a);
  // Throws DomainError when |b| is below the resolution.
  SecretFixed Div(const SecretFixed& a, const SecretFixed& b);
  SecretFixed Exp(const SecretFixed& a);
  SecretFixed Sqrt(const SecretFixed& a);
  SecretFixed Ln(const SecretFixed& a);
  // Integer share of [a < b].
  ShareVector Lt(const SecretFixed& a, const SecretFixed& b);
  ShareVector LtConstant(const SecretFixed& a, double c);
  // bit ? if_one : if_zero
  SecretFixed Select(const ShareVector& bit, const SecretFixed& if_one,
                     const SecretFixed& if_zero);
  SecretFixed Abs(const SecretFixed& a);
  // 1 - 2 [a < 0]
  SecretFixed Sign(const SecretFixed& a);
  SecretFixed Max(const SecretFixed& a, const SecretFixed& b);
  SecretFixed Min(const SecretFixed& a, const SecretFixed& b);

  // Euclidean norm from the exact sum of squares, rounded once to f_fx +
  // extra_bits fractional bits.
  WideFixed Norm(std::span<const SecretFixed> xs, int extra_bits);
  // a / b rounded once to the engine format.
  SecretFixed Div(const SecretFixed& a, const WideFixed& b);

  // Dispatch form; lt returns the bit as a fixed-point 0/1.
  SecretFixed Apply(FixedOp op, const SecretFixed& a, const SecretFixed& b);

 private:
  // Trusted rescale: round(raw / 2^shift), range-checked.
  SecretFixed Truncate(const ShareVector& raw, int shift);
  SecretFixed UnaryIdeal(IdealKind kind, const SecretFixed& a, long double (*fn)(long double),
                         const char* what);

  Engine* engine_;
  FixedCodec codec_;
  FieldElement one_;
};

}  // namespace mprf

#endif  // MPRF_FIXED_POINT_H_
