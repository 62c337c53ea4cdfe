#include "mprf/fixed_point.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "mprf/errors.h"

namespace mprf {

namespace {

int128 Abs128(int128 v) { return v < 0 ? -v : v; }

// round(num / den) with ties away from zero.
int128 RoundDiv(int128 num, int128 den) {
  const bool negative = (num < 0) != (den < 0);
  const int128 a = Abs128(num), b = Abs128(den);
  const int128 q = (2 * a + b) / (2 * b);
  return negative ? -q : q;
}

bool IsSmallInteger(double c) { return std::nearbyint(c) == c && std::fabs(c) < 0x1p52; }

}  // namespace

FixedCodec::FixedCodec(const Field& field, int k_fx, int f_fx)
    : field_(&field), k_(k_fx), f_(f_fx) {}

double FixedCodec::resolution() const { return std::ldexp(1.0, -f_); }

double FixedCodec::max_magnitude() const { return std::ldexp(1.0, k_ - f_ - 1); }

int128 FixedCodec::EncodeRaw(double x) const {
  if (!std::isfinite(x)) throw OverflowError("cannot encode a non-finite value");
  const long double scaled = std::round(std::ldexp(static_cast<long double>(x), f_));
  if (std::fabs(scaled) >= std::ldexp(1.0L, k_ - 1)) {
    throw OverflowError("value " + std::to_string(x) + " exceeds the fixed-point range");
  }
  return static_cast<int128>(scaled);
}

FieldElement FixedCodec::Encode(double x) const { return field_->FromSigned(EncodeRaw(x)); }

double FixedCodec::DecodeRaw(int128 raw) const {
  return static_cast<double>(std::ldexp(static_cast<long double>(raw), -f_));
}

double FixedCodec::Decode(FieldElement v) const { return DecodeRaw(Lift(v)); }

FieldElement FixedCodec::FromRaw(int128 raw) const {
  if (Abs128(raw) >= (int128{1} << (k_ - 1))) {
    throw OverflowError("fixed-point result out of range");
  }
  return field_->FromSigned(raw);
}

FixedArith::FixedArith(Engine& engine)
    : engine_(&engine),
      codec_(engine.field(), engine.config().k_fx, engine.config().f_fx) {
  const int k = engine.config().k_fx;
  const int f = engine.config().f_fx;
  const int needed = std::max(k + 40, 2 * k + f);
  if (engine.field().bit_length() <= needed) {
    throw ConfigError("prime too small for the fixed-point format: need p > 2^" +
                      std::to_string(needed));
  }
  one_ = engine.field().FromUint(uint64_t{1} << f);
}

SecretFixed FixedArith::Constant(double x) { return {engine_->Constant(codec_.Encode(x))}; }

SecretFixed FixedArith::Input(int party, double x) {
  return {engine_->ShareInput(party, codec_.Encode(x))};
}

double FixedArith::Open(const SecretFixed& a) { return codec_.Decode(engine_->Open(a.raw)); }

SecretFixed FixedArith::FromInteger(const ShareVector& b) {
  return {engine_->MulConstant(b, one_)};
}

SecretFixed FixedArith::ScaleInteger(const ShareVector& b, double c) {
  const int f = codec_.frac_bits();
  const long double scaled = std::round(std::ldexp(static_cast<long double>(c), 2 * f));
  if (std::fabs(scaled) >= std::ldexp(1.0L, codec_.total_bits() - 1 + f)) {
    throw OverflowError("integer scale factor out of range");
  }
  ShareVector product =
      engine_->MulConstant(b, engine_->field().FromSigned(static_cast<int128>(scaled)));
  return Truncate(product, f);
}

SecretFixed FixedArith::Add(const SecretFixed& a, const SecretFixed& b) {
  return {engine_->Add(a.raw, b.raw)};
}

SecretFixed FixedArith::Sub(const SecretFixed& a, const SecretFixed& b) {
  return {engine_->Sub(a.raw, b.raw)};
}

SecretFixed FixedArith::Neg(const SecretFixed& a) {
  return {engine_->MulConstant(a.raw, engine_->field().Neg(FieldElement(1)))};
}

SecretFixed FixedArith::AddConstant(const SecretFixed& a, double c) {
  return {engine_->AddConstant(a.raw, codec_.Encode(c))};
}

SecretFixed FixedArith::MulPublic(const SecretFixed& a, double c) {
  if (IsSmallInteger(c)) {
    return {engine_->MulConstant(a.raw, engine_->field().FromSigned(static_cast<int128>(c)))};
  }
  // The constant carries f extra fractional bits so that the product is
  // rounded only once.
  const int f = codec_.frac_bits();
  if (!(std::fabs(c) < codec_.max_magnitude())) {
    throw OverflowError("public factor out of range");
  }
  const long double scaled = std::round(std::ldexp(static_cast<long double>(c), 2 * f));
  ShareVector product =
      engine_->MulConstant(a.raw, engine_->field().FromSigned(static_cast<int128>(scaled)));
  return Truncate(product, 2 * f);
}

SecretFixed FixedArith::Mul(const SecretFixed& a, const SecretFixed& b) {
  return Truncate(engine_->Mul(a.raw, b.raw), codec_.frac_bits());
}

SecretFixed FixedArith::MulInteger(const ShareVector& b, const SecretFixed& a) {
  return {engine_->Mul(b, a.raw)};
}

SecretFixed FixedArith::Truncate(const ShareVector& raw, int shift) {
  const FixedCodec& codec = codec_;
  ShareVector inputs[] = {raw};
  std::vector<ShareVector> out = engine_->Ideal(
      IdealKind::kTrunc, inputs, [&codec, shift](std::span<const FieldElement> v) {
        const int128 x = codec.Lift(v[0]);
        const int128 half = int128{1} << (shift - 1);
        return std::vector<FieldElement>{codec.FromRaw((x + half) >> shift)};
      });
  return {std::move(out[0])};
}

SecretFixed FixedArith::Div(const SecretFixed& a, const SecretFixed& b) {
  const FixedCodec& codec = codec_;
  ShareVector inputs[] = {a.raw, b.raw};
  std::vector<ShareVector> out =
      engine_->Ideal(IdealKind::kDiv, inputs, [&codec](std::span<const FieldElement> v) {
        const int128 num = codec.Lift(v[0]);
        const int128 den = codec.Lift(v[1]);
        if (den == 0) throw DomainError("division by a value below the fixed-point resolution");
        return std::vector<FieldElement>{
            codec.FromRaw(RoundDiv(num * (int128{1} << codec.frac_bits()), den))};
      });
  return {std::move(out[0])};
}

WideFixed FixedArith::Norm(std::span<const SecretFixed> xs, int extra_bits) {
  if (xs.empty()) throw ConfigError("norm of an empty vector");
  const int f = codec_.frac_bits();
  if (extra_bits < 0 || 2 * (codec_.total_bits() - 1) + 2 >= engine_->field().bit_length()) {
    throw ConfigError("no headroom for an exact sum of squares");
  }
  std::vector<ShareVector> squares;
  squares.reserve(xs.size());
  for (const SecretFixed& x : xs) squares.push_back(engine_->Mul(x.raw, x.raw));
  std::vector<LinearTerm> terms;
  for (const ShareVector& sq : squares) terms.push_back({FieldElement(1), &sq});
  ShareVector inputs[] = {engine_->Linear(FieldElement(0), terms)};
  const Field& field = engine_->field();
  const int total = codec_.total_bits();
  std::vector<ShareVector> out = engine_->Ideal(
      IdealKind::kSqrt, inputs, [&field, f, extra_bits, total](std::span<const FieldElement> v) {
        const int128 sum = field.ToSigned(v[0]);
        if (sum < 0) throw DomainError("negative sum of squares");
        // sqrt(sum / 2^(2f)) * 2^(f + e) = sqrt(sum * 2^(2e)).
        const long double root =
            std::sqrt(std::ldexp(static_cast<long double>(sum), 2 * extra_bits));
        const int128 raw = static_cast<int128>(std::round(root));
        if (raw >= (int128{1} << (total - 1 + extra_bits))) {
          throw OverflowError("norm out of range");
        }
        return std::vector<FieldElement>{field.FromSigned(raw)};
      });
  return {std::move(out[0]), f + extra_bits};
}

SecretFixed FixedArith::Div(const SecretFixed& a, const WideFixed& b) {
  const FixedCodec& codec = codec_;
  const int b_bits = b.frac_bits;
  ShareVector inputs[] = {a.raw, b.raw};
  std::vector<ShareVector> out =
      engine_->Ideal(IdealKind::kDiv, inputs, [&codec, b_bits](std::span<const FieldElement> v) {
        const int128 num = codec.Lift(v[0]);
        const int128 den = codec.Lift(v[1]);
        if (den == 0) throw DomainError("division by a value below the resolution");
        return std::vector<FieldElement>{codec.FromRaw(RoundDiv(num * (int128{1} << b_bits), den))};
      });
  return {std::move(out[0])};
}

SecretFixed FixedArith::UnaryIdeal(IdealKind kind, const SecretFixed& a,
                                   long double (*fn)(long double), const char* what) {
  const FixedCodec& codec = codec_;
  ShareVector inputs[] = {a.raw};
  std::vector<ShareVector> out =
      engine_->Ideal(kind, inputs, [&codec, fn, what](std::span<const FieldElement> v) {
        const long double x =
            std::ldexp(static_cast<long double>(codec.Lift(v[0])), -codec.frac_bits());
        const long double y = fn(x);
        if (!std::isfinite(y) ||
            std::fabs(y) >= static_cast<long double>(codec.max_magnitude())) {
          throw DomainError(std::string(what) + " result outside the fixed-point range");
        }
        return std::vector<FieldElement>{
            codec.FromRaw(static_cast<int128>(std::round(std::ldexp(y, codec.frac_bits()))))};
      });
  return {std::move(out[0])};
}

SecretFixed FixedArith::Exp(const SecretFixed& a) {
  return UnaryIdeal(IdealKind::kExp, a, [](long double x) { return std::exp(x); }, "exp");
}

SecretFixed FixedArith::Ln(const SecretFixed& a) {
  return UnaryIdeal(
      IdealKind::kLn, a,
      [](long double x) {
        if (x <= 0) throw DomainError("ln of a non-positive value");
        return std::log(x);
      },
      "ln");
}

SecretFixed FixedArith::Sqrt(const SecretFixed& a) {
  const FixedCodec& codec = codec_;
  ShareVector inputs[] = {a.raw};
  std::vector<ShareVector> out =
      engine_->Ideal(IdealKind::kSqrt, inputs, [&codec](std::span<const FieldElement> v) {
        const int128 x = codec.Lift(v[0]);
        if (x < 0) throw DomainError("sqrt of a negative value");
        // sqrt(x / 2^f) * 2^f = sqrt(x * 2^f); the radicand is exact in long double.
        const long double radicand =
            std::ldexp(static_cast<long double>(x), codec.frac_bits());
        return std::vector<FieldElement>{
            codec.FromRaw(static_cast<int128>(std::round(std::sqrt(radicand))))};
      });
  return {std::move(out[0])};
}

ShareVector FixedArith::Lt(const SecretFixed& a, const SecretFixed& b) {
  const FixedCodec& codec = codec_;
  ShareVector inputs[] = {a.raw, b.raw};
  std::vector<ShareVector> out =
      engine_->Ideal(IdealKind::kLt, inputs, [&codec](std::span<const FieldElement> v) {
        return std::vector<FieldElement>{
            FieldElement(codec.Lift(v[0]) < codec.Lift(v[1]) ? 1 : 0)};
      });
  return std::move(out[0]);
}

ShareVector FixedArith::LtConstant(const SecretFixed& a, double c) {
  const FixedCodec& codec = codec_;
  const int128 bound = codec.EncodeRaw(c);
  ShareVector inputs[] = {a.raw};
  std::vector<ShareVector> out =
      engine_->Ideal(IdealKind::kLt, inputs, [&codec, bound](std::span<const FieldElement> v) {
        return std::vector<FieldElement>{FieldElement(codec.Lift(v[0]) < bound ? 1 : 0)};
      });
  return std::move(out[0]);
}

SecretFixed FixedArith::Select(const ShareVector& bit, const SecretFixed& if_one,
                               const SecretFixed& if_zero) {
  return Add(if_zero, MulInteger(bit, Sub(if_one, if_zero)));
}

SecretFixed FixedArith::Abs(const SecretFixed& a) {
  ShareVector negative = LtConstant(a, 0.0);
  SecretFixed flipped = MulInteger(negative, a);
  return {engine_->Linear(FieldElement(0),
                          std::vector<LinearTerm>{{FieldElement(1), &a.raw},
                                                  {engine_->field().Neg(FieldElement(2)),
                                                   &flipped.raw}})};
}

SecretFixed FixedArith::Sign(const SecretFixed& a) {
  ShareVector negative = LtConstant(a, 0.0);
  const Field& field = engine_->field();
  LinearTerm terms[] = {{field.Neg(field.Add(one_, one_)), &negative}};
  return {engine_->Linear(one_, terms)};
}

SecretFixed FixedArith::Max(const SecretFixed& a, const SecretFixed& b) {
  return Select(Lt(a, b), b, a);
}

SecretFixed FixedArith::Min(const SecretFixed& a, const SecretFixed& b) {
  return Select(Lt(a, b), a, b);
}

SecretFixed FixedArith::Apply(FixedOp op, const SecretFixed& a, const SecretFixed& b) {
  switch (op) {
    case FixedOp::kAdd:
      return Add(a, b);
    case FixedOp::kSub:
      return Sub(a, b);
    case FixedOp::kMul:
      return Mul(a, b);
    case FixedOp::kDiv:
      return Div(a, b);
    case FixedOp::kLt:
      return FromInteger(Lt(a, b));
    case FixedOp::kExp:
      return Exp(a);
    case FixedOp::kSqrt:
      return Sqrt(a);
  }
  throw ConfigError("unknown fixed-point operation");
}

}  // namespace mprf
