#include "mprf/kernels.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mprf/errors.h"

namespace mprf {

namespace {

SecretFixed Trapezoid(FixedArith& fa, const FuncSpec& f, const SecretFixed* lower,
                      const SecretFixed& upper, int k_trap) {
  if (k_trap < 2) throw ConfigError("k_trap must be at least 2");
  SecretFixed span = lower ? fa.Sub(upper, *lower) : upper;
  auto node = [&](int i) {
    SecretFixed offset = fa.MulPublic(span, static_cast<double>(i) / k_trap);
    return lower ? fa.Add(*lower, offset) : offset;
  };
  SecretFixed ends = fa.Add(f.Evaluate(fa, lower ? *lower : fa.Constant(0.0)),
                            f.Evaluate(fa, upper));
  std::vector<SecretFixed> interior;
  interior.reserve(static_cast<size_t>(k_trap - 1));
  for (int i = 1; i < k_trap; ++i) interior.push_back(f.Evaluate(fa, node(i)));

  std::vector<LinearTerm> terms;
  terms.reserve(interior.size() + 1);
  terms.push_back({FieldElement(1), &ends.raw});
  for (const SecretFixed& v : interior) terms.push_back({FieldElement(2), &v.raw});
  SecretFixed sum{fa.engine().Linear(FieldElement(0), terms)};
  // h * span * sum / 2 with h = 1 / k_trap.
  return fa.MulPublic(fa.Mul(span, sum), 0.5 / k_trap);
}

}  // namespace

SecretFixed TrapezoidIntegral(FixedArith& fa, const FuncSpec& f, const SecretFixed& upper,
                              int k_trap) {
  return Trapezoid(fa, f, nullptr, upper, k_trap);
}

SecretFixed TrapezoidIntegral(FixedArith& fa, const FuncSpec& f, const SecretFixed& lower,
                              const SecretFixed& upper, int k_trap) {
  return Trapezoid(fa, f, &lower, upper, k_trap);
}

Bracket PublicBracket(FixedArith& fa, double lower, double upper) {
  if (!(upper > lower)) throw ConfigError("bracket needs lower < upper");
  return {fa.Constant(lower), fa.Constant(upper), upper - lower};
}

int BisectionIterations(double width, double tol) {
  if (!(tol > 0)) throw ConfigError("bisection tolerance must be positive");
  if (width <= tol) return 0;
  return static_cast<int>(std::ceil(std::log2(width / tol)));
}

int DoublingRounds(const FixedCodec& codec, int max_doublings) {
  // Endpoints reach +-2^D and their sum must stay representable.
  const int capacity = codec.total_bits() - codec.frac_bits() - 3;
  return std::max(0, std::min(max_doublings, capacity));
}

BisectionResult BisectInverse(FixedArith& fa, const SecretCdf& cdf, const SecretFixed& target,
                              std::optional<Bracket> bracket, const BisectionOptions& options) {
  BisectionResult result;
  Bracket b;
  if (bracket) {
    b = *bracket;
    if (!(b.width > 0)) throw ConfigError("bracket width must be positive");
  } else {
    b = PublicBracket(fa, -1.0, 1.0);
    result.doublings = DoublingRounds(fa.codec(), options.max_doublings);
    for (int d = 0; d < result.doublings; ++d) {
      ShareVector low_short = fa.Lt(target, cdf(fa, b.lower));
      ShareVector high_short = fa.Lt(cdf(fa, b.upper), target);
      b.lower = fa.Add(b.lower, fa.MulInteger(low_short, b.lower));
      b.upper = fa.Add(b.upper, fa.MulInteger(high_short, b.upper));
    }
    b.width = std::ldexp(2.0, result.doublings);
  }

  if (options.check_bracket || !bracket) {
    ShareVector below = fa.Lt(target, cdf(fa, b.lower));
    ShareVector above = fa.Lt(cdf(fa, b.upper), target);
    if (!fa.engine().CheckZero(fa.engine().Add(below, above), "bracket")) {
      throw BracketError("target lies outside the bracket's function values");
    }
  }

  result.iterations = BisectionIterations(b.width, options.tol);
  SecretFixed lo = b.lower, hi = b.upper;
  for (int i = 0; i < result.iterations; ++i) {
    SecretFixed mid = fa.MulPublic(fa.Add(lo, hi), 0.5);
    ShareVector go_right = fa.Lt(cdf(fa, mid), target);
    lo = fa.Add(lo, fa.MulInteger(go_right, fa.Sub(mid, lo)));
    hi = fa.Add(mid, fa.MulInteger(go_right, fa.Sub(hi, mid)));
    if (options.trace) options.trace(i, lo, hi);
  }
  result.root = fa.MulPublic(fa.Add(lo, hi), 0.5);
  return result;
}

}  // namespace mprf
