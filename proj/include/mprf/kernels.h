#ifndef MPRF_KERNELS_H_
#define MPRF_KERNELS_H_

#include <functional>
#include <optional>

#include "mprf/fixed_point.h"
#include "mprf/func_spec.h"

namespace mprf {

// Composite trapezoid rule for the integral of f over [0, upper] with
// k_trap panels whose nodes scale with upper, so a negative upper gives the
// signed integral.
SecretFixed TrapezoidIntegral(FixedArith& fa, const FuncSpec& f, const SecretFixed& upper,
                              int k_trap);
// Same over [lower, upper].
SecretFixed TrapezoidIntegral(FixedArith& fa, const FuncSpec& f, const SecretFixed& lower,
                              const SecretFixed& upper, int k_trap);

// A shared search interval with a public bound on its width.
struct Bracket {
  SecretFixed lower;
  SecretFixed upper;
  double width = 0;
};

Bracket PublicBracket(FixedArith& fa, double lower, double upper);

// Monotone function evaluated on shares, typically t -> integral of f from 0 to t.
using SecretCdf = std::function<SecretFixed(FixedArith&, const SecretFixed&)>;

struct BisectionResult {
  SecretFixed root;
  int iterations = 0;
  int doublings = 0;
};

struct BisectionOptions {
  double tol = 0x1p-16;
  // Verify F(a) <= target <= F(b) on shares; a violation throws BracketError.
  bool check_bracket = true;
  // Upper limit on bracket doublings when no bracket is given; clipped to
  // what the fixed-point range can hold.
  int max_doublings = 40;
  // Called after each bisection step with the current interval. Test hook.
  std::function<void(int, const SecretFixed&, const SecretFixed&)> trace;
};

// ceil(log2(width / tol)), at least 0.
int BisectionIterations(double width, double tol);

// Solves F(t) = target by bisection entirely on shares. Without a bracket
// the search starts at [-1, 1] and doubles each end obliviously for a fixed
// number of rounds.
BisectionResult BisectInverse(FixedArith& fa, const SecretCdf& cdf, const SecretFixed& target,
                              std::optional<Bracket> bracket, const BisectionOptions& options);

// Number of doublings used when no bracket is given.
int DoublingRounds(const FixedCodec& codec, int max_doublings);

}  // namespace mprf

#endif  // MPRF_KERNELS_H_
