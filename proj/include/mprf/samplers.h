#ifndef MPRF_SAMPLERS_H_
#define MPRF_SAMPLERS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mprf/fixed_point.h"
#include "mprf/func_spec.h"
#include "mprf/kernels.h"

namespace mprf {

// A sampler's value plus the gate range it occupied and the seed bits each
// party spent on it.
template <typename T>
struct SamplerResult {
  T value;
  uint64_t first_gate = 0;
  uint64_t last_gate = 0;
  std::vector<uint64_t> seed_cost;
  int bisection_iterations = 0;
};

// Records gate range and seed cost around a sampler body.
class SamplerMeter {
 public:
  explicit SamplerMeter(const Engine& engine);
  template <typename T>
  SamplerResult<T> Finish(T value) const {
    SamplerResult<T> out{std::move(value), first_gate_ + 1, engine_->gate_index(), {}, 0};
    out.seed_cost = Cost();
    return out;
  }

 private:
  std::vector<uint64_t> Cost() const;

  const Engine* engine_;
  uint64_t first_gate_;
  std::vector<uint64_t> start_;
};

// One-dimensional target for inversion sampling.
struct UnivariateDistribution {
  std::string name;
  // Density f(t) in Var(0).
  FuncSpec density;
  // Mass of f below 0, so that F(t) = mass_below_zero + integral of f over [0, t].
  double mass_below_zero = 0;
  // Closed-form F^{-1}(u) in Var(0), used in place of bisection when present.
  std::optional<FuncSpec> inverse_cdf;
  // Public search interval for bisection.
  std::optional<std::pair<double, double>> bracket;
  // Exact mass of f over the bracket when it is public; otherwise the
  // trapezoid estimate over the bracket is used.
  std::optional<double> bracket_mass;

  static UnivariateDistribution Uniform01();
  static UnivariateDistribution Exponential(double rate);
  static UnivariateDistribution Laplace(double scale);
  // Gamma(shape, rate 1) by bisection on the trapezoid CDF.
  static UnivariateDistribution GammaUnitRate(int shape);
  // Standard normal by bisection; mainly a test target.
  static UnivariateDistribution StandardNormal();
};

// XOR of one fresh seed bit from every party.
SamplerResult<ShareVector> MpBernoulli(Engine& engine);
// Integer share of the sum of k Bernoulli bits.
SamplerResult<ShareVector> MpBinomial(Engine& engine, int k);
// (2 / sqrt(k)) * (sum of k Bernoulli bits) - sqrt(k).
SamplerResult<SecretFixed> MpGaussian01(FixedArith& fa, int k_clt);
// 1/2 + integral of the normal density from 0 to a CLT Gaussian, clamped
// into [2^-f, 1 - 2^-f]. The Gaussian carries kDitherBits extra Bernoulli
// digits spreading each lattice point over its cell, so the output has no
// atoms.
SamplerResult<SecretFixed> MpUniform01(FixedArith& fa);
SamplerResult<SecretFixed> MpInverseSample(FixedArith& fa, const UnivariateDistribution& dist);

struct RadialDraw {
  std::vector<SecretFixed> value;
  std::vector<SecretFixed> direction;
  SecretFixed radius;
};

// Density proportional to exp(-lambda |x|) on R^d: a direction from d
// normalized Gaussians times a Gamma(d, lambda) radius.
SamplerResult<RadialDraw> MpRadialPolar(FixedArith& fa, int d, double lambda);
SamplerResult<RadialDraw> MpRadialPolar(FixedArith& fa, int d, const SecretFixed& lambda);

// Extra Bernoulli digits dithering a CLT Gaussian inside its lattice cell
// (uniform input and polar directions).
inline constexpr int kDitherBits = 8;

// Upper bracket end for Gamma(shape, 1) inversion.
double GammaBracketUpper(int shape);

}  // namespace mprf

#endif  // MPRF_SAMPLERS_H_
