#include "mprf/samplers.h"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "mprf/errors.h"

namespace mprf {

namespace {

FuncSpec NormalDensity() {
  FuncSpec t = FuncSpec::Var(0);
  return FuncSpec::Const(1.0 / std::sqrt(2 * std::numbers::pi)) *
         FuncSpec::Exp(FuncSpec::Const(-0.5) * FuncSpec::Square(t));
}

// XOR of one fresh seed bit per party, via b + s - 2bs.
ShareVector XorSeedBits(Engine& engine) {
  const FieldElement minus_two = engine.field().Neg(FieldElement(2));
  ShareVector x = engine.SeedBit(1);
  for (int i = 2; i <= engine.parties(); ++i) {
    ShareVector s = engine.SeedBit(i);
    ShareVector both = engine.Mul(x, s);
    LinearTerm terms[] = {{FieldElement(1), &x}, {FieldElement(1), &s}, {minus_two, &both}};
    x = engine.Linear(FieldElement(0), terms);
  }
  return x;
}

// Shared integer sum of k Bernoulli draws, optionally followed by `dither`
// extra draws as binary fraction digits: returns Y * 2^dither + D.
ShareVector BernoulliSum(Engine& engine, int k, int dither) {
  std::vector<ShareVector> bits;
  bits.reserve(static_cast<size_t>(k + dither));
  {
    Engine::Scope scope(engine, "bernoulli");
    for (int i = 0; i < k + dither; ++i) bits.push_back(XorSeedBits(engine));
  }
  std::vector<LinearTerm> terms;
  terms.reserve(bits.size());
  const FieldElement top = engine.field().FromUint(uint64_t{1} << dither);
  for (int i = 0; i < k; ++i) terms.push_back({top, &bits[static_cast<size_t>(i)]});
  for (int m = 1; m <= dither; ++m) {
    terms.push_back({engine.field().FromUint(uint64_t{1} << (dither - m)),
                     &bits[static_cast<size_t>(k + m - 1)]});
  }
  return engine.Linear(FieldElement(0), terms);
}

// CLT Gaussian spread uniformly over its lattice cell by kDitherBits extra
// Bernoulli digits: (2 / sqrt(k)) (Y + D - 1/2) - sqrt(k) with D in (0, 1).
SecretFixed DitheredGaussian(FixedArith& fa, int k) {
  const double step = 2.0 / std::sqrt(static_cast<double>(k));
  const double offset = step * (-0.5 + std::ldexp(1.0, -(kDitherBits + 1))) - std::sqrt(double(k));
  ShareVector y = BernoulliSum(fa.engine(), k, kDitherBits);
  return fa.AddConstant(fa.ScaleInteger(y, std::ldexp(step, -kDitherBits)), offset);
}

SecretFixed ClampOpenUnit(FixedArith& fa, const SecretFixed& x) {
  const double lo = fa.resolution();
  const double hi = 1.0 - fa.resolution();
  SecretFixed clamped = fa.Select(fa.LtConstant(x, lo), fa.Constant(lo), x);
  SecretFixed top = fa.Constant(hi);
  return fa.Select(fa.Lt(top, clamped), top, clamped);
}

// Gamma(d, 1) radius and a unit direction.
std::pair<SecretFixed, std::vector<SecretFixed>> RadiusAndDirection(FixedArith& fa, int d,
                                                                    int* iterations) {
  Engine& engine = fa.engine();
  const int k = engine.config().k_clt;
  std::vector<SecretFixed> gaussians;
  gaussians.reserve(static_cast<size_t>(d));
  {
    Engine::Scope scope(engine, "gaussian01");
    for (int i = 0; i < d; ++i) gaussians.push_back(DitheredGaussian(fa, k));
  }
  // 13 extra bits keep the norm's rounding below the unit-length tolerance
  // even for the shortest possible Gaussian vector.
  WideFixed norm = fa.Norm(gaussians, 13);
  std::vector<SecretFixed> direction;
  direction.reserve(static_cast<size_t>(d));
  for (const SecretFixed& g : gaussians) direction.push_back(fa.Div(g, norm));

  SamplerResult<SecretFixed> radius = MpInverseSample(fa, UnivariateDistribution::GammaUnitRate(d));
  *iterations = radius.bisection_iterations;
  return {radius.value, std::move(direction)};
}

}  // namespace

SamplerMeter::SamplerMeter(const Engine& engine)
    : engine_(&engine), first_gate_(engine.gate_index()), start_(engine.ledger().per_party) {}

std::vector<uint64_t> SamplerMeter::Cost() const {
  std::vector<uint64_t> cost = engine_->ledger().per_party;
  for (size_t i = 0; i < cost.size(); ++i) cost[i] -= start_[i];
  return cost;
}

UnivariateDistribution UnivariateDistribution::Uniform01() {
  UnivariateDistribution d;
  d.name = "uniform";
  d.density = FuncSpec::Const(1);
  d.inverse_cdf = FuncSpec::Var(0);
  return d;
}

UnivariateDistribution UnivariateDistribution::Exponential(double rate) {
  if (!(rate > 0)) throw DomainError("exponential rate must be positive");
  FuncSpec t = FuncSpec::Var(0);
  UnivariateDistribution d;
  d.name = "exponential";
  d.density = FuncSpec::Const(rate) * FuncSpec::Exp(FuncSpec::Const(-rate) * t);
  d.inverse_cdf = FuncSpec::Const(-1.0 / rate) * FuncSpec::Ln(FuncSpec::Const(1) - t);
  return d;
}

UnivariateDistribution UnivariateDistribution::Laplace(double scale) {
  if (!(scale > 0)) throw DomainError("laplace scale must be positive");
  FuncSpec t = FuncSpec::Var(0);
  UnivariateDistribution d;
  d.name = "laplace";
  d.density = FuncSpec::Const(0.5 / scale) *
              FuncSpec::Exp(FuncSpec::Const(-1.0 / scale) * FuncSpec::Abs(t));
  d.mass_below_zero = 0.5;
  FuncSpec centered = t - FuncSpec::Const(0.5);
  // -b sgn(u - 1/2) ln(1 - 2|u - 1/2|)
  d.inverse_cdf = FuncSpec::Const(-scale) * FuncSpec::Sign(centered) *
                  FuncSpec::Ln(FuncSpec::Const(1) -
                               FuncSpec::Const(2) * FuncSpec::Abs(centered));
  return d;
}

double GammaBracketUpper(int shape) {
  if (shape < 1) throw DomainError("gamma shape must be at least 1");
  return std::ceil(boost::math::gamma_q_inv(static_cast<double>(shape), 0x1p-24));
}

UnivariateDistribution UnivariateDistribution::GammaUnitRate(int shape) {
  if (shape < 1) throw DomainError("gamma shape must be at least 1");
  FuncSpec r = FuncSpec::Var(0);
  UnivariateDistribution d;
  d.name = "gamma";
  d.density = FuncSpec::Pow(r, shape - 1) *
              (FuncSpec::Const(1.0 / std::tgamma(static_cast<double>(shape))) *
               FuncSpec::Exp(-r));
  d.bracket = std::make_pair(0.0, GammaBracketUpper(shape));
  d.bracket_mass = boost::math::gamma_p(static_cast<double>(shape), d.bracket->second);
  return d;
}

UnivariateDistribution UnivariateDistribution::StandardNormal() {
  UnivariateDistribution d;
  d.name = "normal";
  d.density = NormalDensity();
  d.mass_below_zero = 0.5;
  return d;
}

SamplerResult<ShareVector> MpBernoulli(Engine& engine) {
  SamplerMeter meter(engine);
  Engine::Scope scope(engine, "bernoulli");
  return meter.Finish(XorSeedBits(engine));
}

SamplerResult<ShareVector> MpBinomial(Engine& engine, int k) {
  if (k < 1) throw ConfigError("binomial size must be positive");
  SamplerMeter meter(engine);
  return meter.Finish(BernoulliSum(engine, k, 0));
}

SamplerResult<SecretFixed> MpGaussian01(FixedArith& fa, int k_clt) {
  if (k_clt < 1) throw ConfigError("k_clt must be positive");
  Engine& engine = fa.engine();
  SamplerMeter meter(engine);
  Engine::Scope scope(engine, "gaussian01");
  ShareVector y = BernoulliSum(engine, k_clt, 0);
  const double root = std::sqrt(static_cast<double>(k_clt));
  SecretFixed x = fa.AddConstant(fa.ScaleInteger(y, 2.0 / root), -root);
  return meter.Finish(std::move(x));
}

SamplerResult<SecretFixed> MpUniform01(FixedArith& fa) {
  Engine& engine = fa.engine();
  SamplerMeter meter(engine);
  Engine::Scope scope(engine, "uniform01");
  SecretFixed xi = DitheredGaussian(fa, engine.config().k_clt);
  SecretFixed half_mass = TrapezoidIntegral(fa, NormalDensity(), xi, engine.config().k_trap);
  return meter.Finish(ClampOpenUnit(fa, fa.AddConstant(half_mass, 0.5)));
}

SamplerResult<SecretFixed> MpInverseSample(FixedArith& fa, const UnivariateDistribution& dist) {
  Engine& engine = fa.engine();
  SamplerMeter meter(engine);
  Engine::Scope scope(engine, "inverse:" + dist.name);
  SecretFixed u = MpUniform01(fa).value;
  if (dist.inverse_cdf) return meter.Finish(dist.inverse_cdf->Evaluate(fa, u));

  const int k_trap = engine.config().k_trap;
  BisectionOptions options;
  options.tol = engine.config().bisection_tol;
  BisectionResult solved;
  if (dist.bracket) {
    // Inversion of the density truncated to the bracket. A target past the
    // quadrature's reach settles at the upper end, so no bracket check.
    auto [lo, hi] = *dist.bracket;
    Bracket bracket = PublicBracket(fa, lo, hi);
    SecretFixed target;
    if (dist.bracket_mass) {
      target = fa.MulPublic(u, *dist.bracket_mass);
    } else {
      SecretFixed mass = TrapezoidIntegral(fa, dist.density, bracket.lower, bracket.upper, k_trap);
      if (!engine.CheckZero(fa.LtConstant(mass, 2 * fa.resolution()), "mass")) {
        throw DomainError("density mass over the bracket underflows the fixed-point resolution");
      }
      target = fa.Mul(u, mass);
    }
    SecretCdf cdf = [&](FixedArith& a, const SecretFixed& t) {
      return TrapezoidIntegral(a, dist.density, bracket.lower, t, k_trap);
    };
    options.check_bracket = false;
    solved = BisectInverse(fa, cdf, target, bracket, options);
  } else {
    SecretFixed target = fa.AddConstant(u, -dist.mass_below_zero);
    SecretCdf cdf = [&](FixedArith& a, const SecretFixed& t) {
      return TrapezoidIntegral(a, dist.density, t, k_trap);
    };
    solved = BisectInverse(fa, cdf, target, std::nullopt, options);
  }
  SamplerResult<SecretFixed> out = meter.Finish(std::move(solved.root));
  out.bisection_iterations = solved.iterations;
  return out;
}

SamplerResult<RadialDraw> MpRadialPolar(FixedArith& fa, int d, double lambda) {
  if (d < 1) throw ConfigError("dimension must be at least 1");
  if (!(lambda > 0)) throw DomainError("lambda must be positive");
  Engine& engine = fa.engine();
  SamplerMeter meter(engine);
  Engine::Scope scope(engine, "radial-polar");
  int iterations = 0;
  auto [unit_radius, direction] = RadiusAndDirection(fa, d, &iterations);
  RadialDraw draw;
  draw.radius = fa.MulPublic(unit_radius, 1.0 / lambda);
  draw.direction = std::move(direction);
  for (const SecretFixed& x : draw.direction) draw.value.push_back(fa.Mul(draw.radius, x));
  SamplerResult<RadialDraw> out = meter.Finish(std::move(draw));
  out.bisection_iterations = iterations;
  return out;
}

SamplerResult<RadialDraw> MpRadialPolar(FixedArith& fa, int d, const SecretFixed& lambda) {
  if (d < 1) throw ConfigError("dimension must be at least 1");
  Engine& engine = fa.engine();
  SamplerMeter meter(engine);
  Engine::Scope scope(engine, "radial-polar");
  if (!engine.CheckZero(fa.LtConstant(lambda, fa.resolution()), "lambda")) {
    throw DomainError("lambda must be positive");
  }
  int iterations = 0;
  auto [unit_radius, direction] = RadiusAndDirection(fa, d, &iterations);
  RadialDraw draw;
  draw.radius = fa.Div(unit_radius, lambda);
  draw.direction = std::move(direction);
  for (const SecretFixed& x : draw.direction) draw.value.push_back(fa.Mul(draw.radius, x));
  SamplerResult<RadialDraw> out = meter.Finish(std::move(draw));
  out.bisection_iterations = iterations;
  return out;
}

}  // namespace mprf
