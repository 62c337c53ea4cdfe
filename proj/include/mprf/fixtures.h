#ifndef MPRF_FIXTURES_H_
#define MPRF_FIXTURES_H_

#include <cmath>
#include <utility>
#include <vector>

#include "mprf/engine.h"
#include "mprf/func_spec.h"

namespace mprf::fixtures {

// Two classes' score lists; seven scores are at least 60.
inline PartyInputs ScoreLists() { return {{55, 60, 72, 91, 40}, {88, 59, 61, 99, 30, 77}}; }
// The same lists with one record changed (55 -> 65): eight scores pass.
inline PartyInputs PerturbedScoreLists() {
  return {{65, 60, 72, 91, 40}, {88, 59, 61, 99, 30, 77}};
}
inline constexpr double kPassMark = 60;

// Utilities of the four-outcome exponential mechanism (sensitivity 1).
inline std::vector<double> FourUtilities() { return {3, 1, 0, 2}; }
inline std::vector<double> PerturbedFourUtilities() { return {2, 1, 0, 2}; }

// Unnormalised bivariate normal density with unit variances and
// correlation rho.
inline FuncSpec BivariateNormal(double rho) {
  FuncSpec x = FuncSpec::Var(0), y = FuncSpec::Var(1);
  const double scale = 1.0 / (2 * (1 - rho * rho));
  return FuncSpec::Exp(FuncSpec::Const(-scale) *
                       (FuncSpec::Square(x) + FuncSpec::Square(y) -
                        FuncSpec::Const(2 * rho) * x * y));
}
inline double BivariateNormalPlain(double rho, double x, double y) {
  const double scale = 1.0 / (2 * (1 - rho * rho));
  return std::exp(-scale * (x * x + y * y - 2 * rho * x * y));
}

// The Gibbs fixture: correlation 1/2, truncated to [-2, 2]^2.
inline constexpr double kGibbsRho = 0.5;
inline FuncSpec GibbsTarget() { return BivariateNormal(kGibbsRho); }
inline std::vector<std::pair<double, double>> GibbsBox() { return {{-2, 2}, {-2, 2}}; }

}  // namespace mprf::fixtures

#endif  // MPRF_FIXTURES_H_
