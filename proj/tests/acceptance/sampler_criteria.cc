#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <random>

#include "acceptance.h"
#include "mprf/bit_source.h"
#include "mprf/samplers.h"
#include "mprf/shamir.h"
#include "oracles.h"

namespace mprf::acceptance {
namespace {

// Halvings of `width` until it is at most `tol`.
int HalvingsTo(double width, double tol) {
  int m = 0;
  while (width > tol) {
    width /= 2;
    ++m;
  }
  return m;
}

}  // namespace

void Criterion01(Outcome& out) {
  const int p = 101, n = 4;
  const Field small(p);
  int failures = 0;
  long cases = 0;
  for (int t = 1; t <= 2; ++t) {
    std::vector<std::vector<int>> subsets;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      if (std::popcount(mask) != t) continue;
      std::vector<int> s;
      for (int i = 0; i < n; ++i) {
        if (mask >> i & 1) s.push_back(i + 1);
      }
      subsets.push_back(s);
    }
    const int polys = t == 1 ? p : p * p;
    for (int secret = 0; secret < p; ++secret) {
      std::vector<std::vector<int>> counts(subsets.size(), std::vector<int>(polys, 0));
      for (int c = 0; c < polys; ++c) {
        std::vector<FieldElement> coeffs = {FieldElement(c % p)};
        if (t == 2) coeffs.push_back(FieldElement(c / p));
        const ShareVector sv = ShamirShareWithCoefficients(small, FieldElement(secret), coeffs, n);
        for (size_t k = 0; k < subsets.size(); ++k) {
          int idx = 0;
          for (int party : subsets[k]) idx = idx * p + static_cast<int>(sv.point(party).value());
          ++counts[k][static_cast<size_t>(idx)];
        }
        std::vector<Share> shares = sv.shares();
        shares.resize(static_cast<size_t>(t + 1));
        failures += ShamirReconstruct(small, shares, t) != FieldElement(secret);
        ++cases;
      }
      // Every t-subset sees each share tuple exactly once: uniform, whatever the secret.
      for (const auto& row : counts) {
        failures += std::any_of(row.begin(), row.end(), [](int k) { return k != 1; });
      }
    }
  }
  out.Check(failures == 0, Fmt("p=101 n=4 t<=2 exhaustive: %ld polynomials, %d failures", cases, failures));

  const Field big(Field::kMersenne61);
  CounterRng rng(0x5a3);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const FieldElement secret = rng.NextField(big);
    const int t = 1 + i % 2;
    const ShareVector sv = ShamirShare(big, secret, t, 5, rng);
    std::vector<Share> shares = sv.shares();
    for (size_t j = shares.size() - 1; j > 0; --j) std::swap(shares[j], shares[rng.Next() % (j + 1)]);
    shares.resize(static_cast<size_t>(t + 1));
    bad += ShamirReconstruct(big, shares, t) != secret;
  }
  out.Check(bad == 0, Fmt("p=2^61-1 round trip: 1000 secrets, %d failures", bad));
}

void Criterion02(Outcome& out) {
  const int draws = 10000;
  Engine engine(DeskConfig(202));
  std::vector<uint64_t> prev(3, 0);
  int ones = 0, bad_cost = 0;
  for (int i = 0; i < draws; ++i) {
    ones += engine.Open(MpBernoulli(engine).value) == FieldElement(1);
    const std::vector<uint64_t>& now = engine.ledger().per_party;
    for (size_t j = 0; j < prev.size(); ++j) bad_cost += now.at(j) != prev[j] + 1;
    prev = now;
  }
  const double e = draws / 2.0;
  const double chi2 = ((ones - e) * (ones - e) + (draws - ones - e) * (draws - ones - e)) / e;
  // Upper 1% point of chi-square with one degree of freedom.
  out.Check(chi2 < 6.6349, Fmt("%d ones of %d, chi2=%.3f < 6.635", ones, draws, chi2));
  const std::vector<uint64_t>& scoped = engine.ledger().by_protocol.at("bernoulli");
  const bool exact = bad_cost == 0 &&
                     std::all_of(scoped.begin(), scoped.end(), [&](uint64_t b) { return b == draws; });
  out.Check(exact, Fmt("seed ledger: 1 bit/party/draw on every draw (%d deviations), %llu bits per party",
                       bad_cost, static_cast<unsigned long long>(scoped.at(0))));
}

void Criterion03(Outcome& out) {
  const int k = 1024, draws = 10000;
  EngineConfig c = DeskConfig(303);
  c.k_clt = k;
  const std::vector<double> x = Column(
      Collect(c, draws, 16, [](FixedArith& fa) { return std::vector<double>{fa.Open(MpGaussian01(fa, 1024).value)}; }),
      0);
  const MeanVar m = Moments(x);
  out.Check(std::abs(m.mean) < 0.03, Fmt("|mean|=%.4f < 0.03", std::abs(m.mean)));
  out.Check(std::abs(m.var - 1) < 0.05, Fmt("|var-1|=%.4f < 0.05", std::abs(m.var - 1)));

  // The output lives on a lattice of step 2/sqrt(k). Its exact distance to
  // Phi (largest gap at or just below an atom) is computed from the binomial.
  const double step = 2 / std::sqrt(static_cast<double>(k));
  const boost::math::binomial_distribution<double> bin(k, 0.5);
  double floor_gap = 0;
  for (int j = 0; j <= k; ++j) {
    const double at = Phi(step * j - std::sqrt(static_cast<double>(k)));
    const double hi = boost::math::cdf(bin, j);
    const double lo = j == 0 ? 0 : boost::math::cdf(bin, j - 1);
    floor_gap = std::max({floor_gap, std::abs(hi - at), std::abs(lo - at)});
  }
  // Upper 1% point of the KS statistic at this sample size.
  const double critical = 1.628 / std::sqrt(static_cast<double>(draws));
  const double ks_raw = Ks(x, Phi);
  out.Check(ks_raw < floor_gap + critical,
            Fmt("raw KS=%.4f < lattice gap %.4f + 1%% critical %.4f", ks_raw, floor_gap, critical));

  // Continuity-corrected: each draw spread uniformly over its own cell.
  std::mt19937_64 jitter(0x303);
  std::uniform_real_distribution<double> cell(-step / 2, step / 2);
  std::vector<double> spread = x;
  for (double& v : spread) v += cell(jitter);
  const double ks = Ks(spread, Phi);
  out.Check(ks < 0.02, Fmt("continuity-corrected KS vs Phi=%.4f < 0.02", ks));
}

void Criterion04(Outcome& out) {
  const std::vector<double> u = Column(
      Collect(DeskConfig(404), 5000, 16,
              [](FixedArith& fa) { return std::vector<double>{fa.Open(MpUniform01(fa).value)}; }),
      0);
  const double ks = Ks(u, [](double x) { return std::clamp(x, 0.0, 1.0); });
  out.Check(ks < 0.03, Fmt("KS vs U(0,1)=%.4f < 0.03 at 5000 draws", ks));
}

void Criterion05(Outcome& out) {
  auto sample = [](const UnivariateDistribution& d, int count, uint64_t seed) {
    return Collect(DeskConfig(seed), count, 16, [&](FixedArith& fa) {
      SamplerResult<SecretFixed> r = MpInverseSample(fa, d);
      return std::vector<double>{fa.Open(r.value), static_cast<double>(r.bisection_iterations)};
    });
  };
  const double ks_exp = Ks(Column(sample(UnivariateDistribution::Exponential(1), 5000, 505), 0),
                           [](double x) { return x <= 0 ? 0 : -std::expm1(-x); });
  const double ks_lap = Ks(Column(sample(UnivariateDistribution::Laplace(1), 5000, 506), 0),
                           [](double x) { return x < 0 ? 0.5 * std::exp(x) : 1 - 0.5 * std::exp(-x); });
  out.Check(ks_exp < 0.03, Fmt("Exp(1) KS=%.4f < 0.03", ks_exp));
  out.Check(ks_lap < 0.03, Fmt("Lap(0,1) KS=%.4f < 0.03", ks_lap));

  // The same exponential solved by bisection on [0, 40] instead of its
  // closed-form inverse.
  UnivariateDistribution bisected = UnivariateDistribution::Exponential(1);
  bisected.inverse_cdf.reset();
  bisected.bracket = std::make_pair(0.0, 40.0);
  bisected.bracket_mass = -std::expm1(-40.0);
  const int bound = HalvingsTo(40, DeskConfig(0).bisection_tol);
  const auto rows = sample(bisected, 200, 507);
  const std::vector<double> iters = Column(rows, 1);
  const bool all_equal =
      std::all_of(iters.begin(), iters.end(), [&](double k) { return k == bound; });
  out.Check(all_equal, Fmt("bisection iterations = %d = ceil(log2(40/tol)) on all 200 draws", bound));
  out.Note(Fmt("bisection-path mean %.3f (Exp(1) mean 1)", Moments(Column(rows, 0)).mean));
}

void Criterion10(Outcome& out) {
  const auto rows = Collect(DeskConfig(1010), 5000, 16, [](FixedArith& fa) {
    SamplerResult<RadialDraw> r = MpRadialPolar(fa, 2, 1.0);
    return std::vector<double>{fa.Open(r.value.value[0]), fa.Open(r.value.value[1]),
                               fa.Open(r.value.direction[0]), fa.Open(r.value.direction[1]),
                               static_cast<double>(r.bisection_iterations)};
  });
  std::vector<double> angle, radius;
  double worst_norm = 0;
  int wrong_iters = 0;
  const double upper = std::ceil(boost::math::gamma_q_inv(2.0, 0x1p-24));
  const int bound = HalvingsTo(upper, DeskConfig(0).bisection_tol);
  for (const auto& r : rows) {
    angle.push_back(std::atan2(r[1], r[0]));
    radius.push_back(std::hypot(r[0], r[1]));
    worst_norm = std::max(worst_norm, std::abs(std::hypot(r[2], r[3]) - 1));
    wrong_iters += r[4] != bound;
  }
  const double ks_angle =
      Ks(angle, [](double a) { return (a + std::numbers::pi) / (2 * std::numbers::pi); });
  const double ks_radius = Ks(radius, [](double r) { return Gamma2Cdf(r, 1); });
  out.Check(ks_angle < 0.03, Fmt("angle KS=%.4f < 0.03", ks_angle));
  out.Check(ks_radius < 0.05, Fmt("radius vs Gamma(2,1) KS=%.4f < 0.05", ks_radius));
  out.Check(worst_norm <= 0x1p-16, Fmt("max | |X'|-1 | = %.2e <= 2^-16 over 5000 draws", worst_norm));
  out.Check(wrong_iters == 0, Fmt("radius bisection iterations = %d on every draw", bound));
}

}  // namespace mprf::acceptance
