#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>

#include "acceptance.h"
#include "mprf/bit_source.h"
#include "mprf/fixtures.h"
#include "mprf/mechanisms.h"
#include "mprf/parallel.h"
#include "oracles.h"

namespace mprf::acceptance {
namespace {

// Number of scores at or above the pass mark, counted in the clear.
double CountPassing(const PartyInputs& lists) {
  double f = 0;
  for (const auto& l : lists) {
    for (double s : l) f += s >= fixtures::kPassMark;
  }
  return f;
}

std::vector<double> Histogram(const std::vector<double>& indices, size_t outcomes) {
  std::vector<double> h(outcomes, 0);
  for (double i : indices) h.at(static_cast<size_t>(i) - 1) += 1.0 / indices.size();
  return h;
}

}  // namespace

void Criterion06(Outcome& out) {
  const double eps = 1, delta = 1e-5;
  const double bound = std::sqrt(2 * std::log(1.25 / delta)) / eps;
  const double sigma = GaussianSigma(eps, delta, 1);
  out.Check(sigma > bound && sigma < 1.002 * bound && std::abs(sigma - 4.845) < 0.01,
            Fmt("sigma=%.4f just above sqrt(2 ln(1.25/delta))=%.4f", sigma, bound));

  const QuerySpec q = QuerySpec::CountAtLeast(fixtures::kPassMark);
  const PartyInputs x = fixtures::ScoreLists();
  const double f = CountPassing(x);
  auto noise_std = [&](GaussianScaling scaling, uint64_t seed) {
    const std::vector<double> y = Column(Collect(DeskConfig(seed), 5000, 16, [&](FixedArith& fa) {
      return std::vector<double>{MpGaussianMechanism(fa, q, x, sigma, scaling).output[0] - f};
    }), 0);
    return std::sqrt(Moments(y).var);
  };
  const double corrected = noise_std(GaussianScaling::kCorrected, 606);
  const double literal = noise_std(GaussianScaling::kPaperLiteral, 607);
  out.Check(std::abs(corrected / sigma - 1) < 0.05,
            Fmt("corrected std=%.4f within 5%% of sigma", corrected));
  out.Check(std::abs(literal / (sigma / 2) - 1) < 0.05,
            Fmt("literal std=%.4f within 5%% of sigma/2=%.4f", literal, sigma / 2));
}

void Criterion07(Outcome& out) {
  const double eps = 1;
  const QuerySpec q = QuerySpec::CountAtLeast(fixtures::kPassMark);
  const PartyInputs x = fixtures::ScoreLists(), y = fixtures::PerturbedScoreLists();
  auto release = [&](const PartyInputs& lists, uint64_t seed) {
    return Column(Collect(DeskConfig(seed), 5000, 16, [&](FixedArith& fa) {
      return std::vector<double>{MpLaplaceMechanism(fa, q, lists, eps, 1).output[0]};
    }), 0);
  };
  const std::vector<double> a = release(x, 707), b = release(y, 708);
  std::vector<double> noise;
  for (double v : a) noise.push_back(v - CountPassing(x));
  const double var = Moments(noise).var;
  const double target = 2 / (eps * eps);
  out.Check(std::abs(var / target - 1) < 0.1,
            Fmt("noise variance=%.4f within 10%% of 2(df/eps)^2=%.1f", var, target));

  // Unit bins [k, k+1); "well populated" = at least 10% of the runs in both arms.
  std::map<long, std::pair<int, int>> bins;
  for (double v : a) ++bins[static_cast<long>(std::floor(v))].first;
  for (double v : b) ++bins[static_cast<long>(std::floor(v))].second;
  double worst = 0;
  int used = 0;
  for (const auto& [k, counts] : bins) {
    if (counts.first < 500 || counts.second < 500) continue;
    ++used;
    const double r = static_cast<double>(counts.first) / counts.second;
    worst = std::max({worst, r, 1 / r});
  }
  const double limit = std::exp(eps) * 1.15;
  out.Check(used >= 2 && worst <= limit,
            Fmt("likelihood ratio max=%.3f <= e^eps*1.15=%.3f over %d bins", worst, limit, used));
}

void Criterion08(Outcome& out) {
  const double eps = 1, du = 1;
  const std::vector<double> u = fixtures::FourUtilities();
  std::vector<double> exact;
  double z = 0;
  for (double v : u) z += std::exp(eps * v / (2 * du));
  for (double v : u) exact.push_back(std::exp(eps * v / (2 * du)) / z);
  auto draws = [&](double shift, uint64_t seed) {
    return Histogram(Column(Collect(DeskConfig(seed), 10000, 16, [&](FixedArith& fa) {
      std::vector<SecretFixed> shared;
      for (double v : u) shared.push_back(fa.Input(1, v + shift));
      return std::vector<double>{static_cast<double>(MpExpMechanismDiscrete(fa, shared, eps, du))};
    }), 0), u.size());
  };
  const std::vector<double> base = draws(0, 808), shifted = draws(10, 809);
  const double tv = TotalVariation(base, exact), tv_shift = TotalVariation(shifted, exact);
  out.Check(tv <= 0.02, Fmt("TV to softmax=%.4f <= 0.02", tv));
  out.Check(tv_shift <= 0.02, Fmt("utilities+10: TV to softmax=%.4f <= 0.02", tv_shift));
  out.Note(Fmt("TV between the two runs %.4f", TotalVariation(base, shifted)));
}

void Criterion09(Outcome& out) {
  const int chains = 2000;
  GibbsOptions options;
  options.sweeps = 200;
  options.box = fixtures::GibbsBox();
  const FuncSpec density = fixtures::GibbsTarget();
  const std::vector<double> init = {0.0};
  std::vector<double> xs(chains), ys(chains);
  std::atomic<int> done{0};
  ParallelFor(chains, [&](size_t c) {
    Engine engine(DeskConfig(DeriveKey(909, c)));
    FixedArith fa(engine);
    const std::vector<double> state = MpExpMechanismGibbs(fa, density, init, options);
    xs[c] = state[0];
    ys[c] = state[1];
    const int d = ++done;
    if (d % 100 == 0) std::fprintf(stderr, "gibbs: %d/%d chains\n", d, chains);
  });
  const TruncatedMarginal marginal(fixtures::kGibbsRho, 2.0);
  const double ks_x = Ks(xs, marginal), ks_y = Ks(ys, marginal);
  out.Check(ks_x < 0.05, Fmt("x marginal KS=%.4f < 0.05", ks_x));
  out.Check(ks_y < 0.05, Fmt("y marginal KS=%.4f < 0.05", ks_y));
  const double mx = Moments(xs).mean, my = Moments(ys).mean;
  // Standard error of each mean is about 0.02.
  out.Check(std::abs(mx) < 0.1 && std::abs(my) < 0.1, Fmt("mean=(%.4f, %.4f)", mx, my));
}

}  // namespace mprf::acceptance
