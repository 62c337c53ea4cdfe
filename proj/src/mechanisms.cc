#include "mprf/mechanisms.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mprf/errors.h"

namespace mprf {

namespace {

std::vector<SecretFixed> AddNoise(FixedArith& fa, const std::vector<SecretFixed>& values,
                                  const std::function<SecretFixed()>& noise) {
  std::vector<SecretFixed> out;
  out.reserve(values.size());
  for (const SecretFixed& v : values) out.push_back(fa.Add(v, noise()));
  return out;
}

std::vector<double> OpenAll(FixedArith& fa, const std::vector<SecretFixed>& values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (const SecretFixed& v : values) out.push_back(fa.Open(v));
  return out;
}

std::vector<uint64_t> LedgerDelta(const Engine& engine, const std::vector<uint64_t>& start) {
  std::vector<uint64_t> cost = engine.ledger().per_party;
  for (size_t i = 0; i < cost.size(); ++i) cost[i] -= start[i];
  return cost;
}

void ValidateBox(const std::vector<std::pair<double, double>>& box) {
  for (const auto& [lo, hi] : box) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
      throw ConfigError("support box bounds must be finite with lower < upper");
    }
  }
}

}  // namespace

void PrivacyParams::Validate() const {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be positive");
  if (!(delta >= 0 && delta < 1)) throw DomainError("delta must lie in [0, 1)");
  if (!(sensitivity >= 0) || !std::isfinite(sensitivity)) {
    throw DomainError("sensitivity must be non-negative");
  }
}

QuerySpec QuerySpec::CountAtLeast(double threshold) {
  QuerySpec q;
  q.id = "count-at-least";
  q.evaluate = [threshold](FixedArith& fa, const std::vector<std::vector<SecretFixed>>& inputs) {
    std::vector<ShareVector> below;
    for (const auto& party : inputs) {
      for (const SecretFixed& x : party) below.push_back(fa.LtConstant(x, threshold));
    }
    const Field& field = fa.engine().field();
    std::vector<LinearTerm> terms;
    for (const ShareVector& b : below) terms.push_back({field.Neg(FieldElement(1)), &b});
    ShareVector count = fa.engine().Linear(field.FromUint(below.size()), terms);
    return std::vector<SecretFixed>{fa.FromInteger(count)};
  };
  q.plain = [threshold](const PartyInputs& inputs) {
    double count = 0;
    for (const auto& party : inputs) {
      for (double x : party) count += x >= threshold;
    }
    return std::vector<double>{count};
  };
  return q;
}

QuerySpec QuerySpec::ClippedSum(double bound) {
  if (!(bound > 0)) throw DomainError("clip bound must be positive");
  QuerySpec q;
  q.id = "clipped-sum";
  q.l1_sensitivity = bound;
  q.l2_sensitivity = bound;
  q.evaluate = [bound](FixedArith& fa, const std::vector<std::vector<SecretFixed>>& inputs) {
    SecretFixed sum = fa.Constant(0);
    SecretFixed zero = fa.Constant(0), top = fa.Constant(bound);
    for (const auto& party : inputs) {
      for (const SecretFixed& x : party) sum = fa.Add(sum, fa.Min(fa.Max(x, zero), top));
    }
    return std::vector<SecretFixed>{sum};
  };
  q.plain = [bound](const PartyInputs& inputs) {
    double sum = 0;
    for (const auto& party : inputs) {
      for (double x : party) sum += std::clamp(x, 0.0, bound);
    }
    return std::vector<double>{sum};
  };
  return q;
}

std::vector<SecretFixed> EvaluateQuery(FixedArith& fa, const QuerySpec& query,
                                       const PartyInputs& inputs) {
  if (static_cast<int>(inputs.size()) > fa.engine().parties()) {
    throw ConfigError("more input lists than parties");
  }
  std::vector<std::vector<SecretFixed>> shared(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) {
    for (double x : inputs[i]) shared[i].push_back(fa.Input(static_cast<int>(i) + 1, x));
  }
  std::vector<SecretFixed> out = query.evaluate(fa, shared);
  if (static_cast<int>(out.size()) != query.outputs) {
    throw ConfigError("query produced " + std::to_string(out.size()) + " outputs, declared " +
                      std::to_string(query.outputs));
  }
  return out;
}

double EnumerateSensitivity(const QuerySpec& query, std::span<const double> domain,
                            std::span<const int> records, bool l1) {
  if (domain.empty()) throw ConfigError("empty domain");
  int total = 0;
  for (int r : records) {
    if (r < 0) throw ConfigError("negative record count");
    total += r;
  }
  const size_t base = domain.size();
  size_t datasets = 1;
  for (int i = 0; i < total; ++i) {
    if (datasets > 1000000 / base) throw ConfigError("toy domain too large to enumerate");
    datasets *= base;
  }
  // Digit i of a dataset index is the domain position of record i.
  auto build = [&](size_t index) {
    PartyInputs inputs(records.size());
    for (size_t p = 0; p < records.size(); ++p) {
      for (int r = 0; r < records[p]; ++r) {
        inputs[p].push_back(domain[index % base]);
        index /= base;
      }
    }
    return inputs;
  };
  std::vector<std::vector<double>> values(datasets);
  for (size_t d = 0; d < datasets; ++d) values[d] = query.plain(build(d));

  double worst = 0;
  for (size_t d = 0; d < datasets; ++d) {
    size_t stride = 1;
    for (int pos = 0; pos < total; ++pos, stride *= base) {
      const size_t digit = (d / stride) % base;
      // Each unordered neighbour pair once.
      for (size_t other = digit + 1; other < base; ++other) {
        const std::vector<double>& a = values[d];
        const std::vector<double>& b = values[d + (other - digit) * stride];
        double dist = 0;
        for (size_t j = 0; j < a.size(); ++j) {
          const double diff = std::fabs(a[j] - b[j]);
          dist += l1 ? diff : diff * diff;
        }
        worst = std::max(worst, l1 ? dist : std::sqrt(dist));
      }
    }
  }
  return worst;
}

double ExactSum(std::span<const double> xs) {
  // Shewchuk's non-overlapping partials with a correctly rounded final step.
  std::vector<double> partials;
  for (double x : xs) {
    if (!std::isfinite(x)) throw DomainError("non-finite summand");
    size_t used = 0;
    for (double y : partials) {
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0) partials[used++] = lo;
      x = hi;
    }
    partials.resize(used);
    partials.push_back(x);
  }
  if (partials.empty()) return 0;
  size_t n = partials.size();
  double hi = partials[--n];
  double lo = 0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0) break;
  }
  // Round half-even across the remaining partials.
  if (n > 0 && ((lo < 0 && partials[n - 1] < 0) || (lo > 0 && partials[n - 1] > 0))) {
    const double y = lo * 2;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

void BudgetLedger::Add(Charge charge) {
  if (!(charge.epsilon >= 0) || !std::isfinite(charge.epsilon)) {
    throw DomainError("charge epsilon must be non-negative");
  }
  if (!(charge.delta >= 0 && charge.delta < 1)) throw DomainError("charge delta must lie in [0, 1)");
  charges_.push_back(std::move(charge));
}

double BudgetLedger::epsilon() const {
  std::vector<double> xs;
  for (const Charge& c : charges_) xs.push_back(c.epsilon);
  return ExactSum(xs);
}

double BudgetLedger::delta() const {
  std::vector<double> xs;
  for (const Charge& c : charges_) xs.push_back(c.delta);
  return ExactSum(xs);
}

void BudgetLedger::Merge(const BudgetLedger& other) {
  for (const Charge& c : other.charges_) charges_.push_back(c);
}

nlohmann::json BudgetLedger::ToJson() const {
  nlohmann::json out;
  out["charges"] = nlohmann::json::array();
  for (const Charge& c : charges_) {
    out["charges"].push_back({{"epsilon", c.epsilon}, {"delta", c.delta}, {"label", c.label}});
  }
  out["total"] = {{"epsilon", epsilon()}, {"delta", delta()}};
  return out;
}

std::pair<double, double> AccountantCompose(std::span<const std::pair<double, double>> charges) {
  BudgetLedger ledger;
  for (const auto& [eps, delta] : charges) ledger.Add({eps, delta, ""});
  return {ledger.epsilon(), ledger.delta()};
}

double GaussianSigma(double eps, double delta, double l2_sens) {
  if (!(eps > 0) || !std::isfinite(eps)) throw DomainError("epsilon must be positive");
  if (!(delta > 0 && delta < 1)) throw DomainError("delta must lie in (0, 1)");
  if (!(l2_sens >= 0) || !std::isfinite(l2_sens)) throw DomainError("sensitivity must be >= 0");
  return 1.001 * std::sqrt(2 * std::log(1.25 / delta)) * l2_sens / eps;
}

nlohmann::json MechanismResult::ToJson() const {
  return {{"query_id", query_id},
          {"params", params},
          {"output", output},
          {"charge", {{"epsilon", charge.epsilon}, {"delta", charge.delta}, {"label", charge.label}}},
          {"seed_cost", seed_cost}};
}

SecretFixed MpGaussianNoise(FixedArith& fa, double sigma, GaussianScaling scaling) {
  if (!(sigma >= 0) || !std::isfinite(sigma)) throw DomainError("sigma must be non-negative");
  Engine& engine = fa.engine();
  Engine::Scope scope(engine, "gaussian-mechanism");
  const int k = engine.config().k_clt;
  ShareVector y = MpBinomial(engine, k).value;
  // sqrt(k) (sigma Y / k - sigma / 2), doubled in the corrected form.
  const double c = scaling == GaussianScaling::kCorrected ? 2.0 : 1.0;
  const double root = std::sqrt(static_cast<double>(k));
  return fa.AddConstant(fa.ScaleInteger(y, c * sigma / root), -c * sigma * root / 2);
}

MechanismResult MpGaussianMechanism(FixedArith& fa, const QuerySpec& query,
                                    const PartyInputs& inputs, double sigma,
                                    GaussianScaling scaling, const PrivacyParams* charged,
                                    BudgetLedger* ledger) {
  if (charged) charged->Validate();
  const std::vector<uint64_t> start = fa.engine().ledger().per_party;
  std::vector<SecretFixed> f = EvaluateQuery(fa, query, inputs);
  std::vector<SecretFixed> noisy =
      AddNoise(fa, f, [&] { return MpGaussianNoise(fa, sigma, scaling); });
  MechanismResult result;
  result.output = OpenAll(fa, noisy);
  result.query_id = query.id;
  result.params = {{"mechanism", "gaussian"},
                   {"sigma", sigma},
                   {"scaling", scaling == GaussianScaling::kCorrected ? "corrected" : "paper-literal"},
                   {"k_clt", fa.engine().config().k_clt}};
  if (charged) {
    result.charge = {charged->epsilon, charged->delta, "gaussian:" + query.id};
    if (ledger) ledger->Add(result.charge);
  }
  result.seed_cost = LedgerDelta(fa.engine(), start);
  return result;
}

SecretFixed MpLaplaceNoise(FixedArith& fa, double scale) {
  Engine::Scope scope(fa.engine(), "laplace-mechanism");
  return MpInverseSample(fa, UnivariateDistribution::Laplace(scale)).value;
}

MechanismResult MpLaplaceMechanism(FixedArith& fa, const QuerySpec& query,
                                   const PartyInputs& inputs, double eps, double l1_sens,
                                   BudgetLedger* ledger) {
  PrivacyParams params{eps, 0, l1_sens};
  params.Validate();
  if (!(l1_sens > 0)) throw DomainError("sensitivity must be positive");
  const std::vector<uint64_t> start = fa.engine().ledger().per_party;
  std::vector<SecretFixed> f = EvaluateQuery(fa, query, inputs);
  const double scale = l1_sens / eps;
  std::vector<SecretFixed> noisy = AddNoise(fa, f, [&] { return MpLaplaceNoise(fa, scale); });
  MechanismResult result;
  result.output = OpenAll(fa, noisy);
  result.query_id = query.id;
  result.params = {{"mechanism", "laplace"}, {"epsilon", eps}, {"l1_sensitivity", l1_sens}};
  result.charge = {eps, 0, "laplace:" + query.id};
  if (ledger) ledger->Add(result.charge);
  result.seed_cost = LedgerDelta(fa.engine(), start);
  return result;
}

int MpExpMechanismDiscrete(FixedArith& fa, std::span<const SecretFixed> utilities, double eps,
                           double du, BudgetLedger* ledger) {
  if (utilities.empty()) throw ConfigError("empty range");
  PrivacyParams{eps, 0, du}.Validate();
  if (!(du > 0)) throw DomainError("utility sensitivity must be positive");
  Engine& engine = fa.engine();
  Engine::Scope scope(engine, "exp-mechanism");
  if (utilities.size() == 1) {
    if (ledger) ledger->Add({eps, 0, "exp-mechanism"});
    return 1;
  }

  SecretFixed top = utilities[0];
  for (size_t i = 1; i < utilities.size(); ++i) top = fa.Max(top, utilities[i]);
  const double rate = eps / (2 * du);
  std::vector<SecretFixed> p;
  p.reserve(utilities.size());
  for (const SecretFixed& u : utilities) p.push_back(fa.Exp(fa.MulPublic(fa.Sub(u, top), rate)));

  SecretFixed u = MpUniform01(fa).value;
  SecretFixed total = p[0];
  for (size_t i = 1; i < p.size(); ++i) total = fa.Add(total, p[i]);
  SecretFixed xi = fa.Mul(u, total);

  // X = 1 + sum over k = 2..|R| of LT(S_{k-1}, xi), S_{k-1} = p_1 + ... + p_{k-1}.
  std::vector<ShareVector> steps;
  SecretFixed s = p[0];
  for (size_t k = 1; k < p.size(); ++k) {
    steps.push_back(fa.Lt(s, xi));
    s = fa.Add(s, p[k]);
  }
  std::vector<LinearTerm> terms;
  for (const ShareVector& b : steps) terms.push_back({FieldElement(1), &b});
  const FieldElement x = engine.Open(engine.Linear(FieldElement(1), terms));
  if (ledger) ledger->Add({eps, 0, "exp-mechanism"});
  return static_cast<int>(engine.field().ToSigned(x));
}

std::vector<SecretFixed> MpGibbsChain(FixedArith& fa, const FuncSpec& density,
                                      std::span<const double> init, const GibbsOptions& options) {
  const int k = static_cast<int>(options.box.size());
  if (k < 1) throw ConfigError("support box must have at least one dimension");
  ValidateBox(options.box);
  if (density.MaxVar() >= k) throw ConfigError("density mentions a variable outside the box");
  if (static_cast<int>(init.size()) != k - 1) {
    throw ConfigError("init must hold the first k-1 coordinates");
  }
  if (options.sweeps < 1) throw ConfigError("sweeps must be at least 1");
  for (int j = 0; j < k - 1; ++j) {
    if (!(init[j] >= options.box[j].first && init[j] <= options.box[j].second)) {
      throw ConfigError("init lies outside the support box");
    }
  }
  Engine::Scope scope(fa.engine(), "gibbs");

  auto draw = [&](const std::vector<SecretFixed>& state, int j) {
    UnivariateDistribution conditional;
    conditional.name = "gibbs-conditional";
    conditional.density = density.Bind(fa, state, j);
    conditional.bracket = options.box[static_cast<size_t>(j)];
    return MpInverseSample(fa, conditional).value;
  };

  std::vector<SecretFixed> state;
  for (double x : init) state.push_back(fa.Constant(x));
  if (k == 1) {
    // Every sweep redraws from f itself, so one draw has the same law.
    state.push_back(fa.Constant(0));
    state[0] = draw(state, 0);
    return state;
  }
  state.push_back(fa.Constant(0.5 * (options.box.back().first + options.box.back().second)));
  state[static_cast<size_t>(k - 1)] = draw(state, k - 1);
  for (int sweep = 0; sweep < options.sweeps; ++sweep) {
    for (int j = 0; j < k; ++j) state[static_cast<size_t>(j)] = draw(state, j);
  }
  return state;
}

std::vector<double> MpExpMechanismGibbs(FixedArith& fa, const FuncSpec& density,
                                        std::span<const double> init,
                                        const GibbsOptions& options) {
  if (options.charged) options.charged->Validate();
  std::vector<double> out = OpenAll(fa, MpGibbsChain(fa, density, init, options));
  if (options.charged && options.ledger) {
    options.ledger->Add({options.charged->epsilon, options.charged->delta, "gibbs"});
  }
  return out;
}

}  // namespace mprf
