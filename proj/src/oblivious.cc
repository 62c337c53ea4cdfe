#include "mprf/oblivious.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <boost/math/distributions/normal.hpp>

#include "mprf/errors.h"
#include "mprf/fixtures.h"
#include "mprf/parallel.h"
#include "mprf/samplers.h"
#include "mprf/stats.h"

namespace mprf {

namespace {

uint64_t HashId(const std::string& id) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

// A standard normal scaled by `sd`, computed by the party alone from 53 of
// its seed bits.
double LocalNormal(Engine& engine, int party, double sd) {
  const uint64_t bits = engine.DrawLocalSeedBits(party, 53);
  const double u = (static_cast<double>(bits) + 0.5) * 0x1p-53;
  return sd * boost::math::quantile(boost::math::normal(), u);
}

// f evaluated on party `party`'s records alone.
double LocalQuery(const QuerySpec& query, const PartyInputs& inputs, int party) {
  if (query.outputs != 1) throw ConfigError("naive protocols take a scalar query");
  PartyInputs own(inputs.size());
  if (static_cast<size_t>(party) <= inputs.size()) own[party - 1] = inputs[party - 1];
  return query.plain(own)[0];
}

void CheckInputs(const Engine& engine, const PartyInputs& inputs) {
  if (static_cast<int>(inputs.size()) > engine.parties()) {
    throw ConfigError("more input lists than parties");
  }
}

// Adjacent values are merged until each pooled bin meets the expected-count
// floor of the homogeneity test; a short tail joins the last bin.
std::pair<std::vector<uint64_t>, std::vector<uint64_t>> MergedBins(
    const std::vector<double>& a, const std::vector<double>& b) {
  std::map<double, std::pair<uint64_t, uint64_t>> tally;
  for (double x : a) ++tally[x].first;
  for (double x : b) ++tally[x].second;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double need = 5 * (na + nb) / std::min(na, nb);
  std::vector<uint64_t> ca, cb;
  uint64_t acc_a = 0, acc_b = 0;
  for (const auto& [value, counts] : tally) {
    acc_a += counts.first;
    acc_b += counts.second;
    if (static_cast<double>(acc_a + acc_b) >= need) {
      ca.push_back(acc_a);
      cb.push_back(acc_b);
      acc_a = acc_b = 0;
    }
  }
  if (acc_a + acc_b > 0) {
    if (ca.empty()) {
      ca.push_back(0);
      cb.push_back(0);
    }
    ca.back() += acc_a;
    cb.back() += acc_b;
  }
  return {ca, cb};
}

}  // namespace

void OblivTestSpec::Validate() const {
  const int n = protocol.config.parties;
  if (subset.empty() || static_cast<int>(subset.size()) >= n) {
    throw ConfigError("the frozen subset must be nonempty and proper");
  }
  std::set<int> seen;
  for (int i : subset) {
    if (i < 1 || i > n) throw ConfigError("party " + std::to_string(i) + " out of range");
    if (!seen.insert(i).second) throw ConfigError("repeated party in the frozen subset");
  }
  if (frozen.size() != subset.size()) throw ConfigError("one frozen stream per frozen party");
  for (const auto& bits : frozen) {
    if (bits.empty()) throw ConfigError("empty frozen stream");
  }
  if (trials < 100) throw ConfigError("at least 100 trials per arm");
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must lie in (0, 1)");
  if (!protocol.run) throw ConfigError("protocol has no run function");
}

const char* OblivDecisionName(OblivDecision d) {
  switch (d) {
    case OblivDecision::kConsistent:
      return "consistent";
    case OblivDecision::kRejected:
      return "rejected";
    case OblivDecision::kInconclusive:
      return "inconclusive";
  }
  return "unknown";
}

nlohmann::json OblivVerdict::ToJson() const {
  return {{"protocol", protocol_id}, {"subset", subset},      {"test", test},
          {"statistic", statistic},  {"critical", critical},  {"p_value", p_value},
          {"alpha", alpha},          {"decision", OblivDecisionName(decision)},
          {"finding", finding}};
}

std::vector<double> RunTrials(const ProtocolUnderTest& protocol, std::span<const int> subset,
                              const std::vector<std::vector<uint8_t>>* frozen, int trials,
                              uint64_t key, unsigned workers) {
  if (trials < 0) throw ConfigError("negative trial count");
  std::vector<double> out(static_cast<size_t>(trials));
  ParallelFor(
      out.size(),
      [&](size_t r) {
        EngineConfig config = protocol.config;
        config.master_seed = DeriveKey(key, r);
        Engine engine(config);
        if (frozen) {
          for (size_t j = 0; j < subset.size(); ++j) engine.InjectSeedPattern(subset[j], (*frozen)[j]);
        }
        FixedArith fa(engine);
        out[r] = protocol.run(fa);
        if (engine.transcript().any_seed_injected() != (frozen != nullptr)) {
          throw IntegrityError("seed injection flag does not match the arm");
        }
      },
      workers);
  return out;
}

OblivVerdict CompareOutputs(const std::vector<double>& free_arm,
                            const std::vector<double>& frozen_arm, OutputKind kind, double alpha) {
  if (free_arm.empty() || frozen_arm.empty()) throw ConfigError("empty arm");
  OblivVerdict v;
  v.alpha = alpha;
  const double first = free_arm.front();
  auto equal_first = [first](double x) { return x == first; };
  if (std::all_of(free_arm.begin(), free_arm.end(), equal_first) &&
      std::all_of(frozen_arm.begin(), frozen_arm.end(), equal_first)) {
    v.test = kind == OutputKind::kContinuous ? "ks2" : "chi2";
    v.decision = OblivDecision::kInconclusive;
    v.finding = "degenerate samples: both arms constant and equal";
    return v;
  }
  stats::TestDecision d;
  if (kind == OutputKind::kContinuous) {
    v.test = "ks2";
    d = stats::KsTwoSample(free_arm, frozen_arm, alpha);
  } else {
    v.test = "chi2";
    auto [ca, cb] = MergedBins(free_arm, frozen_arm);
    if (ca.size() < 2) {
      d.statistic = 0;
      d.critical = 0;
      d.p_value = 1;
      d.rejected = false;
    } else {
      d = stats::ChiSquareHomogeneity(ca, cb, alpha);
    }
  }
  v.statistic = d.statistic;
  v.critical = d.critical;
  v.p_value = d.p_value;
  if (d.rejected) {
    v.decision = OblivDecision::kRejected;
    v.finding = "output depends on the frozen seeds: protocol not secure to compute M";
  } else {
    v.decision = OblivDecision::kConsistent;
    v.finding = "output distribution unchanged by the frozen seeds";
  }
  return v;
}

OblivVerdict ObliviousnessTest(const OblivTestSpec& spec, unsigned workers) {
  spec.Validate();
  std::vector<double> free_arm =
      RunTrials(spec.protocol, {}, nullptr, spec.trials, DeriveKey(spec.master_seed, 0), workers);
  std::vector<double> frozen_arm = RunTrials(spec.protocol, spec.subset, &spec.frozen,
                                             spec.trials, DeriveKey(spec.master_seed, 1), workers);
  OblivVerdict v = CompareOutputs(free_arm, frozen_arm, spec.protocol.kind, spec.alpha);
  v.protocol_id = spec.protocol.id;
  v.subset = spec.subset;
  return v;
}

std::vector<uint8_t> RandomFrozenSeed(uint64_t key, size_t bits) {
  BitSource source(key);
  std::vector<uint8_t> out(bits);
  for (uint8_t& b : out) b = static_cast<uint8_t>(source.NextBit());
  return out;
}

double EstimatePower(const ProtocolUnderTest& protocol, int trials, int repetitions, double alpha,
                     uint64_t key, unsigned workers) {
  if (repetitions <= 0) throw ConfigError("repetitions must be positive");
  int rejected = 0;
  for (int rep = 0; rep < repetitions; ++rep) {
    OblivTestSpec spec;
    spec.protocol = protocol;
    spec.subset = {1};
    spec.frozen = {RandomFrozenSeed(DeriveKey(key, static_cast<uint64_t>(rep), 1))};
    spec.trials = trials;
    spec.alpha = alpha;
    spec.master_seed = DeriveKey(key, static_cast<uint64_t>(rep));
    rejected += ObliviousnessTest(spec, workers).decision == OblivDecision::kRejected;
  }
  return static_cast<double>(rejected) / repetitions;
}

double NaiveGaussianSplit(FixedArith& fa, const QuerySpec& query, const PartyInputs& inputs,
                          double sigma) {
  Engine& engine = fa.engine();
  CheckInputs(engine, inputs);
  Engine::Scope scope(engine, "naive-gaussian-split");
  const int n = engine.parties();
  const double sd = sigma / std::sqrt(static_cast<double>(n));
  SecretFixed sum = fa.Constant(0);
  for (int i = 1; i <= n; ++i) {
    const double o = LocalQuery(query, inputs, i) + LocalNormal(engine, i, sd);
    sum = fa.Add(sum, fa.Input(i, o));
  }
  return fa.Open(sum);
}

double NaiveGaussianMin(FixedArith& fa, const QuerySpec& query, const PartyInputs& inputs,
                        double sigma) {
  Engine& engine = fa.engine();
  CheckInputs(engine, inputs);
  Engine::Scope scope(engine, "naive-gaussian-min");
  SecretFixed f = fa.Constant(0);
  SecretFixed smallest;
  for (int i = 1; i <= engine.parties(); ++i) {
    f = fa.Add(f, fa.Input(i, LocalQuery(query, inputs, i)));
    SecretFixed noise = fa.Input(i, LocalNormal(engine, i, sigma));
    smallest = i == 1 ? noise : fa.Min(smallest, noise);
  }
  return fa.Open(fa.Add(f, smallest));
}

double NaiveLaplaceSquares(FixedArith& fa, const QuerySpec& query, const PartyInputs& inputs,
                           double eps) {
  if (!(eps > 0)) throw DomainError("epsilon must be positive");
  Engine& engine = fa.engine();
  CheckInputs(engine, inputs);
  Engine::Scope scope(engine, "naive-laplace-squares");
  const double sd = 1 / std::sqrt(2 * eps);
  SecretFixed total = fa.Constant(0);
  for (int i = 1; i <= engine.parties(); ++i) {
    total = fa.Add(total, fa.Input(i, LocalQuery(query, inputs, i)));
    SecretFixed y1 = fa.Input(i, LocalNormal(engine, i, sd));
    SecretFixed y2 = fa.Input(i, LocalNormal(engine, i, sd));
    total = fa.Add(total, fa.Sub(fa.Mul(y1, y1), fa.Mul(y2, y2)));
  }
  return fa.Open(total);
}

std::vector<CatalogEntry> SecureCatalog(const EngineConfig& base) {
  std::vector<CatalogEntry> out;
  auto entry = [&](std::string id, OutputKind kind, int trials, ProtocolRun run) {
    CatalogEntry e;
    e.id = id;
    e.trials = trials;
    e.inputs.push_back({std::move(id), kind, base, std::move(run)});
    out.push_back(std::move(e));
  };
  // Mechanisms are also run on a neighbouring input.
  auto with_inputs = [&](std::string id, OutputKind kind, int trials,
                         const std::function<ProtocolRun(bool)>& make) {
    CatalogEntry e;
    e.id = id;
    e.trials = trials;
    e.inputs.push_back({id + "/toy", kind, base, make(false)});
    e.inputs.push_back({id + "/perturbed", kind, base, make(true)});
    out.push_back(std::move(e));
  };

  entry("bernoulli", OutputKind::kDiscrete, 5000, [](FixedArith& fa) {
    return fa.engine().Open(MpBernoulli(fa.engine()).value) == FieldElement(1) ? 1.0 : 0.0;
  });
  entry("gaussian01", OutputKind::kDiscrete, 1000, [](FixedArith& fa) {
    return fa.Open(MpGaussian01(fa, fa.engine().config().k_clt).value);
  });
  entry("uniform01", OutputKind::kContinuous, 1000,
        [](FixedArith& fa) { return fa.Open(MpUniform01(fa).value); });
  entry("inverse-exponential", OutputKind::kContinuous, 1000, [](FixedArith& fa) {
    return fa.Open(MpInverseSample(fa, UnivariateDistribution::Exponential(1.0)).value);
  });
  entry("radial-polar", OutputKind::kContinuous, 500, [](FixedArith& fa) {
    return fa.Open(MpRadialPolar(fa, 2, 1.0).value.value[0]);
  });

  with_inputs("gaussian-mechanism", OutputKind::kDiscrete, 1000, [](bool perturbed) {
    return [perturbed](FixedArith& fa) {
      const PartyInputs x = perturbed ? fixtures::PerturbedScoreLists() : fixtures::ScoreLists();
      const double sigma = GaussianSigma(1.0, 1e-5, 1.0);
      return MpGaussianMechanism(fa, QuerySpec::CountAtLeast(fixtures::kPassMark), x, sigma)
          .output[0];
    };
  });
  with_inputs("laplace-mechanism", OutputKind::kContinuous, 1000, [](bool perturbed) {
    return [perturbed](FixedArith& fa) {
      const PartyInputs x = perturbed ? fixtures::PerturbedScoreLists() : fixtures::ScoreLists();
      return MpLaplaceMechanism(fa, QuerySpec::CountAtLeast(fixtures::kPassMark), x, 1.0, 1.0)
          .output[0];
    };
  });
  with_inputs("exponential-mechanism", OutputKind::kDiscrete, 1000, [](bool perturbed) {
    return [perturbed](FixedArith& fa) {
      std::vector<SecretFixed> u;
      for (double x : perturbed ? fixtures::PerturbedFourUtilities() : fixtures::FourUtilities()) {
        u.push_back(fa.Input(1, x));
      }
      return static_cast<double>(MpExpMechanismDiscrete(fa, u, 1.0, 1.0));
    };
  });
  entry("gibbs", OutputKind::kContinuous, 200, [](FixedArith& fa) {
    GibbsOptions options;
    options.sweeps = 2;
    options.box = fixtures::GibbsBox();
    std::vector<double> init = {0.0};
    return MpExpMechanismGibbs(fa, fixtures::GibbsTarget(), init, options)[0];
  });
  return out;
}

std::vector<ProtocolUnderTest> NegativeControls(const EngineConfig& base) {
  EngineConfig config = base;
  config.parties = 2;
  config.threshold = 1;
  config.allow_dealer_triples = true;
  const QuerySpec query = QuerySpec::CountAtLeast(fixtures::kPassMark);
  const PartyInputs x = fixtures::ScoreLists();
  return {
      {"naive-gaussian-split", OutputKind::kContinuous, config,
       [=](FixedArith& fa) { return NaiveGaussianSplit(fa, query, x, 3.0); }},
      {"naive-gaussian-min", OutputKind::kContinuous, config,
       [=](FixedArith& fa) { return NaiveGaussianMin(fa, query, x, 3.0); }},
      {"naive-laplace-squares", OutputKind::kContinuous, config,
       [=](FixedArith& fa) { return NaiveLaplaceSquares(fa, query, x, 0.5); }},
  };
}

nlohmann::json FamilyVerdict::ToJson() const {
  nlohmann::json cases_json = nlohmann::json::array();
  for (const OblivVerdict& v : cases) cases_json.push_back(v.ToJson());
  return {{"protocol", protocol_id},
          {"alpha", alpha},
          {"case_alpha", cases.empty() ? alpha : alpha / static_cast<double>(cases.size())},
          {"decision", rejected ? "rejected" : "consistent"},
          {"cases", cases_json}};
}

FamilyVerdict SoundnessFamily(const CatalogEntry& entry, int parties,
                              const SoundnessOptions& options) {
  if (parties < 2) throw ConfigError("obliviousness needs at least two parties");
  if (entry.inputs.empty()) throw ConfigError("catalog entry without inputs");
  const uint64_t key = DeriveKey(options.master_seed, HashId(entry.id));
  const int trials = options.trials > 0 ? options.trials : entry.trials;

  std::vector<std::vector<int>> subsets;
  for (int i = 1; i <= parties; ++i) subsets.push_back({i});
  CounterRng rng(DeriveKey(key, 0x5b5e7));
  const uint64_t proper = (uint64_t{1} << parties) - 2;
  for (int s = 0; s < options.random_subsets; ++s) {
    const uint64_t mask = 1 + rng.Next() % proper;
    std::vector<int> subset;
    for (int i = 0; i < parties; ++i) {
      if (mask >> i & 1) subset.push_back(i + 1);
    }
    subsets.push_back(subset);
  }

  struct Case {
    size_t input;
    std::vector<int> subset;
    std::vector<std::vector<uint8_t>> frozen;
  };
  std::vector<Case> cases;
  for (size_t in = 0; in < entry.inputs.size(); ++in) {
    for (const std::vector<int>& subset : subsets) {
      for (int s = 0; s < options.seeds_per_subset; ++s) {
        Case c{in, subset, {}};
        for (int member : subset) {
          c.frozen.push_back(RandomFrozenSeed(DeriveKey(key, cases.size() + 1, member)));
        }
        cases.push_back(std::move(c));
      }
    }
  }

  FamilyVerdict family;
  family.protocol_id = entry.id;
  family.alpha = options.alpha;
  const double case_alpha = options.alpha / static_cast<double>(cases.size());
  std::vector<std::vector<double>> free_arms;
  for (size_t in = 0; in < entry.inputs.size(); ++in) {
    free_arms.push_back(RunTrials(entry.inputs[in], {}, nullptr, trials,
                                  DeriveKey(key, 0xf2ee, in), options.workers));
  }
  for (size_t ci = 0; ci < cases.size(); ++ci) {
    const Case& c = cases[ci];
    const ProtocolUnderTest& protocol = entry.inputs[c.input];
    std::vector<double> frozen_arm = RunTrials(protocol, c.subset, &c.frozen, trials,
                                               DeriveKey(key, 0xf0e2, ci), options.workers);
    OblivVerdict v = CompareOutputs(free_arms[c.input], frozen_arm, protocol.kind, case_alpha);
    v.protocol_id = protocol.id;
    v.subset = c.subset;
    family.rejected = family.rejected || v.decision == OblivDecision::kRejected;
    family.cases.push_back(std::move(v));
  }
  return family;
}

}  // namespace mprf
