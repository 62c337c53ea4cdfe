#ifndef MPRF_OBLIVIOUS_H_
#define MPRF_OBLIVIOUS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mprf/engine.h"
#include "mprf/fixed_point.h"
#include "mprf/mechanisms.h"

namespace mprf {

enum class OutputKind { kContinuous, kDiscrete };

// One complete protocol execution on a fresh engine; returns the opened
// output.
using ProtocolRun = std::function<double(FixedArith&)>;

struct ProtocolUnderTest {
  std::string id;
  OutputKind kind = OutputKind::kContinuous;
  EngineConfig config;
  ProtocolRun run;
};

// Seeds of the parties in `subset` are frozen: each replays its bit list
// from the start on every trial.
struct OblivTestSpec {
  ProtocolUnderTest protocol;
  std::vector<int> subset;
  std::vector<std::vector<uint8_t>> frozen;
  int trials = 1000;
  double alpha = 0.01;
  uint64_t master_seed = 1;

  // Throws ConfigError: subset must be a nonempty proper subset of the
  // parties without repeats, one nonempty stream per member, trials >= 100.
  void Validate() const;
};

enum class OblivDecision { kConsistent, kRejected, kInconclusive };
const char* OblivDecisionName(OblivDecision d);

struct OblivVerdict {
  std::string protocol_id;
  std::vector<int> subset;
  // "ks2" or "chi2".
  std::string test;
  double statistic = 0;
  double critical = 0;
  double p_value = 1;
  double alpha = 0;
  OblivDecision decision = OblivDecision::kInconclusive;
  std::string finding;

  nlohmann::json ToJson() const;
};

// `trials` runs of the protocol; run r uses master seed DeriveKey(key, r).
// With `frozen` set, the listed parties replay their streams.
std::vector<double> RunTrials(const ProtocolUnderTest& protocol, std::span<const int> subset,
                              const std::vector<std::vector<uint8_t>>* frozen, int trials,
                              uint64_t key, unsigned workers = 0);

// Two-sample KS for continuous outputs; chi-square homogeneity over the
// observed values, adjacent values merged until every pooled bin is large
// enough, for discrete ones. Identical constant samples are inconclusive.
OblivVerdict CompareOutputs(const std::vector<double>& free_arm,
                            const std::vector<double>& frozen_arm, OutputKind kind, double alpha);

// M free runs against M runs with s_I frozen.
OblivVerdict ObliviousnessTest(const OblivTestSpec& spec, unsigned workers = 0);

// A pseudorandom frozen stream.
std::vector<uint8_t> RandomFrozenSeed(uint64_t key, size_t bits = 4096);

// Fraction of `repetitions` independent tests with I = {1} and a fresh
// random frozen seed that reject.
double EstimatePower(const ProtocolUnderTest& protocol, int trials, int repetitions, double alpha,
                     uint64_t key, unsigned workers = 0);

// Each party i computes N_i ~ N(0, sigma^2 / n) from its own seed and
// inputs f(x_i) + N_i; the sum is opened. Not oblivious.
double NaiveGaussianSplit(FixedArith& fa, const QuerySpec& query, const PartyInputs& inputs,
                          double sigma);
// Each party draws N_i' ~ N(0, sigma^2) locally; opens f(x) + min_i N_i'.
// Not oblivious and not normally distributed.
double NaiveGaussianMin(FixedArith& fa, const QuerySpec& query, const PartyInputs& inputs,
                        double sigma);
// Each party draws Y_i1, Y_i2 with standard deviation 1 / sqrt(2 eps)
// locally; opens f(x) + sum_i (Y_i1^2 - Y_i2^2). With two parties the noise
// is exactly Laplace(1 / eps). Not oblivious.
double NaiveLaplaceSquares(FixedArith& fa, const QuerySpec& query, const PartyInputs& inputs,
                           double eps);

// A protocol tested on one or more inputs.
struct CatalogEntry {
  std::string id;
  std::vector<ProtocolUnderTest> inputs;
  int trials = 1000;
};

// The secure samplers and mechanisms on toy inputs (mechanisms also on a
// perturbed input), for an engine configured like `base`.
std::vector<CatalogEntry> SecureCatalog(const EngineConfig& base);
// The three insecure constructions on two parties with the counting query
// (sigma = 3, eps = 0.5).
std::vector<ProtocolUnderTest> NegativeControls(const EngineConfig& base);

struct FamilyVerdict {
  std::string protocol_id;
  double alpha = 0.01;
  // Each case is tested at alpha / cases.size().
  std::vector<OblivVerdict> cases;
  bool rejected = false;

  nlohmann::json ToJson() const;
};

struct SoundnessOptions {
  double alpha = 0.01;
  int random_subsets = 3;
  int seeds_per_subset = 3;
  // Overrides every entry's trial count when positive.
  int trials = 0;
  uint64_t master_seed = 1;
  unsigned workers = 0;
};

// Every singleton and `random_subsets` random proper subsets, each with
// `seeds_per_subset` random frozen seeds, on every input of the entry. The
// family rejects when any case rejects at the Bonferroni level.
FamilyVerdict SoundnessFamily(const CatalogEntry& entry, int parties,
                              const SoundnessOptions& options);

}  // namespace mprf

#endif  // MPRF_OBLIVIOUS_H_
