#ifndef MPRF_MECHANISMS_H_
#define MPRF_MECHANISMS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mprf/fixed_point.h"
#include "mprf/func_spec.h"
#include "mprf/samplers.h"

namespace mprf {

// (epsilon, delta) with the sensitivity the noise is calibrated to.
struct PrivacyParams {
  double epsilon = 1;
  double delta = 0;
  double sensitivity = 1;

  // Throws DomainError unless epsilon > 0, 0 <= delta < 1, sensitivity >= 0.
  void Validate() const;
};

// f(x) = (f_1(x), ..., f_m(x)) over per-party inputs, evaluable on shares
// and in the clear.
struct QuerySpec {
  std::string id;
  int outputs = 1;
  double l1_sensitivity = 1;
  double l2_sensitivity = 1;
  // inputs[i] holds party i+1's shared values.
  std::function<std::vector<SecretFixed>(FixedArith&,
                                         const std::vector<std::vector<SecretFixed>>&)>
      evaluate;
  std::function<std::vector<double>(const PartyInputs&)> plain;

  // Number of values >= threshold across all parties (sensitivity 1).
  static QuerySpec CountAtLeast(double threshold);
  // Sum of values clipped to [0, bound] across all parties (sensitivity bound).
  static QuerySpec ClippedSum(double bound);
};

// Every party shares each of its values, then the query runs on shares.
std::vector<SecretFixed> EvaluateQuery(FixedArith& fa, const QuerySpec& query,
                                       const PartyInputs& inputs);

// Largest ||f(x) - f(y)|| (l1 when l1 is true, else l2) over datasets whose
// records take values in `domain`, with `records[i]` records for party i+1,
// and neighbours y that replace one record. Enumerates every dataset; throws
// ConfigError above 10^6 datasets.
double EnumerateSensitivity(const QuerySpec& query, std::span<const double> domain,
                            std::span<const int> records, bool l1);

struct Charge {
  double epsilon = 0;
  double delta = 0;
  std::string label;
};

// Sequential composition: totals are the exact sums of the charges,
// rounded once.
class BudgetLedger {
 public:
  void Add(Charge charge);
  const std::vector<Charge>& charges() const { return charges_; }
  double epsilon() const;
  double delta() const;
  // Appends another run's charges.
  void Merge(const BudgetLedger& other);
  nlohmann::json ToJson() const;

 private:
  std::vector<Charge> charges_;
};

std::pair<double, double> AccountantCompose(std::span<const std::pair<double, double>> charges);

// Correctly rounded sum of doubles.
double ExactSum(std::span<const double> xs);

// sqrt(2 ln(1.25 / delta)) * l2_sens / eps, times 1.001 to sit strictly
// above the bound. Throws DomainError.
double GaussianSigma(double eps, double delta, double l2_sens);

enum class GaussianScaling {
  // X' = 2 sqrt(k) (Ybar - sigma / 2): standard deviation sigma.
  kCorrected,
  // X' = sqrt(k) (Ybar - sigma / 2), the literal scaling: standard deviation sigma / 2.
  kPaperLiteral,
};

struct MechanismResult {
  std::vector<double> output;
  Charge charge;
  nlohmann::json params = nlohmann::json::object();
  std::string query_id;
  std::vector<uint64_t> seed_cost;

  nlohmann::json ToJson() const;
};

// Binomial-sum Gaussian noise per coordinate; opens only f(x) + noise.
// A ledger, when given, receives one (eps, delta) charge.
MechanismResult MpGaussianMechanism(FixedArith& fa, const QuerySpec& query,
                                    const PartyInputs& inputs, double sigma,
                                    GaussianScaling scaling = GaussianScaling::kCorrected,
                                    const PrivacyParams* charged = nullptr,
                                    BudgetLedger* ledger = nullptr);
// Noise only, for callers that already hold f(x) on shares.
SecretFixed MpGaussianNoise(FixedArith& fa, double sigma, GaussianScaling scaling);

// Laplace(l1_sens / eps) noise per coordinate by closed-form inversion.
MechanismResult MpLaplaceMechanism(FixedArith& fa, const QuerySpec& query,
                                   const PartyInputs& inputs, double eps, double l1_sens,
                                   BudgetLedger* ledger = nullptr);
SecretFixed MpLaplaceNoise(FixedArith& fa, double scale);

// Sequential-search exponential mechanism over R = {1..|R|}. Utilities are
// shifted by their shared maximum before exponentiation. Returns the opened
// index in 1..|R|.
int MpExpMechanismDiscrete(FixedArith& fa, std::span<const SecretFixed> utilities, double eps,
                           double du, BudgetLedger* ledger = nullptr);

struct GibbsOptions {
  int sweeps = 200;
  // Per-coordinate public support bounds.
  std::vector<std::pair<double, double>> box;
  // Optional charge recorded for the release.
  const PrivacyParams* charged = nullptr;
  BudgetLedger* ledger = nullptr;
};

// Gibbs chain for the density f(Var(0), ..., Var(k-1)) truncated to the box.
// `init` holds the first k-1 starting coordinates; coordinate k is drawn
// from its conditional first. Returns the opened final state.
std::vector<double> MpExpMechanismGibbs(FixedArith& fa, const FuncSpec& density,
                                        std::span<const double> init,
                                        const GibbsOptions& options);
// The same chain, returning the state on shares.
std::vector<SecretFixed> MpGibbsChain(FixedArith& fa, const FuncSpec& density,
                                      std::span<const double> init, const GibbsOptions& options);

}  // namespace mprf

#endif  // MPRF_MECHANISMS_H_
