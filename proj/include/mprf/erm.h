#ifndef MPRF_ERM_H_
#define MPRF_ERM_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mprf/fixed_point.h"
#include "mprf/mechanisms.h"
#include "mprf/transcript.h"

namespace mprf {

struct ErmPoint {
  std::vector<double> x;
  int y = 1;
};

// Labeled points split by owner; parts[i] belongs to party i+1.
struct ErmDataset {
  int dim = 0;
  std::vector<std::vector<ErmPoint>> parts;
  // Rows scaled onto the unit sphere at ingestion.
  int clipped = 0;

  size_t total() const;
  std::vector<ErmPoint> Pooled() const;

  // Scales every x with ||x|| > 1 to unit norm. Throws ConfigError on empty
  // data, mixed dimensions, labels outside {-1, +1} or non-finite values.
  static ErmDataset Ingest(std::vector<std::vector<ErmPoint>> parts);
};

// CSV with feature columns and a final `label` column; the manifest lists
// half-open data-row ranges per party:
//   {"parties": [{"ranges": [[0, 20]]}, {"ranges": [[20, 40]]}]}
// Every row must belong to exactly one party. Throws ConfigError.
ErmDataset ReadErmDataset(const std::string& csv_path, const std::string& manifest_path);

struct ErmParams {
  // Lambda > 0 in J(f) = (1/k) sum log(1 + exp(-y f.x)) + Lambda ||f||^2 / 2.
  double regularization = 0.1;
  double epsilon = 1;
  // Use 2 / (k Lambda eps) as the rate of exp(-rate ||b||) instead of as
  // its scale.
  bool paper_literal_rate = false;

  // Throws DomainError.
  void Validate() const;
  // 2 / (k Lambda eps).
  double NoiseParameter(size_t k) const;
  // Rate of the noise density: the reciprocal of NoiseParameter unless
  // paper_literal_rate.
  double NoiseRate(size_t k) const;
};

struct GradientDescentResult {
  std::vector<double> minimizer;
  int iterations = 0;
  double gradient_norm = 0;
};

// Objective and gradient of J at f.
double ErmObjective(std::span<const ErmPoint> points, double regularization,
                    std::span<const double> f);
std::vector<double> ErmGradient(std::span<const ErmPoint> points, double regularization,
                                std::span<const double> f);

// Gradient descent with step 1 / (1/4 + Lambda) from 0 until the gradient
// norm is at most 1e-6. Throws NumericalError after 10^4 iterations.
GradientDescentResult PlainErmMinimize(std::span<const ErmPoint> points, int dim,
                                       double regularization);

// Every party shares its rows: d features then the label.
std::vector<std::vector<SecretFixed>> ShareErmDataset(FixedArith& fa, const ErmDataset& data);

// The trusted evaluator reconstructs the rows, minimizes J in the clear and
// re-shares the minimizer. Nothing is opened.
std::vector<SecretFixed> ErmMinimizeIdeal(FixedArith& fa,
                                          const std::vector<std::vector<SecretFixed>>& rows,
                                          int dim, double regularization);

struct ErmResult {
  std::vector<double> released;
  double noise_parameter = 0;
  double noise_rate = 0;
  Charge charge;
  // Share ids of the minimizer coordinates.
  std::vector<uint64_t> minimizer_ids;
  std::vector<uint64_t> seed_cost;

  nlohmann::json ToJson() const;
};

// Opens minimizer + X with X drawn by the polar protocol at the noise rate.
// Charges (eps, 0) to the ledger when given. In full transcript mode,
// throws IntegrityError if a minimizer share reached an open gate.
ErmResult MpDpErm(FixedArith& fa, const ErmDataset& data, const ErmParams& params,
                  BudgetLedger* ledger = nullptr);

// True iff any share id in `ids` was an input to an open gate. Needs a full
// transcript.
bool SharesOpened(const Transcript& transcript, std::span<const uint64_t> ids);

}  // namespace mprf

#endif  // MPRF_ERM_H_
