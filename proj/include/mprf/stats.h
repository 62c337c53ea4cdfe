#ifndef MPRF_STATS_H_
#define MPRF_STATS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mprf::stats {

// Sample values plus free-form metadata (protocol id, parameters, seed).
struct SampleBatch {
  std::vector<double> values;
  nlohmann::json metadata = nlohmann::json::object();
};

struct TestDecision {
  double statistic = 0;
  double critical = 0;
  double p_value = 1;
  bool rejected = false;
};

// Kolmogorov survival function Q(z) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 z^2).
double KolmogorovSurvival(double z);
// Asymptotic critical value c(alpha) with Q(c) = alpha.
double KolmogorovCritical(double alpha);

// sup |F_n - F|. Sorts a copy of the sample.
double KsStatistic(std::span<const double> sample, const std::function<double(double)>& cdf);
// Decision against c(alpha) / sqrt(n); p-value Q(sqrt(n) D).
TestDecision KsOneSample(std::span<const double> sample, const std::function<double(double)>& cdf,
                         double alpha);
// Decision against c(alpha) sqrt((m + n) / (m n)).
TestDecision KsTwoSample(std::span<const double> a, std::span<const double> b, double alpha);

// Pearson statistic with df = bins - 1. Throws ConfigError if any expected
// count is below 5 or the totals differ.
TestDecision ChiSquareGof(std::span<const uint64_t> counts, std::span<const double> expected,
                          double alpha);
// Two-row contingency test of equal category distributions, df = bins - 1
// over bins with a nonzero pooled count. Throws ConfigError if any pooled
// expected count is below 5.
TestDecision ChiSquareHomogeneity(std::span<const uint64_t> a, std::span<const uint64_t> b,
                                  double alpha);

struct Moments {
  double mean = 0;
  double variance = 0;  // unbiased
};
Moments SampleMoments(std::span<const double> sample);

// |mean - target_mean| <= tol_mean and |var / target_var - 1| <= tol_var;
// for target_var == 0 the variance test is |var| <= tol_var. Throws
// ConfigError for fewer than 30 values.
bool MomentCheck(std::span<const double> sample, double target_mean, double target_var,
                 double tol_mean, double tol_var);

// Shortest round-trip decimal form, independent of the locale.
std::string FormatDouble(double v);

// Fixture format: CSV with a `value` header; metadata in `<path>.json`.
SampleBatch ReadBatch(const std::string& csv_path);
void WriteBatch(const SampleBatch& batch, const std::string& csv_path);

}  // namespace mprf::stats

#endif  // MPRF_STATS_H_
