#include "mprf/stats.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/tools/roots.hpp>

#include "mprf/errors.h"

namespace mprf::stats {

namespace {

std::vector<double> Sorted(std::span<const double> xs) {
  std::vector<double> out(xs.begin(), xs.end());
  std::sort(out.begin(), out.end());
  return out;
}

TestDecision ChiSquareDecision(double statistic, int df, double alpha) {
  if (df < 1) throw ConfigError("chi-square test needs at least two bins");
  boost::math::chi_squared dist(df);
  TestDecision d;
  d.statistic = statistic;
  d.critical = boost::math::quantile(boost::math::complement(dist, alpha));
  d.p_value = boost::math::cdf(boost::math::complement(dist, statistic));
  d.rejected = statistic > d.critical;
  return d;
}

}  // namespace

double KolmogorovSurvival(double z) {
  if (z <= 0) return 1;
  constexpr double pi = std::numbers::pi;
  if (z < 1.18) {
    // Jacobi-transformed series, fast for small z.
    const double w = -pi * pi / (8 * z * z);
    double sum = 0;
    for (int k = 1; k <= 20; ++k) {
      const double term = std::exp((2 * k - 1) * (2 * k - 1) * w);
      sum += term;
      if (term < 1e-300) break;
    }
    return 1 - std::sqrt(2 * pi) / z * sum;
  }
  double sum = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * z * z);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return 2 * sum;
}

double KolmogorovCritical(double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must lie in (0, 1)");
  auto f = [alpha](double z) { return KolmogorovSurvival(z) - alpha; };
  boost::uintmax_t iterations = 200;
  auto [lo, hi] = boost::math::tools::toms748_solve(
      f, 0.05, 10.0, boost::math::tools::eps_tolerance<double>(52), iterations);
  return 0.5 * (lo + hi);
}

double KsStatistic(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw ConfigError("empty sample");
  const std::vector<double> xs = Sorted(sample);
  const double n = static_cast<double>(xs.size());
  double d = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

TestDecision KsOneSample(std::span<const double> sample, const std::function<double(double)>& cdf,
                         double alpha) {
  TestDecision d;
  d.statistic = KsStatistic(sample, cdf);
  const double root = std::sqrt(static_cast<double>(sample.size()));
  d.critical = KolmogorovCritical(alpha) / root;
  d.p_value = KolmogorovSurvival(root * d.statistic);
  d.rejected = d.statistic > d.critical;
  return d;
}

TestDecision KsTwoSample(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.empty() || b.empty()) throw ConfigError("empty sample");
  const std::vector<double> xs = Sorted(a);
  const std::vector<double> ys = Sorted(b);
  const double m = static_cast<double>(xs.size());
  const double n = static_cast<double>(ys.size());
  size_t i = 0, j = 0;
  double d = 0;
  while (i < xs.size() && j < ys.size()) {
    const double v = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] == v) ++i;
    while (j < ys.size() && ys[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / m - static_cast<double>(j) / n));
  }
  TestDecision out;
  out.statistic = d;
  const double en = m * n / (m + n);
  out.critical = KolmogorovCritical(alpha) / std::sqrt(en);
  out.p_value = KolmogorovSurvival(std::sqrt(en) * d);
  out.rejected = d > out.critical;
  return out;
}

TestDecision ChiSquareGof(std::span<const uint64_t> counts, std::span<const double> expected,
                          double alpha) {
  if (counts.size() != expected.size()) throw ConfigError("counts and expected differ in size");
  double observed_total = 0, expected_total = 0, statistic = 0;
  for (size_t i = 0; i < counts.size(); ++i) {
    if (!(expected[i] >= 5)) throw ConfigError("expected count below 5 in bin " + std::to_string(i));
    const double o = static_cast<double>(counts[i]);
    observed_total += o;
    expected_total += expected[i];
    statistic += (o - expected[i]) * (o - expected[i]) / expected[i];
  }
  if (std::fabs(observed_total - expected_total) > 1e-9 * std::max(1.0, expected_total)) {
    throw ConfigError("observed and expected totals differ");
  }
  return ChiSquareDecision(statistic, static_cast<int>(counts.size()) - 1, alpha);
}

TestDecision ChiSquareHomogeneity(std::span<const uint64_t> a, std::span<const uint64_t> b,
                                  double alpha) {
  if (a.size() != b.size()) throw ConfigError("contingency rows differ in size");
  double total_a = 0, total_b = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    total_a += static_cast<double>(a[i]);
    total_b += static_cast<double>(b[i]);
  }
  if (total_a == 0 || total_b == 0) throw ConfigError("empty contingency row");
  const double total = total_a + total_b;
  double statistic = 0;
  int bins = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double pooled = static_cast<double>(a[i]) + static_cast<double>(b[i]);
    if (pooled == 0) continue;
    ++bins;
    const double ea = total_a * pooled / total;
    const double eb = total_b * pooled / total;
    if (ea < 5 || eb < 5) throw ConfigError("expected count below 5 in bin " + std::to_string(i));
    statistic += (static_cast<double>(a[i]) - ea) * (static_cast<double>(a[i]) - ea) / ea;
    statistic += (static_cast<double>(b[i]) - eb) * (static_cast<double>(b[i]) - eb) / eb;
  }
  return ChiSquareDecision(statistic, bins - 1, alpha);
}

Moments SampleMoments(std::span<const double> sample) {
  if (sample.size() < 2) throw ConfigError("need at least two values");
  // Two-pass for accuracy.
  double mean = 0;
  for (double x : sample) mean += x;
  mean /= static_cast<double>(sample.size());
  double ss = 0;
  for (double x : sample) ss += (x - mean) * (x - mean);
  return {mean, ss / static_cast<double>(sample.size() - 1)};
}

bool MomentCheck(std::span<const double> sample, double target_mean, double target_var,
                 double tol_mean, double tol_var) {
  if (sample.size() < 30) throw ConfigError("moment check needs at least 30 values");
  const Moments m = SampleMoments(sample);
  if (std::fabs(m.mean - target_mean) > tol_mean) return false;
  if (target_var == 0) return std::fabs(m.variance) <= tol_var;
  return std::fabs(m.variance / target_var - 1) <= tol_var;
}

std::string FormatDouble(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

SampleBatch ReadBatch(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line) || line != "value") {
    throw ConfigError(csv_path + ": expected header 'value'");
  }
  SampleBatch batch;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double v = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || ptr != line.data() + line.size() || !std::isfinite(v)) {
      throw ConfigError(csv_path + ": bad value '" + line + "'");
    }
    batch.values.push_back(v);
  }
  if (batch.values.empty()) throw ConfigError(csv_path + ": no values");
  std::ifstream meta(csv_path + ".json");
  if (meta) batch.metadata = nlohmann::json::parse(meta);
  return batch;
}

void WriteBatch(const SampleBatch& batch, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw ConfigError("cannot write " + csv_path);
  out << "value\n";
  for (double v : batch.values) out << FormatDouble(v) << '\n';
  std::ofstream meta(csv_path + ".json");
  meta << batch.metadata.dump(2) << '\n';
}

}  // namespace mprf::stats
