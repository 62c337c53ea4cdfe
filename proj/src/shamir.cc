#include "mprf/shamir.h"

#include <algorithm>
#include <string>

#include "mprf/errors.h"

namespace mprf {

std::vector<Share> ShareVector::shares() const {
  std::vector<Share> out;
  out.reserve(points_.size());
  for (int i = 1; i <= parties(); ++i) out.push_back(share(i));
  return out;
}

std::vector<FieldElement> LagrangeWeights(const Field& field,
                                          std::span<const int> abscissas,
                                          FieldElement x) {
  std::vector<FieldElement> weights(abscissas.size());
  for (size_t j = 0; j < abscissas.size(); ++j) {
    FieldElement xj = field.FromUint(static_cast<uint64_t>(abscissas[j]));
    FieldElement num(1), den(1);
    for (size_t m = 0; m < abscissas.size(); ++m) {
      if (m == j) continue;
      FieldElement xm = field.FromUint(static_cast<uint64_t>(abscissas[m]));
      num = field.Mul(num, field.Sub(x, xm));
      den = field.Mul(den, field.Sub(xj, xm));
    }
    weights[j] = field.Mul(num, field.Inv(den));
  }
  return weights;
}

ShareVector ShamirShareWithCoefficients(const Field& field, FieldElement secret,
                                        std::span<const FieldElement> coefficients,
                                        int n) {
  ShareVector::Storage points(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i) {
    FieldElement acc;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
      acc = field.MulSmall(field.Add(acc, *it), i);
    }
    points[i - 1] = field.Add(acc, secret);
  }
  return ShareVector(static_cast<int>(coefficients.size()), std::move(points));
}

ShareVector ShamirShare(const Field& field, FieldElement secret, int t, int n,
                        CounterRng& rng) {
  if (t <= 0 || t >= n || static_cast<uint128>(n) >= field.modulus()) {
    throw ConfigError("Shamir parameters need 0 < t < n < p (t=" +
                      std::to_string(t) + ", n=" + std::to_string(n) + ")");
  }
  boost::container::small_vector<FieldElement, 8> coefficients(static_cast<size_t>(t));
  for (auto& c : coefficients) c = rng.NextField(field);
  return ShamirShareWithCoefficients(
      field, secret, std::span<const FieldElement>(coefficients.data(), coefficients.size()), n);
}

FieldElement ShamirReconstruct(const Field& field, std::span<const Share> shares,
                               int t) {
  if (static_cast<int>(shares.size()) < t + 1) {
    throw InsufficientShares("need " + std::to_string(t + 1) + " shares, got " +
                             std::to_string(shares.size()));
  }
  std::vector<int> xs;
  xs.reserve(shares.size());
  for (const Share& s : shares) xs.push_back(s.party_index);
  std::vector<int> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() ||
      sorted.front() <= 0) {
    throw ConfigError("share party indices must be distinct and positive");
  }

  std::span<const int> basis(xs.data(), static_cast<size_t>(t + 1));
  auto interpolate_at = [&](FieldElement x) {
    std::vector<FieldElement> w = LagrangeWeights(field, basis, x);
    FieldElement acc;
    for (int j = 0; j <= t; ++j) acc = field.Add(acc, field.Mul(w[j], shares[j].point));
    return acc;
  };
  for (size_t k = static_cast<size_t>(t + 1); k < shares.size(); ++k) {
    FieldElement expected =
        interpolate_at(field.FromUint(static_cast<uint64_t>(shares[k].party_index)));
    if (expected != shares[k].point) {
      throw IntegrityError("share of party " + std::to_string(shares[k].party_index) +
                           " is inconsistent with the sharing polynomial");
    }
  }
  return interpolate_at(FieldElement(0));
}

FieldElement ShamirReconstruct(const Field& field, const ShareVector& shares) {
  std::vector<Share> all = shares.shares();
  return ShamirReconstruct(field, all, shares.degree());
}

ShareVector ShareLinear(const Field& field, FieldElement c0,
                        std::span<const LinearTerm> terms) {
  if (terms.empty()) throw ConfigError("share_linear needs at least one term");
  const int n = terms.front().shares->parties();
  const int degree = terms.front().shares->degree();
  for (const LinearTerm& term : terms) {
    if (term.shares->parties() != n || term.shares->degree() != degree) {
      throw ConfigError("share_linear over sharings with different (t, n)");
    }
  }
  ShareVector::Storage points(static_cast<size_t>(n), c0);
  const FieldElement minus_one = field.Neg(FieldElement(1));
  for (const LinearTerm& term : terms) {
    const auto& in = term.shares->points();
    if (term.coefficient == FieldElement(1)) {
      for (int i = 0; i < n; ++i) points[i] = field.Add(points[i], in[i]);
    } else if (term.coefficient == minus_one) {
      for (int i = 0; i < n; ++i) points[i] = field.Sub(points[i], in[i]);
    } else {
      for (int i = 0; i < n; ++i) {
        points[i] = field.Add(points[i], field.MulAuto(in[i], term.coefficient));
      }
    }
  }
  return ShareVector(degree, std::move(points));
}

}  // namespace mprf
