#ifndef MPRF_SHAMIR_H_
#define MPRF_SHAMIR_H_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <boost/container/small_vector.hpp>

#include "mprf/bit_source.h"
#include "mprf/field.h"

namespace mprf {

// One party's point on a sharing polynomial. Party i holds q(i).
struct Share {
  int party_index = 0;
  FieldElement point;
};

// A full (t, n) sharing: entry i - 1 belongs to party i. `id` is a handle
// assigned by the engine for gate logs; 0 means untracked.
class ShareVector {
 public:
  using Storage = boost::container::small_vector<FieldElement, 8>;

  ShareVector() = default;
  ShareVector(int degree, Storage points, uint64_t id = 0)
      : degree_(degree), points_(std::move(points)), id_(id) {}

  int degree() const { return degree_; }
  int parties() const { return static_cast<int>(points_.size()); }
  uint64_t id() const { return id_; }
  void set_id(uint64_t id) { id_ = id; }

  FieldElement point(int party_index) const { return points_[party_index - 1]; }
  Share share(int party_index) const { return {party_index, point(party_index)}; }
  std::vector<Share> shares() const;
  const Storage& points() const { return points_; }
  Storage& mutable_points() { return points_; }

 private:
  int degree_ = 0;
  Storage points_;
  uint64_t id_ = 0;
};

// Lagrange basis weights L_j(x) for the given distinct abscissas.
std::vector<FieldElement> LagrangeWeights(const Field& field,
                                          std::span<const int> abscissas,
                                          FieldElement x);

// Shares `secret` with a uniformly random degree-t polynomial.
// Throws ConfigError unless 0 < t < n < p.
ShareVector ShamirShare(const Field& field, FieldElement secret, int t, int n,
                        CounterRng& rng);

// Evaluates q(x) = secret + sum_j coefficients[j-1] x^j at x = 1..n.
ShareVector ShamirShareWithCoefficients(const Field& field, FieldElement secret,
                                        std::span<const FieldElement> coefficients,
                                        int n);

// Interpolates q(0). Needs at least t + 1 shares; when more are given they
// must all lie on the same degree-t polynomial.
FieldElement ShamirReconstruct(const Field& field, std::span<const Share> shares,
                               int t);
FieldElement ShamirReconstruct(const Field& field, const ShareVector& shares);

struct LinearTerm {
  FieldElement coefficient;
  const ShareVector* shares;
};

// Local affine combination c0 + sum c_i [x_i]; no communication.
ShareVector ShareLinear(const Field& field, FieldElement c0,
                        std::span<const LinearTerm> terms);

}  // namespace mprf

#endif  // MPRF_SHAMIR_H_
