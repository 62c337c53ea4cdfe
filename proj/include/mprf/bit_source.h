#ifndef MPRF_BIT_SOURCE_H_
#define MPRF_BIT_SOURCE_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "mprf/field.h"

namespace mprf {

// SplitMix64 finalizer; also used to derive stream keys.
constexpr uint64_t Mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr uint64_t DeriveKey(uint64_t master, uint64_t a, uint64_t b = 0) {
  return Mix64(Mix64(master ^ Mix64(a)) ^ Mix64(b + 0x51ed2701ULL));
}

// Counter-based generator: word i is Mix64(key + i * gamma). The full state
// is (key, counter), so streams are reproducible and independently keyed.
class CounterRng {
 public:
  explicit CounterRng(uint64_t key = 0) : key_(key) {}

  uint64_t Next() {
    return Mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_) ^ key_;
  }
  // Uniform in [0, 1) with 53 random bits.
  double NextUnit() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }
  // Uniform element of F_p by rejection on bit_length(p) bits.
  FieldElement NextField(const Field& field);

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

// Hands out single uniform bits, 64 per generator word, and counts them.
// A pattern source cycles through a fixed bit list instead.
class BitSource {
 public:
  explicit BitSource(uint64_t key = 0) : rng_(key) {}
  static BitSource Constant(int bit) { return Pattern({static_cast<uint8_t>(bit & 1)}); }
  static BitSource Pattern(std::vector<uint8_t> bits) {
    BitSource source;
    source.pattern_ = std::move(bits);
    return source;
  }

  int NextBit() {
    if (!pattern_.empty()) {
      return pattern_[consumed_++ % pattern_.size()] & 1;
    }
    if (available_ == 0) {
      buffer_ = rng_.Next();
      available_ = 64;
    }
    int bit = static_cast<int>(buffer_ & 1);
    buffer_ >>= 1;
    --available_;
    ++consumed_;
    return bit;
  }
  // Builds a word from the next `bits` bits, least significant first.
  uint64_t NextBits(int bits) {
    uint64_t out = 0;
    for (int i = 0; i < bits; ++i) out |= static_cast<uint64_t>(NextBit()) << i;
    return out;
  }

  uint64_t consumed() const { return consumed_; }

 private:
  CounterRng rng_;
  uint64_t buffer_ = 0;
  int available_ = 0;
  uint64_t consumed_ = 0;
  std::vector<uint8_t> pattern_;
};

}  // namespace mprf

#endif  // MPRF_BIT_SOURCE_H_
