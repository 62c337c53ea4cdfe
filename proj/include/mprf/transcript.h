#ifndef MPRF_TRANSCRIPT_H_
#define MPRF_TRANSCRIPT_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mprf/bit_source.h"
#include "mprf/field.h"

namespace mprf {

enum class GateKind { kInput, kSeed, kLinear, kMul, kOpen, kIdeal, kCheck, kCount };

// Functionalities evaluated by the trusted evaluator. kTrunc is the
// post-multiplication rescale; kErmArgmin is the deterministic ERM solver;
// kTriple deals a Beaver triple when 2t >= n.
enum class IdealKind {
  kNone,
  kLt,
  kDiv,
  kExp,
  kSqrt,
  kLn,
  kBitCheck,
  kTrunc,
  kErmArgmin,
  kTriple,
  kCount,
};

std::string_view GateKindName(GateKind kind);
std::string_view IdealKindName(IdealKind kind);

// Sender 0 denotes the ideal functionality.
struct Message {
  uint64_t round = 0;
  int from = 0;
  uint64_t gate = 0;
  FieldElement value;
};

struct GateRecord {
  uint64_t index = 0;
  GateKind kind = GateKind::kLinear;
  IdealKind ideal = IdealKind::kNone;
  uint64_t round = 0;
  int party = 0;  // owner for input/seed gates
  std::vector<uint64_t> inputs;
  std::vector<uint64_t> outputs;
  std::string label;
};

// Everything party i sees during a run. In summary mode only the counters
// and the running digest are kept.
struct PartyView {
  int index = 0;
  std::vector<FieldElement> inputs;
  std::vector<uint8_t> seed_bits;
  std::vector<Message> received;
  std::vector<FieldElement> opened;
  std::vector<FieldElement> outputs;
  uint64_t seed_bit_count = 0;
  uint64_t message_count = 0;
  uint64_t open_count = 0;
  uint64_t output_count = 0;
  bool seed_injected = false;
  uint64_t digest = 0xcbf29ce484222325ULL;
};

struct Transcript {
  std::vector<PartyView> views;
  std::vector<GateRecord> gates;
  std::array<uint64_t, static_cast<size_t>(GateKind::kCount)> gate_counts{};
  std::array<uint64_t, static_cast<size_t>(IdealKind::kCount)> ideal_counts{};
  uint64_t rounds = 0;
  uint64_t gate_digest = 0xcbf29ce484222325ULL;
  bool full = false;

  uint64_t count(GateKind kind) const { return gate_counts[static_cast<size_t>(kind)]; }
  uint64_t count(IdealKind kind) const { return ideal_counts[static_cast<size_t>(kind)]; }
  bool any_seed_injected() const;
};

// Per-party count of consumed uniform seed bits, overall and per protocol
// label. Counts only grow during a run.
struct SeedLedger {
  std::vector<uint64_t> per_party;
  std::map<std::string, std::vector<uint64_t>> by_protocol;

  uint64_t total() const;
};

// Word-wise chained mixing used for view and gate-log digests.
inline void DigestWord(uint64_t& digest, uint64_t word) {
  digest = Mix64(digest ^ word);
}

inline void DigestElement(uint64_t& digest, FieldElement v) {
  DigestWord(digest, static_cast<uint64_t>(v.value()));
  DigestWord(digest, static_cast<uint64_t>(v.value() >> 64));
}

}  // namespace mprf

#endif  // MPRF_TRANSCRIPT_H_
