#ifndef MPRF_ENGINE_H_
#define MPRF_ENGINE_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mprf/bit_source.h"
#include "mprf/field.h"
#include "mprf/shamir.h"
#include "mprf/transcript.h"

namespace mprf {

enum class TranscriptMode { kSummary, kFull };
enum class Schedule { kSequential, kThreaded };

struct EngineConfig {
  int parties = 3;
  int threshold = 1;
  uint128 prime = Field::kMersenne127;
  int k_fx = 40;
  int f_fx = 20;
  int k_clt = 1024;
  int k_trap = 64;
  double bisection_tol = 0x1p-16;
  uint64_t master_seed = 1;
  // Run the x^2 = x check on every shared seed bit.
  bool check_bits = false;
  // Multiply with dealer-supplied Beaver triples when 2t >= n (e.g. two
  // parties). Without it such multiplications throw ConfigError.
  bool allow_dealer_triples = false;
  TranscriptMode transcript_mode = TranscriptMode::kSummary;
  Schedule schedule = Schedule::kSequential;

  // Throws ConfigError. Does not check the fixed-point headroom guard; that
  // belongs to FixedArith.
  void Validate() const;
};

// Per-party private inputs, as plain reals, indexed by party - 1.
using PartyInputs = std::vector<std::vector<double>>;

// Plaintext functionality run by the trusted evaluator on reconstructed
// inputs. Its results are re-shared freshly; nothing reaches party views.
using IdealFunction =
    std::function<std::vector<FieldElement>(std::span<const FieldElement>)>;

// Simulated n-party semi-honest execution over (t, n)-Shamir sharings.
// Gates run in lock-step rounds; deliveries within a round are ordered by
// sender index, so both schedules yield identical transcripts.
class Engine {
 public:
  explicit Engine(EngineConfig config);

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const EngineConfig& config() const { return config_; }
  const Field& field() const { return field_; }
  int parties() const { return config_.parties; }
  int threshold() const { return config_.threshold; }

  // Stage I: party `party` shares a private field value.
  ShareVector ShareInput(int party, FieldElement value);
  // Draws one bit from the party's seed source and shares it.
  ShareVector SeedBit(int party);
  // Draws `count` (<= 64) seed bits for purely local use by the party.
  uint64_t DrawLocalSeedBits(int party, int count);
  // Public constant as a (degenerate) sharing.
  ShareVector Constant(FieldElement c);

  // Stage II, local.
  ShareVector Linear(FieldElement c0, std::span<const LinearTerm> terms);
  ShareVector Add(const ShareVector& a, const ShareVector& b);
  ShareVector Sub(const ShareVector& a, const ShareVector& b);
  ShareVector AddConstant(const ShareVector& a, FieldElement c);
  ShareVector MulConstant(const ShareVector& a, FieldElement c);

  // Stage II, interactive. Degree reduction by re-sharing local products;
  // needs 2t < n unless dealer triples are enabled.
  ShareVector Mul(const ShareVector& a, const ShareVector& b);
  std::vector<ShareVector> Ideal(IdealKind kind, std::span<const ShareVector> inputs,
                                 const IdealFunction& fn);
  // Trusted x^2 = x check; throws IntegrityError on a non-bit.
  void BitCheck(const ShareVector& bit);

  // Stage III: broadcast open, recorded in every view.
  FieldElement Open(const ShareVector& a);
  // Opens a value that is zero whenever the protocol's precondition holds.
  // Returns true iff it was zero.
  bool CheckZero(const ShareVector& a, const std::string& what);
  // Marks an opened value as protocol output in every view.
  void MarkOutput(FieldElement value);

  // Replaces the party's seed source with a fixed stream keyed by `key`.
  // Flagged in the transcript.
  void InjectSeed(int party, uint64_t key);
  // Replaces the party's seed source with a constant bit stream.
  void InjectConstantSeed(int party, int bit);
  // Replaces the party's seed source with a repeating bit pattern.
  void InjectSeedPattern(int party, std::vector<uint8_t> bits);

  const Transcript& transcript() const { return transcript_; }
  const SeedLedger& ledger() const { return ledger_; }
  uint64_t gate_index() const { return next_gate_; }

  // Attributes seed bits drawn while alive to `label` in the ledger, and
  // labels full-mode gate records.
  class Scope {
   public:
    Scope(Engine& engine, const std::string& label);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Engine& engine_;
  };

 private:
  struct PartyState {
    CounterRng share_rng;
    BitSource seed;
  };

  uint64_t NewId() { return ++next_id_; }
  uint64_t BeginGate(GateKind kind, IdealKind ideal, int party);
  void GateInput(const ShareVector& in);
  void EndGate(std::span<const ShareVector> outputs);
  void Deliver(int to, int from, uint64_t gate, FieldElement value);
  void ForEachParty(const std::function<void(int)>& fn);
  void ReshareParty(int party, FieldElement local);
  FieldElement Reconstruct(const ShareVector& a) const;
  void CheckSharing(const ShareVector& a) const;
  ShareVector DealerShare(FieldElement value);
  int DrawSeedBit(int party);
  ShareVector BeaverMul(const ShareVector& a, const ShareVector& b);

  EngineConfig config_;
  Field field_;
  std::vector<PartyState> party_state_;
  CounterRng dealer_rng_;
  Transcript transcript_;
  SeedLedger ledger_;
  std::vector<std::vector<uint64_t>*> active_scopes_;
  std::vector<std::string> scope_labels_;
  // Lagrange weights over consecutive abscissas are small integers.
  std::vector<int64_t> open_weights_;                // points 1..t+1 at 0
  std::vector<std::vector<int64_t>> check_weights_;  // points 1..t+1 at x>t+1
  std::vector<int64_t> recombine_weights_;           // points 1..n at 0
  std::vector<FieldElement> reshare_;                // n x n scratch for Mul
  uint64_t next_id_ = 0;
  uint64_t next_gate_ = 0;
};

struct ProtocolResult {
  std::vector<FieldElement> outputs;
  Transcript transcript;
  SeedLedger ledger;
};

// A protocol program: runs against the engine and returns the values it
// opened as public output.
using ProtocolProgram =
    std::function<std::vector<FieldElement>(Engine&, const PartyInputs&)>;

ProtocolResult RunProtocol(const EngineConfig& config, const ProtocolProgram& program,
                           const PartyInputs& inputs);

}  // namespace mprf

#endif  // MPRF_ENGINE_H_
