#include "mprf/engine.h"

#include <string>
#include <thread>

#include "mprf/errors.h"

namespace mprf {

namespace {

constexpr uint64_t kShareStream = 1;
constexpr uint64_t kSeedStream = 2;
constexpr uint64_t kDealerStream = 3;

}  // namespace

std::string_view GateKindName(GateKind kind) {
  switch (kind) {
    case GateKind::kInput:
      return "input";
    case GateKind::kSeed:
      return "seed";
    case GateKind::kLinear:
      return "linear";
    case GateKind::kMul:
      return "mul";
    case GateKind::kOpen:
      return "open";
    case GateKind::kIdeal:
      return "ideal";
    case GateKind::kCheck:
      return "check";
    case GateKind::kCount:
      break;
  }
  return "unknown";
}

std::string_view IdealKindName(IdealKind kind) {
  switch (kind) {
    case IdealKind::kNone:
      return "none";
    case IdealKind::kLt:
      return "lt";
    case IdealKind::kDiv:
      return "div";
    case IdealKind::kExp:
      return "exp";
    case IdealKind::kSqrt:
      return "sqrt";
    case IdealKind::kLn:
      return "ln";
    case IdealKind::kBitCheck:
      return "bit-check";
    case IdealKind::kTrunc:
      return "trunc";
    case IdealKind::kErmArgmin:
      return "erm-argmin";
    case IdealKind::kTriple:
      return "triple";
    case IdealKind::kCount:
      break;
  }
  return "unknown";
}

bool Transcript::any_seed_injected() const {
  for (const PartyView& v : views) {
    if (v.seed_injected) return true;
  }
  return false;
}

uint64_t SeedLedger::total() const {
  uint64_t sum = 0;
  for (uint64_t c : per_party) sum += c;
  return sum;
}

void EngineConfig::Validate() const {
  if (parties < 2) throw ConfigError("need at least two parties");
  if (threshold < 1 || threshold >= parties) {
    throw ConfigError("threshold must satisfy 0 < t < n");
  }
  if (parties > 60) throw ConfigError("at most 60 parties are supported");
  if (static_cast<uint128>(parties) >= prime) throw ConfigError("need n < p");
  if (f_fx < 1 || k_fx <= f_fx + 1 || k_fx > 100) {
    throw ConfigError("fixed-point widths need 0 < f_fx < k_fx - 1 <= 99");
  }
  if (k_clt < 1) throw ConfigError("k_clt must be positive");
  if (k_trap < 2) throw ConfigError("k_trap must be at least 2");
  if (!(bisection_tol > 0)) throw ConfigError("bisection tolerance must be positive");
}

Engine::Engine(EngineConfig config) : config_(config), field_(config.prime) {
  config_.Validate();
  const int n = config_.parties;
  const int t = config_.threshold;
  party_state_.reserve(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i) {
    party_state_.push_back(
        {CounterRng(DeriveKey(config_.master_seed, static_cast<uint64_t>(i), kShareStream)),
         BitSource(DeriveKey(config_.master_seed, static_cast<uint64_t>(i), kSeedStream))});
  }
  dealer_rng_ = CounterRng(DeriveKey(config_.master_seed, 0, kDealerStream));

  transcript_.full = config_.transcript_mode == TranscriptMode::kFull;
  transcript_.views.resize(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i) transcript_.views[i - 1].index = i;
  ledger_.per_party.assign(static_cast<size_t>(n), 0);

  auto small = [this](const std::vector<FieldElement>& weights) {
    std::vector<int64_t> out;
    for (FieldElement w : weights) {
      const int128 v = field_.ToSigned(w);
      if (v > (int128{1} << 62) || v < -(int128{1} << 62)) {
        throw ConfigError("Lagrange weight does not fit a machine word");
      }
      out.push_back(static_cast<int64_t>(v));
    }
    return out;
  };
  std::vector<int> basis(static_cast<size_t>(t + 1));
  for (int i = 0; i <= t; ++i) basis[i] = i + 1;
  open_weights_ = small(LagrangeWeights(field_, basis, FieldElement(0)));
  for (int x = t + 2; x <= n; ++x) {
    check_weights_.push_back(
        small(LagrangeWeights(field_, basis, field_.FromUint(static_cast<uint64_t>(x)))));
  }
  std::vector<int> all(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) all[i] = i + 1;
  recombine_weights_ = small(LagrangeWeights(field_, all, FieldElement(0)));
  reshare_.resize(static_cast<size_t>(n) * static_cast<size_t>(n));
}

Engine::Scope::Scope(Engine& engine, const std::string& label) : engine_(engine) {
  auto [it, inserted] = engine.ledger_.by_protocol.try_emplace(label);
  if (inserted) it->second.assign(static_cast<size_t>(engine.parties()), 0);
  engine.active_scopes_.push_back(&it->second);
  engine.scope_labels_.push_back(label);
}

Engine::Scope::~Scope() {
  engine_.active_scopes_.pop_back();
  engine_.scope_labels_.pop_back();
}

uint64_t Engine::BeginGate(GateKind kind, IdealKind ideal, int party) {
  const uint64_t index = ++next_gate_;
  const bool interactive = kind != GateKind::kLinear;
  if (interactive) ++transcript_.rounds;
  ++transcript_.gate_counts[static_cast<size_t>(kind)];
  if (kind == GateKind::kIdeal) ++transcript_.ideal_counts[static_cast<size_t>(ideal)];
  DigestWord(transcript_.gate_digest, index);
  DigestWord(transcript_.gate_digest, static_cast<uint64_t>(kind) << 8 |
                                          static_cast<uint64_t>(ideal));
  if (transcript_.full) {
    GateRecord record;
    record.index = index;
    record.kind = kind;
    record.ideal = ideal;
    record.round = transcript_.rounds;
    record.party = party;
    if (!scope_labels_.empty()) record.label = scope_labels_.back();
    transcript_.gates.push_back(std::move(record));
  }
  return index;
}

void Engine::GateInput(const ShareVector& in) {
  DigestWord(transcript_.gate_digest, in.id());
  if (transcript_.full) transcript_.gates.back().inputs.push_back(in.id());
}

void Engine::EndGate(std::span<const ShareVector> outputs) {
  for (const ShareVector& out : outputs) DigestWord(transcript_.gate_digest, out.id());
  if (transcript_.full) {
    for (const ShareVector& out : outputs) transcript_.gates.back().outputs.push_back(out.id());
  }
}

void Engine::Deliver(int to, int from, uint64_t gate, FieldElement value) {
  PartyView& view = transcript_.views[to - 1];
  ++view.message_count;
  // Each interactive gate has its own round, so (gate, from) locates the message.
  DigestWord(view.digest, gate << 8 | static_cast<uint64_t>(from));
  DigestElement(view.digest, value);
  if (transcript_.full) view.received.push_back({transcript_.rounds, from, gate, value});
}

void Engine::ForEachParty(const std::function<void(int)>& fn) {
  if (config_.schedule == Schedule::kSequential) {
    for (int i = 1; i <= parties(); ++i) fn(i);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(static_cast<size_t>(parties()));
  for (int i = 1; i <= parties(); ++i) workers.emplace_back(fn, i);
}

FieldElement Engine::Reconstruct(const ShareVector& a) const {
  FieldElement acc;
  for (size_t j = 0; j < open_weights_.size(); ++j) {
    acc = field_.Add(acc, field_.MulSmall(a.points()[j], open_weights_[j]));
  }
  return acc;
}

void Engine::CheckSharing(const ShareVector& a) const {
  if (a.parties() != parties() || a.degree() != threshold()) {
    throw ConfigError("sharing does not match the engine's (t, n)");
  }
  const int t = threshold();
  for (size_t k = 0; k < check_weights_.size(); ++k) {
    FieldElement expected;
    for (int j = 0; j <= t; ++j) {
      expected = field_.Add(expected, field_.MulSmall(a.points()[j], check_weights_[k][j]));
    }
    if (expected != a.points()[static_cast<size_t>(t) + 1 + k]) {
      throw IntegrityError("inconsistent sharing at party " + std::to_string(t + 2 + k));
    }
  }
}

ShareVector Engine::DealerShare(FieldElement value) {
  ShareVector out = ShamirShare(field_, value, threshold(), parties(), dealer_rng_);
  out.set_id(NewId());
  return out;
}

ShareVector Engine::ShareInput(int party, FieldElement value) {
  if (party < 1 || party > parties()) throw ConfigError("no such party");
  PartyView& view = transcript_.views[party - 1];
  DigestElement(view.digest, value);
  if (transcript_.full) view.inputs.push_back(value);
  const uint64_t gate = BeginGate(GateKind::kInput, IdealKind::kNone, party);
  ShareVector out = ShamirShare(field_, value, threshold(), parties(),
                                party_state_[party - 1].share_rng);
  out.set_id(NewId());
  for (int j = 1; j <= parties(); ++j) {
    if (j != party) Deliver(j, party, gate, out.point(j));
  }
  EndGate({&out, 1});
  return out;
}

int Engine::DrawSeedBit(int party) {
  const int bit = party_state_[party - 1].seed.NextBit();
  ++ledger_.per_party[party - 1];
  for (std::vector<uint64_t>* scope : active_scopes_) ++(*scope)[party - 1];
  PartyView& view = transcript_.views[party - 1];
  ++view.seed_bit_count;
  DigestWord(view.digest, static_cast<uint64_t>(bit) | 0x5eed0000ULL);
  if (transcript_.full) view.seed_bits.push_back(static_cast<uint8_t>(bit));
  return bit;
}

uint64_t Engine::DrawLocalSeedBits(int party, int count) {
  if (party < 1 || party > parties()) throw ConfigError("no such party");
  if (count < 1 || count > 64) throw ConfigError("local seed draws take 1..64 bits");
  uint64_t out = 0;
  for (int i = 0; i < count; ++i) out |= static_cast<uint64_t>(DrawSeedBit(party)) << i;
  return out;
}

ShareVector Engine::SeedBit(int party) {
  if (party < 1 || party > parties()) throw ConfigError("no such party");
  const int bit = DrawSeedBit(party);
  const uint64_t gate = BeginGate(GateKind::kSeed, IdealKind::kNone, party);
  ShareVector out = ShamirShare(field_, FieldElement(static_cast<uint128>(bit)), threshold(),
                                parties(), party_state_[party - 1].share_rng);
  out.set_id(NewId());
  for (int j = 1; j <= parties(); ++j) {
    if (j != party) Deliver(j, party, gate, out.point(j));
  }
  EndGate({&out, 1});
  if (config_.check_bits) BitCheck(out);
  return out;
}

ShareVector Engine::Constant(FieldElement c) {
  ShareVector out(threshold(), ShareVector::Storage(static_cast<size_t>(parties()), c),
                  NewId());
  return out;
}

ShareVector Engine::Linear(FieldElement c0, std::span<const LinearTerm> terms) {
  for (const LinearTerm& term : terms) {
    if (term.shares->parties() != parties() || term.shares->degree() != threshold()) {
      throw ConfigError("linear gate over a sharing with different (t, n)");
    }
  }
  ShareVector out = ShareLinear(field_, c0, terms);
  out.set_id(NewId());
  BeginGate(GateKind::kLinear, IdealKind::kNone, 0);
  for (const LinearTerm& term : terms) GateInput(*term.shares);
  EndGate({&out, 1});
  return out;
}

ShareVector Engine::Add(const ShareVector& a, const ShareVector& b) {
  LinearTerm terms[] = {{FieldElement(1), &a}, {FieldElement(1), &b}};
  return Linear(FieldElement(0), terms);
}

ShareVector Engine::Sub(const ShareVector& a, const ShareVector& b) {
  LinearTerm terms[] = {{FieldElement(1), &a}, {field_.Neg(FieldElement(1)), &b}};
  return Linear(FieldElement(0), terms);
}

ShareVector Engine::AddConstant(const ShareVector& a, FieldElement c) {
  LinearTerm terms[] = {{FieldElement(1), &a}};
  return Linear(c, terms);
}

ShareVector Engine::MulConstant(const ShareVector& a, FieldElement c) {
  LinearTerm terms[] = {{c, &a}};
  return Linear(FieldElement(0), terms);
}

ShareVector Engine::Mul(const ShareVector& a, const ShareVector& b) {
  // Consistency is verified where values leave the sharing (opens, checks,
  // ideal gates); here only the shape.
  for (const ShareVector* in : {&a, &b}) {
    if (in->parties() != parties() || in->degree() != threshold()) {
      throw ConfigError("sharing does not match the engine's (t, n)");
    }
  }
  const int n = parties();
  const int t = threshold();
  if (2 * t >= n) {
    if (config_.allow_dealer_triples) return BeaverMul(a, b);
    throw ConfigError("multiplication needs 2t < n (t=" + std::to_string(t) +
                      ", n=" + std::to_string(n) + ")");
  }
  const uint64_t gate = BeginGate(GateKind::kMul, IdealKind::kNone, 0);
  GateInput(a);
  GateInput(b);
  if (config_.schedule == Schedule::kSequential) {
    for (int i = 1; i <= n; ++i) ReshareParty(i, field_.Mul(a.point(i), b.point(i)));
  } else {
    ForEachParty([&](int i) { ReshareParty(i, field_.Mul(a.point(i), b.point(i))); });
  }
  // Delivery and recombination are sequential, in sender order.
  ShareVector::Storage points(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const FieldElement* row = &reshare_[static_cast<size_t>(i - 1) * n];
    for (int j = 1; j <= n; ++j) {
      if (i != j) Deliver(j, i, gate, row[j - 1]);
      points[j - 1] =
          field_.Add(points[j - 1], field_.MulSmall(row[j - 1], recombine_weights_[i - 1]));
    }
  }
  ShareVector out(t, std::move(points), NewId());
  EndGate({&out, 1});
  return out;
}

// Party i re-shares its local product with a fresh degree-t polynomial;
// row i of the scratch matrix holds the points sent to parties 1..n.
void Engine::ReshareParty(int party, FieldElement local) {
  const int n = parties();
  const int t = threshold();
  CounterRng& rng = party_state_[party - 1].share_rng;
  boost::container::small_vector<FieldElement, 8> coeffs(static_cast<size_t>(t));
  for (FieldElement& c : coeffs) c = rng.NextField(field_);
  FieldElement* row = &reshare_[static_cast<size_t>(party - 1) * n];
  for (int j = 1; j <= n; ++j) {
    FieldElement acc;
    for (int m = t - 1; m >= 0; --m) acc = field_.MulSmall(field_.Add(acc, coeffs[m]), j);
    row[j - 1] = field_.Add(acc, local);
  }
}

ShareVector Engine::BeaverMul(const ShareVector& x, const ShareVector& y) {
  FieldElement a = dealer_rng_.NextField(field_);
  FieldElement b = dealer_rng_.NextField(field_);
  FieldElement c = field_.Mul(a, b);
  std::vector<ShareVector> triple;
  {
    const uint64_t gate = BeginGate(GateKind::kIdeal, IdealKind::kTriple, 0);
    for (FieldElement v : {a, b, c}) {
      triple.push_back(DealerShare(v));
      for (int j = 1; j <= parties(); ++j) Deliver(j, 0, gate, triple.back().point(j));
    }
    EndGate(triple);
  }
  FieldElement d = Open(Sub(x, triple[0]));
  FieldElement e = Open(Sub(y, triple[1]));
  LinearTerm terms[] = {{FieldElement(1), &triple[2]}, {d, &triple[1]}, {e, &triple[0]}};
  return Linear(field_.Mul(d, e), terms);
}

std::vector<ShareVector> Engine::Ideal(IdealKind kind, std::span<const ShareVector> inputs,
                                       const IdealFunction& fn) {
  std::vector<FieldElement> plain;
  plain.reserve(inputs.size());
  for (const ShareVector& in : inputs) {
    CheckSharing(in);
    plain.push_back(Reconstruct(in));
  }
  const uint64_t gate = BeginGate(GateKind::kIdeal, kind, 0);
  for (const ShareVector& in : inputs) GateInput(in);
  std::vector<FieldElement> results = fn(plain);
  std::vector<ShareVector> outputs;
  outputs.reserve(results.size());
  for (FieldElement r : results) {
    outputs.push_back(DealerShare(r));
    for (int j = 1; j <= parties(); ++j) Deliver(j, 0, gate, outputs.back().point(j));
  }
  EndGate(outputs);
  return outputs;
}

void Engine::BitCheck(const ShareVector& bit) {
  CheckSharing(bit);
  FieldElement v = Reconstruct(bit);
  BeginGate(GateKind::kIdeal, IdealKind::kBitCheck, 0);
  GateInput(bit);
  EndGate({});
  if (field_.Mul(v, v) != v) throw IntegrityError("shared seed value is not a bit");
}

FieldElement Engine::Open(const ShareVector& a) {
  CheckSharing(a);
  const uint64_t gate = BeginGate(GateKind::kOpen, IdealKind::kNone, 0);
  GateInput(a);
  for (int j = 1; j <= parties(); ++j) {
    for (int i = 1; i <= parties(); ++i) {
      if (i != j) Deliver(j, i, gate, a.point(i));
    }
  }
  FieldElement value = Reconstruct(a);
  for (PartyView& view : transcript_.views) {
    ++view.open_count;
    DigestElement(view.digest, value);
    if (transcript_.full) view.opened.push_back(value);
  }
  EndGate({});
  return value;
}

bool Engine::CheckZero(const ShareVector& a, const std::string& what) {
  CheckSharing(a);
  const uint64_t gate = BeginGate(GateKind::kCheck, IdealKind::kNone, 0);
  GateInput(a);
  if (transcript_.full) transcript_.gates.back().label = what;
  for (int j = 1; j <= parties(); ++j) {
    for (int i = 1; i <= parties(); ++i) {
      if (i != j) Deliver(j, i, gate, a.point(i));
    }
  }
  FieldElement value = Reconstruct(a);
  for (PartyView& view : transcript_.views) {
    ++view.open_count;
    DigestElement(view.digest, value);
    if (transcript_.full) view.opened.push_back(value);
  }
  EndGate({});
  return value == FieldElement(0);
}

void Engine::MarkOutput(FieldElement value) {
  for (PartyView& view : transcript_.views) {
    ++view.output_count;
    DigestElement(view.digest, value);
    if (transcript_.full) view.outputs.push_back(value);
  }
}

void Engine::InjectSeed(int party, uint64_t key) {
  if (party < 1 || party > parties()) throw ConfigError("no such party");
  party_state_[party - 1].seed = BitSource(key);
  transcript_.views[party - 1].seed_injected = true;
}

void Engine::InjectConstantSeed(int party, int bit) {
  if (party < 1 || party > parties()) throw ConfigError("no such party");
  party_state_[party - 1].seed = BitSource::Constant(bit);
  transcript_.views[party - 1].seed_injected = true;
}

void Engine::InjectSeedPattern(int party, std::vector<uint8_t> bits) {
  if (party < 1 || party > parties()) throw ConfigError("no such party");
  if (bits.empty()) throw ConfigError("empty seed pattern");
  party_state_[party - 1].seed = BitSource::Pattern(std::move(bits));
  transcript_.views[party - 1].seed_injected = true;
}

ProtocolResult RunProtocol(const EngineConfig& config, const ProtocolProgram& program,
                           const PartyInputs& inputs) {
  Engine engine(config);
  ProtocolResult result;
  result.outputs = program(engine, inputs);
  for (FieldElement v : result.outputs) engine.MarkOutput(v);
  result.transcript = engine.transcript();
  result.ledger = engine.ledger();
  return result;
}

}  // namespace mprf
