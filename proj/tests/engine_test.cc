#include "mprf/engine.h"

#include <gtest/gtest.h>

#include "mprf/errors.h"

namespace mprf {
namespace {

EngineConfig SmallConfig(int n = 3, int t = 1) {
  EngineConfig config;
  config.parties = n;
  config.threshold = t;
  config.master_seed = 77;
  config.transcript_mode = TranscriptMode::kFull;
  return config;
}

TEST(EngineTest, ShareThenOpen) {
  ProtocolResult r = RunProtocol(
      SmallConfig(),
      [](Engine& e, const PartyInputs& in) {
        ShareVector x = e.ShareInput(1, e.field().FromUint(static_cast<uint64_t>(in[0][0])));
        return std::vector<FieldElement>{e.Open(x)};
      },
      {{42}, {}, {}});
  ASSERT_EQ(r.outputs.size(), 1u);
  EXPECT_EQ(r.outputs[0], FieldElement(42));
  EXPECT_EQ(r.transcript.count(GateKind::kOpen), 1u);
  EXPECT_EQ(r.transcript.count(GateKind::kInput), 1u);
  for (const PartyView& v : r.transcript.views) {
    ASSERT_EQ(v.opened.size(), 1u);
    EXPECT_EQ(v.opened[0], FieldElement(42));
    ASSERT_EQ(v.outputs.size(), 1u);
    EXPECT_EQ(v.outputs[0], FieldElement(42));
  }
  // Only party 1 has the input; the others received its shares.
  EXPECT_EQ(r.transcript.views[0].inputs.size(), 1u);
  EXPECT_TRUE(r.transcript.views[1].inputs.empty());
  EXPECT_EQ(r.transcript.views[1].received.front().from, 1);
}

ProtocolProgram MixedProgram() {
  return [](Engine& e, const PartyInputs&) {
    ShareVector a = e.SeedBit(1), b = e.SeedBit(2), c = e.SeedBit(3);
    ShareVector ab = e.Mul(a, b);
    ShareVector s = e.Add(ab, c);
    std::vector<ShareVector> lt = e.Ideal(IdealKind::kLt, std::vector<ShareVector>{s, a},
                                          [](std::span<const FieldElement> v) {
                                            return std::vector<FieldElement>{
                                                FieldElement(v[0] < v[1] ? 1 : 0)};
                                          });
    return std::vector<FieldElement>{e.Open(s), e.Open(lt[0])};
  };
}

TEST(EngineTest, DeterministicUnderFixedSeed) {
  ProtocolResult r1 = RunProtocol(SmallConfig(), MixedProgram(), {{}, {}, {}});
  ProtocolResult r2 = RunProtocol(SmallConfig(), MixedProgram(), {{}, {}, {}});
  EXPECT_EQ(r1.outputs, r2.outputs);
  EXPECT_EQ(r1.transcript.gate_digest, r2.transcript.gate_digest);
  for (size_t i = 0; i < r1.transcript.views.size(); ++i) {
    EXPECT_EQ(r1.transcript.views[i].digest, r2.transcript.views[i].digest);
    EXPECT_EQ(r1.transcript.views[i].received.size(), r2.transcript.views[i].received.size());
  }
}

TEST(EngineTest, ThreadedScheduleMatchesSequential) {
  EngineConfig threaded = SmallConfig();
  threaded.schedule = Schedule::kThreaded;
  ProtocolResult r1 = RunProtocol(SmallConfig(), MixedProgram(), {{}, {}, {}});
  ProtocolResult r2 = RunProtocol(threaded, MixedProgram(), {{}, {}, {}});
  EXPECT_EQ(r1.outputs, r2.outputs);
  EXPECT_EQ(r1.transcript.gate_digest, r2.transcript.gate_digest);
  for (size_t i = 0; i < r1.transcript.views.size(); ++i) {
    EXPECT_EQ(r1.transcript.views[i].digest, r2.transcript.views[i].digest);
  }
}

TEST(EngineTest, SummaryModeKeepsDigests) {
  EngineConfig summary = SmallConfig();
  summary.transcript_mode = TranscriptMode::kSummary;
  ProtocolResult full = RunProtocol(SmallConfig(), MixedProgram(), {{}, {}, {}});
  ProtocolResult brief = RunProtocol(summary, MixedProgram(), {{}, {}, {}});
  EXPECT_TRUE(brief.transcript.gates.empty());
  for (size_t i = 0; i < full.transcript.views.size(); ++i) {
    EXPECT_EQ(full.transcript.views[i].digest, brief.transcript.views[i].digest);
    EXPECT_EQ(full.transcript.views[i].message_count, brief.transcript.views[i].message_count);
  }
}

TEST(EngineTest, MultiplicationExamples) {
  Engine e(SmallConfig(5, 2));
  const Field& f = e.field();
  ShareVector six = e.ShareInput(1, f.FromUint(6));
  ShareVector seven = e.ShareInput(2, f.FromUint(7));
  ShareVector zero = e.ShareInput(3, f.FromUint(0));
  ShareVector one = e.ShareInput(4, f.FromUint(1));
  EXPECT_EQ(e.Open(e.Mul(six, seven)), FieldElement(42));
  EXPECT_EQ(e.Open(e.Mul(six, zero)), FieldElement(0));
  EXPECT_EQ(e.Open(e.Mul(seven, one)), FieldElement(7));
  ShareVector prod = e.Mul(six, seven);
  EXPECT_EQ(prod.degree(), 2);
  EXPECT_NO_THROW(ShamirReconstruct(f, prod));
}

TEST(EngineTest, MultiplicationNeedsHonestMajority) {
  Engine e(SmallConfig(2, 1));
  ShareVector a = e.ShareInput(1, FieldElement(3));
  EXPECT_THROW(e.Mul(a, a), ConfigError);
}

TEST(EngineTest, DealerTriplesEnableTwoParties) {
  EngineConfig config = SmallConfig(2, 1);
  config.allow_dealer_triples = true;
  Engine e(config);
  ShareVector a = e.ShareInput(1, FieldElement(3));
  ShareVector b = e.ShareInput(2, FieldElement(14));
  EXPECT_EQ(e.Open(e.Mul(a, b)), FieldElement(42));
  EXPECT_EQ(e.transcript().count(IdealKind::kTriple), 1u);
}

TEST(EngineTest, OpensRecordedInOrder) {
  Engine e(SmallConfig());
  ShareVector a = e.ShareInput(1, FieldElement(9));
  ShareVector b = e.ShareInput(2, FieldElement(10));
  e.Open(a);
  e.Open(b);
  for (const PartyView& v : e.transcript().views) {
    ASSERT_EQ(v.opened.size(), 2u);
    EXPECT_EQ(v.opened[0], FieldElement(9));
    EXPECT_EQ(v.opened[1], FieldElement(10));
  }
}

TEST(EngineTest, SeedLedgerCountsDraws) {
  Engine e(SmallConfig());
  {
    Engine::Scope scope(e, "block");
    for (int i = 0; i < 8; ++i) {
      FieldElement bit = e.Open(e.SeedBit(2));
      EXPECT_TRUE(bit == FieldElement(0) || bit == FieldElement(1));
    }
  }
  EXPECT_EQ(e.ledger().per_party[1], 8u);
  EXPECT_EQ(e.ledger().per_party[0], 0u);
  EXPECT_EQ(e.ledger().by_protocol.at("block")[1], 8u);
  EXPECT_EQ(e.ledger().total(), 8u);
  EXPECT_EQ(e.transcript().views[1].seed_bits.size(), 8u);
}

TEST(EngineTest, BitCheckFlag) {
  EngineConfig config = SmallConfig();
  config.check_bits = true;
  Engine e(config);
  e.SeedBit(1);
  EXPECT_EQ(e.transcript().count(IdealKind::kBitCheck), 1u);
  ShareVector two = e.ShareInput(1, FieldElement(2));
  EXPECT_THROW(e.BitCheck(two), IntegrityError);
}

TEST(EngineTest, IdealGateHidesPlaintext) {
  Engine e(SmallConfig());
  ShareVector x = e.ShareInput(1, FieldElement(1234567));
  std::vector<ShareVector> out =
      e.Ideal(IdealKind::kExp, std::vector<ShareVector>{x}, [](std::span<const FieldElement>) {
        return std::vector<FieldElement>{FieldElement(7654321)};
      });
  for (const PartyView& v : e.transcript().views) {
    for (const Message& m : v.received) {
      EXPECT_NE(m.value, FieldElement(7654321));
      if (m.from == 0) EXPECT_NE(m.value, FieldElement(1234567));
    }
    EXPECT_TRUE(v.opened.empty());
  }
  EXPECT_EQ(e.Open(out[0]), FieldElement(7654321));
}

TEST(EngineTest, InconsistentSharingDetectedOnOpen) {
  Engine e(SmallConfig());
  ShareVector x = e.ShareInput(1, FieldElement(5));
  x.mutable_points()[2] = e.field().Add(x.points()[2], FieldElement(1));
  EXPECT_THROW(e.Open(x), IntegrityError);
}

TEST(EngineTest, MismatchedSharingRejected) {
  Engine e(SmallConfig());
  ShareVector x = e.ShareInput(1, FieldElement(5));
  ShareVector y(2, x.points());
  EXPECT_THROW(e.Add(x, y), ConfigError);
}

TEST(EngineTest, SeedInjectionFlagged) {
  Engine e(SmallConfig());
  EXPECT_FALSE(e.transcript().any_seed_injected());
  e.InjectConstantSeed(2, 1);
  EXPECT_TRUE(e.transcript().any_seed_injected());
  for (int i = 0; i < 5; ++i) EXPECT_EQ(e.Open(e.SeedBit(2)), FieldElement(1));
  e.InjectSeed(1, 1234);
  uint64_t first = e.DrawLocalSeedBits(1, 32);
  e.InjectSeed(1, 1234);
  EXPECT_EQ(e.DrawLocalSeedBits(1, 32), first);
}

TEST(EngineTest, InvalidConfigRejected) {
  EngineConfig config = SmallConfig();
  config.threshold = 3;
  EXPECT_THROW(Engine{config}, ConfigError);
  config = SmallConfig();
  config.parties = 1;
  EXPECT_THROW(Engine{config}, ConfigError);
}

}  // namespace
}  // namespace mprf
