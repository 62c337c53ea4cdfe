#include "cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <boost/math/distributions/exponential.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/laplace.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "mprf/bit_source.h"
#include "mprf/erm.h"
#include "mprf/errors.h"
#include "mprf/fixed_point.h"
#include "mprf/fixtures.h"
#include "mprf/mechanisms.h"
#include "mprf/oblivious.h"
#include "mprf/samplers.h"
#include "mprf/stats.h"

namespace mprf::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Failure of a statistical assertion (exit 3).
class StatisticalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string Hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json LoadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed: " + path.string());
}

void WriteJson(const fs::path& path, const json& j) { WriteText(path, j.dump(2) + "\n"); }

void WriteTable(const fs::path& path, const std::vector<std::string>& header,
                const std::vector<std::vector<double>>& rows) {
  std::string text;
  for (size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
  text += '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) text += (i ? "," : "") + stats::FormatDouble(row[i]);
    text += '\n';
  }
  WriteText(path, text);
}

std::vector<std::string> Columns(const std::string& prefix, int count) {
  if (count == 1) return {"value"};
  std::vector<std::string> out;
  for (int i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// Runs `fn` and reports any library error as a configuration error.
template <typename F>
auto AsConfig(F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

// ---- config ---------------------------------------------------------------

const char* ScheduleName(Schedule s) { return s == Schedule::kThreaded ? "threaded" : "sequential"; }

json EngineToJson(const EngineConfig& c) {
  return {{"parties", c.parties},
          {"threshold", c.threshold},
          {"prime", ToDecimal(c.prime)},
          {"k_fx", c.k_fx},
          {"f_fx", c.f_fx},
          {"k_clt", c.k_clt},
          {"k_trap", c.k_trap},
          {"bisection_tol", c.bisection_tol},
          {"check_bits", c.check_bits},
          {"allow_dealer_triples", c.allow_dealer_triples},
          {"schedule", ScheduleName(c.schedule)}};
}

void CheckKeys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void Read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

EngineConfig EngineFromJson(const json& j) {
  CheckKeys(j, "engine",
            {"parties", "threshold", "prime", "k_fx", "f_fx", "k_clt", "k_trap", "bisection_tol",
             "check_bits", "allow_dealer_triples", "schedule"});
  EngineConfig c;
  Read(j, "parties", c.parties, "engine");
  Read(j, "threshold", c.threshold, "engine");
  if (j.contains("prime")) {
    if (!j["prime"].is_string()) throw ConfigError("engine.prime must be a decimal string");
    c.prime = ParseUint128(j["prime"].get<std::string>());
  }
  Read(j, "k_fx", c.k_fx, "engine");
  Read(j, "f_fx", c.f_fx, "engine");
  Read(j, "k_clt", c.k_clt, "engine");
  Read(j, "k_trap", c.k_trap, "engine");
  Read(j, "bisection_tol", c.bisection_tol, "engine");
  Read(j, "check_bits", c.check_bits, "engine");
  Read(j, "allow_dealer_triples", c.allow_dealer_triples, "engine");
  std::string schedule = ScheduleName(c.schedule);
  Read(j, "schedule", schedule, "engine");
  if (schedule == "sequential") {
    c.schedule = Schedule::kSequential;
  } else if (schedule == "threaded") {
    c.schedule = Schedule::kThreaded;
  } else {
    throw ConfigError("engine.schedule must be 'sequential' or 'threaded'");
  }
  return c;
}

// Typed access to command parameters; rejects keys the command does not use.
class Params {
 public:
  Params(const json& params, const std::string& command, std::set<std::string> allowed)
      : params_(params), where_("params of '" + command + "'") {
    CheckKeys(params_, where_, allowed);
  }

  bool Has(const char* key) const { return params_.contains(key); }
  template <typename T>
  T Get(const char* key, T fallback) const {
    Read(params_, key, fallback, where_);
    return fallback;
  }
  std::string Require(const char* key) const {
    if (!Has(key)) throw ConfigError(where_ + ": missing '" + key + "'");
    return Get<std::string>(key, "");
  }

 private:
  const json& params_;
  std::string where_;
};

// ---- artifacts ------------------------------------------------------------

json SeedLedgerJson(const SeedLedger& ledger) {
  json by = json::object();
  for (const auto& [label, bits] : ledger.by_protocol) by[label] = bits;
  return {{"per_party", ledger.per_party}, {"total", ledger.total()}, {"by_protocol", by}};
}

json TranscriptJson(const Transcript& t) {
  json gates = json::object();
  for (size_t k = 0; k < t.gate_counts.size(); ++k) {
    gates[std::string(GateKindName(static_cast<GateKind>(k)))] = t.gate_counts[k];
  }
  json ideal = json::object();
  for (size_t k = 0; k < t.ideal_counts.size(); ++k) {
    if (t.ideal_counts[k]) ideal[std::string(IdealKindName(static_cast<IdealKind>(k)))] = t.ideal_counts[k];
  }
  json views = json::array();
  for (const PartyView& v : t.views) {
    views.push_back({{"party", v.index},
                     {"seed_bits", v.seed_bit_count},
                     {"messages", v.message_count},
                     {"opens", v.open_count},
                     {"outputs", v.output_count},
                     {"seed_injected", v.seed_injected},
                     {"digest", Hex(v.digest)}});
  }
  return {{"rounds", t.rounds},
          {"gate_digest", Hex(t.gate_digest)},
          {"gates", gates},
          {"ideal", ideal},
          {"views", views}};
}

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Writes <stem>.csv, <stem>.csv.json and <stem>.transcript.json.
struct Artifact {
  std::string stem;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  json metadata = json::object();
};

void Publish(const RunConfig& cfg, const Engine& engine, Artifact art, double seconds,
             std::ostream& out) {
  // Production runs never replace a party's seed source.
  if (engine.transcript().any_seed_injected()) {
    throw IntegrityError("a seed source was replaced during a production run");
  }
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
  const fs::path csv = dir / (art.stem + ".csv");
  const fs::path transcript = dir / (art.stem + ".transcript.json");
  WriteTable(csv, art.header, art.rows);
  WriteJson(transcript, TranscriptJson(engine.transcript()));
  art.metadata["columns"] = art.header;
  art.metadata["rows"] = art.rows.size();
  art.metadata["config"] = cfg.ToJson();
  art.metadata["seed_ledger"] = SeedLedgerJson(engine.ledger());
  art.metadata["transcript"] = transcript.filename().string();
  art.metadata["timing"] = {{"seconds", seconds},
                            {"per_row_ms", art.rows.empty() ? 0.0 : 1e3 * seconds / art.rows.size()}};
  WriteJson(csv.string() + ".json", art.metadata);
  out << csv.string() << '\n';
}

std::string Sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ':', '-');
  return s;
}

// ---- reference distributions ------------------------------------------------

json NamedReference(const std::string& name) {
  if (name == "uniform") return {{"name", "uniform"}};
  if (name == "normal") return {{"name", "normal"}, {"mean", 0.0}, {"sd", 1.0}};
  if (name == "exponential") return {{"name", "exponential"}, {"rate", 1.0}};
  if (name == "laplace") return {{"name", "laplace"}, {"scale", 1.0}};
  if (name == "gamma") return {{"name", "gamma"}, {"shape", 2}, {"rate", 1.0}};
  if (name == "bernoulli") return {{"name", "bernoulli"}, {"p", 0.5}};
  throw ConfigError("unknown reference distribution '" + name + "'");
}

std::function<double(double)> ReferenceCdf(const json& ref) {
  const std::string name = ref.value("name", "");
  if (name == "uniform") return [](double x) { return std::clamp(x, 0.0, 1.0); };
  if (name == "normal") {
    boost::math::normal_distribution<double> d(ref.value("mean", 0.0), ref.value("sd", 1.0));
    return [d](double x) { return boost::math::cdf(d, x); };
  }
  if (name == "exponential") {
    boost::math::exponential_distribution<double> d(ref.value("rate", 1.0));
    return [d](double x) { return x <= 0 ? 0.0 : boost::math::cdf(d, x); };
  }
  if (name == "laplace") {
    boost::math::laplace_distribution<double> d(ref.value("location", 0.0), ref.value("scale", 1.0));
    return [d](double x) { return boost::math::cdf(d, x); };
  }
  if (name == "gamma") {
    boost::math::gamma_distribution<double> d(ref.value("shape", 2.0), 1.0 / ref.value("rate", 1.0));
    return [d](double x) { return x <= 0 ? 0.0 : boost::math::cdf(d, x); };
  }
  throw ConfigError("no continuous reference '" + name + "'");
}

// ---- sample -----------------------------------------------------------------

int CmdSample(const RunConfig& cfg, std::ostream& out) {
  const Params p(cfg.params, "sample", {"which", "count", "dim", "rate", "scale", "shape"});
  const std::string which = p.Require("which");
  const int count = p.Get("count", 1000);
  if (count < 0) throw ConfigError("count must be non-negative");

  Artifact art;
  art.stem = "sample-" + Sanitize(which);
  art.header = {"value"};
  std::function<std::vector<double>(FixedArith&)> draw;
  if (which == "bernoulli") {
    art.metadata["reference"] = NamedReference("bernoulli");
    draw = [](FixedArith& fa) {
      return std::vector<double>{fa.engine().Open(MpBernoulli(fa.engine()).value) == FieldElement(1)
                                     ? 1.0
                                     : 0.0};
    };
  } else if (which == "gaussian") {
    art.metadata["reference"] = NamedReference("normal");
    const int k = cfg.engine.k_clt;
    draw = [k](FixedArith& fa) { return std::vector<double>{fa.Open(MpGaussian01(fa, k).value)}; };
  } else if (which == "uniform") {
    art.metadata["reference"] = NamedReference("uniform");
    draw = [](FixedArith& fa) { return std::vector<double>{fa.Open(MpUniform01(fa).value)}; };
  } else if (which.starts_with("inverse:")) {
    const std::string name = which.substr(8);
    UnivariateDistribution dist = AsConfig([&] {
      if (name == "exponential") {
        const double rate = p.Get("rate", 1.0);
        return UnivariateDistribution::Exponential(rate);
      }
      if (name == "laplace") return UnivariateDistribution::Laplace(p.Get("scale", 1.0));
      if (name == "normal") return UnivariateDistribution::StandardNormal();
      if (name == "gamma") return UnivariateDistribution::GammaUnitRate(p.Get("shape", 2));
      throw ConfigError("unknown inverse target '" + name + "' (exponential, laplace, normal, gamma)");
    });
    json ref = NamedReference(name);
    if (name == "exponential") ref["rate"] = p.Get("rate", 1.0);
    if (name == "laplace") ref["scale"] = p.Get("scale", 1.0);
    if (name == "gamma") ref["shape"] = p.Get("shape", 2);
    art.metadata["reference"] = ref;
    draw = [dist](FixedArith& fa) { return std::vector<double>{fa.Open(MpInverseSample(fa, dist).value)}; };
  } else if (which == "polar") {
    const int dim = p.Get("dim", 2);
    const double rate = p.Get("rate", 1.0);
    if (dim < 1) throw ConfigError("dim must be positive");
    if (!(rate > 0) || !std::isfinite(rate)) throw ConfigError("rate must be positive");
    art.header = Columns("x", dim);
    art.metadata["reference"] = {{"name", "radial-polar"}, {"dim", dim}, {"rate", rate},
                                 {"radius", {{"name", "gamma"}, {"shape", dim}, {"rate", rate}}}};
    draw = [dim, rate](FixedArith& fa) {
      SamplerResult<RadialDraw> r = MpRadialPolar(fa, dim, rate);
      std::vector<double> row;
      for (const SecretFixed& x : r.value.value) row.push_back(fa.Open(x));
      return row;
    };
  } else {
    throw ConfigError("unknown sampler '" + which +
                      "' (bernoulli, gaussian, uniform, inverse:<dist>, polar)");
  }
  art.metadata["artifact"] = "sample";
  art.metadata["which"] = which;

  Engine engine(cfg.engine);
  FixedArith fa(engine);
  Stopwatch clock;
  for (int i = 0; i < count; ++i) art.rows.push_back(draw(fa));
  Publish(cfg, engine, std::move(art), clock.Seconds(), out);
  return kExitOk;
}

// ---- mechanism --------------------------------------------------------------

QuerySpec ParseQuery(const json& j) {
  if (!j.is_object()) throw ConfigError("query must be an object");
  const std::string type = j.value("type", "");
  if (type == "count_at_least") {
    if (!j.contains("threshold") || !j["threshold"].is_number()) {
      throw ConfigError("count_at_least needs a numeric threshold");
    }
    return QuerySpec::CountAtLeast(j["threshold"].get<double>());
  }
  if (type == "clipped_sum") {
    if (!j.contains("bound") || !j["bound"].is_number() || !(j["bound"].get<double>() > 0)) {
      throw ConfigError("clipped_sum needs a positive bound");
    }
    return QuerySpec::ClippedSum(j["bound"].get<double>());
  }
  throw ConfigError("query.type must be count_at_least or clipped_sum");
}

PartyInputs ParseInputs(const json& j, int parties) {
  PartyInputs inputs;
  try {
    inputs = j.get<PartyInputs>();
  } catch (const json::exception&) {
    throw ConfigError("inputs must be a list of number lists, one per party");
  }
  if (static_cast<int>(inputs.size()) > parties) {
    throw ConfigError("more input lists than parties");
  }
  for (const auto& list : inputs) {
    for (double x : list) {
      if (!std::isfinite(x)) throw ConfigError("non-finite input");
    }
  }
  return inputs;
}

std::vector<double> ParseNumbers(const json& j, const char* what) {
  try {
    std::vector<double> v = j.get<std::vector<double>>();
    for (double x : v) {
      if (!std::isfinite(x)) throw ConfigError(std::string("non-finite value in ") + what);
    }
    return v;
  } catch (const json::exception&) {
    throw ConfigError(std::string(what) + " must be a list of numbers");
  }
}

void AddOutputMoments(Artifact& art) {
  if (art.rows.size() < 2) return;
  json mean = json::array(), sd = json::array();
  for (size_t c = 0; c < art.header.size(); ++c) {
    std::vector<double> col;
    for (const auto& row : art.rows) col.push_back(row[c]);
    stats::Moments m = stats::SampleMoments(col);
    mean.push_back(m.mean);
    sd.push_back(std::sqrt(m.variance));
  }
  art.metadata["output_mean"] = mean;
  art.metadata["output_std"] = sd;
}

int CmdMechanism(const RunConfig& cfg, std::ostream& out) {
  const Params p(cfg.params, "mechanism", {"which", "input", "count", "epsilon", "delta", "sweeps"});
  const std::string which = p.Require("which");
  const int count = p.Get("count", 1);
  if (count < 0) throw ConfigError("count must be non-negative");
  const json input = LoadJson(p.Require("input"));

  Artifact art;
  art.stem = "mechanism-" + which;
  art.metadata["artifact"] = "mechanism";
  art.metadata["which"] = which;
  BudgetLedger ledger;
  std::function<std::vector<double>(FixedArith&)> run;

  if (which == "gaussian" || which == "laplace") {
    CheckKeys(input, "mechanism input", {"query", "inputs"});
    if (!input.contains("query") || !input.contains("inputs")) {
      throw ConfigError("mechanism input needs 'query' and 'inputs'");
    }
    auto query = std::make_shared<QuerySpec>(ParseQuery(input["query"]));
    auto inputs = std::make_shared<PartyInputs>(ParseInputs(input["inputs"], cfg.engine.parties));
    const double eps = p.Get("epsilon", 1.0);
    art.header = Columns("y", query->outputs);
    art.metadata["query"] = input["query"];
    if (which == "gaussian") {
      const double delta = p.Get("delta", 1e-5);
      auto charged = std::make_shared<PrivacyParams>(PrivacyParams{eps, delta, query->l2_sensitivity});
      AsConfig([&] { charged->Validate(); });
      const double sigma = AsConfig([&] { return GaussianSigma(eps, delta, query->l2_sensitivity); });
      const GaussianScaling scaling =
          cfg.paper_literal ? GaussianScaling::kPaperLiteral : GaussianScaling::kCorrected;
      art.metadata["sigma"] = sigma;
      art.metadata["scaling"] = cfg.paper_literal ? "paper-literal" : "corrected";
      art.metadata["noise_std_nominal"] = cfg.paper_literal ? sigma / 2 : sigma;
      run = [=, &ledger](FixedArith& fa) {
        return MpGaussianMechanism(fa, *query, *inputs, sigma, scaling, charged.get(), &ledger).output;
      };
    } else {
      AsConfig([&] { PrivacyParams{eps, 0, query->l1_sensitivity}.Validate(); });
      const double scale = query->l1_sensitivity / eps;
      art.metadata["noise"] = {{"name", "laplace"}, {"scale", scale}};
      run = [=, &ledger](FixedArith& fa) {
        return MpLaplaceMechanism(fa, *query, *inputs, eps, query->l1_sensitivity, &ledger).output;
      };
    }
  } else if (which == "exponential") {
    CheckKeys(input, "mechanism input", {"utilities", "sensitivity"});
    if (!input.contains("utilities")) throw ConfigError("exponential input needs 'utilities'");
    const std::vector<double> utilities = ParseNumbers(input["utilities"], "utilities");
    if (utilities.empty()) throw ConfigError("utilities must be nonempty");
    const double du = input.value("sensitivity", 1.0);
    const double eps = p.Get("epsilon", 1.0);
    AsConfig([&] { PrivacyParams{eps, 0, du}.Validate(); });
    if (!(du > 0)) throw ConfigError("utility sensitivity must be positive");
    // Exact softmax over the utilities.
    const double top = *std::max_element(utilities.begin(), utilities.end());
    std::vector<double> weights;
    for (double u : utilities) weights.push_back(std::exp(eps * (u - top) / (2 * du)));
    const double total = ExactSum(weights);
    for (double& w : weights) w /= total;
    art.metadata["reference"] = {{"name", "categorical"}, {"probabilities", weights}};
    art.metadata["utilities"] = utilities;
    run = [=, &ledger](FixedArith& fa) {
      std::vector<SecretFixed> shared;
      for (double u : utilities) shared.push_back(fa.Input(1, u));
      return std::vector<double>{
          static_cast<double>(MpExpMechanismDiscrete(fa, shared, eps, du, &ledger))};
    };
  } else if (which == "gibbs") {
    CheckKeys(input, "mechanism input", {"rho", "box", "init", "sweeps", "epsilon"});
    const double rho = input.value("rho", 0.5);
    if (!(std::abs(rho) < 1)) throw ConfigError("rho must lie in (-1, 1)");
    auto options = std::make_shared<GibbsOptions>();
    try {
      options->box = input.value("box", std::vector<std::pair<double, double>>{{-2, 2}, {-2, 2}});
    } catch (const json::exception&) {
      throw ConfigError("box must be [[lo, hi], [lo, hi]]");
    }
    if (options->box.size() != 2) throw ConfigError("the bivariate target needs a 2-D box");
    for (auto [lo, hi] : options->box) {
      if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw ConfigError("bad box side");
    }
    const std::vector<double> init =
        input.contains("init") ? ParseNumbers(input["init"], "init") : std::vector<double>{0.0};
    if (init.size() != 1) throw ConfigError("init holds the first coordinate only");
    options->sweeps = p.Get("sweeps", input.value("sweeps", 200));
    if (options->sweeps < 1) throw ConfigError("sweeps must be positive");
    std::shared_ptr<PrivacyParams> charged;
    if (p.Has("epsilon") || input.contains("epsilon")) {
      charged = std::make_shared<PrivacyParams>(
          PrivacyParams{p.Get("epsilon", input.value("epsilon", 1.0)), 0, 1});
      AsConfig([&] { charged->Validate(); });
      options->charged = charged.get();
      options->ledger = &ledger;
    }
    art.header = Columns("x", 2);
    art.metadata["target"] = {{"name", "bivariate-normal"}, {"rho", rho}, {"box", options->box}};
    art.metadata["sweeps"] = options->sweeps;
    const FuncSpec density = fixtures::BivariateNormal(rho);
    run = [=](FixedArith& fa) { return MpExpMechanismGibbs(fa, density, init, *options); };
  } else {
    throw ConfigError("unknown mechanism '" + which + "' (gaussian, laplace, exponential, gibbs)");
  }

  Engine engine(cfg.engine);
  FixedArith fa(engine);
  Stopwatch clock;
  for (int i = 0; i < count; ++i) art.rows.push_back(run(fa));
  const double seconds = clock.Seconds();
  AddOutputMoments(art);
  if (which == "exponential") {
    const size_t m = art.metadata["utilities"].size();
    std::vector<uint64_t> histogram(m, 0);
    for (const auto& row : art.rows) ++histogram[static_cast<size_t>(row[0]) - 1];
    art.metadata["histogram"] = histogram;
  }
  if (!ledger.charges().empty()) {
    const Charge& c = ledger.charges().front();
    art.metadata["charge"] = {{"epsilon", c.epsilon}, {"delta", c.delta}, {"label", c.label}};
  }
  art.metadata["ledger"] = ledger.ToJson();
  Publish(cfg, engine, std::move(art), seconds, out);
  return kExitOk;
}

// ---- test suites ------------------------------------------------------------

int Report(const RunConfig& cfg, const std::string& suite, json report, std::ostream& out) {
  report["suite"] = suite;
  report["config"] = cfg.ToJson();
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
  WriteJson(dir / ("test-" + suite + ".json"), report);
  json brief = report;
  brief.erase("config");
  out << brief.dump(2) << '\n';
  if (!report.at("pass").get<bool>()) throw StatisticalFailure("suite '" + suite + "' failed");
  return kExitOk;
}

int SuiteGof(const RunConfig& cfg, const Params& p, std::ostream& out) {
  const std::string path = p.Require("input");
  const double alpha = p.Get("alpha", 0.01);
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must lie in (0, 1)");
  const stats::SampleBatch batch = AsConfig([&] { return stats::ReadBatch(path); });
  json ref = p.Has("dist") ? NamedReference(p.Get<std::string>("dist", ""))
                           : batch.metadata.value("reference", json());
  if (ref.is_null()) throw ConfigError(path + ": no reference distribution; pass --dist");
  const std::string name = ref.value("name", "");
  stats::TestDecision d;
  std::string test;
  if (name == "bernoulli" || name == "categorical") {
    std::vector<double> probs = name == "bernoulli"
                                    ? std::vector<double>{0.5, 0.5}
                                    : ref.at("probabilities").get<std::vector<double>>();
    const double offset = name == "bernoulli" ? 0 : 1;
    std::vector<uint64_t> counts(probs.size(), 0);
    for (double v : batch.values) {
      const double idx = v - offset;
      if (idx != std::floor(idx) || idx < 0 || idx >= static_cast<double>(probs.size())) {
        throw ConfigError(path + ": value " + stats::FormatDouble(v) + " outside the support");
      }
      ++counts[static_cast<size_t>(idx)];
    }
    std::vector<double> expected;
    for (double q : probs) expected.push_back(q * static_cast<double>(batch.values.size()));
    d = AsConfig([&] { return stats::ChiSquareGof(counts, expected, alpha); });
    test = "chi2";
  } else {
    d = stats::KsOneSample(batch.values, ReferenceCdf(ref), alpha);
    test = "ks";
  }
  return Report(cfg, "gof",
                {{"input", path},
                 {"n", batch.values.size()},
                 {"reference", ref},
                 {"test", test},
                 {"statistic", d.statistic},
                 {"critical", d.critical},
                 {"p_value", d.p_value},
                 {"alpha", alpha},
                 {"pass", !d.rejected}},
                out);
}

int SuiteSeeds(const RunConfig& cfg, const Params& p, std::ostream& out) {
  const int bits = p.Get("bits", 1024);
  if (bits < 1) throw ConfigError("bits must be positive");
  json checks = json::array();
  bool pass = true;
  auto check = [&](const std::string& id, const SeedLedger& ledger, const std::string& label,
                   uint64_t expected) {
    std::vector<uint64_t> scoped = ledger.by_protocol.contains(label)
                                       ? ledger.by_protocol.at(label)
                                       : std::vector<uint64_t>(ledger.per_party.size(), 0);
    bool ok = true;
    for (size_t i = 0; i < ledger.per_party.size(); ++i) {
      ok = ok && ledger.per_party[i] == expected && scoped[i] == expected;
    }
    pass = pass && ok;
    checks.push_back({{"id", id}, {"expected_per_party", expected},
                      {"per_party", ledger.per_party}, {"pass", ok}});
  };
  {
    Engine engine(cfg.engine);
    for (int i = 0; i < bits; ++i) engine.Open(MpBernoulli(engine).value);
    check("bernoulli-stream", engine.ledger(), "bernoulli", static_cast<uint64_t>(bits));
  }
  {
    Engine engine(cfg.engine);
    FixedArith fa(engine);
    fa.Open(MpGaussian01(fa, cfg.engine.k_clt).value);
    check("gaussian01", engine.ledger(), "gaussian01", static_cast<uint64_t>(cfg.engine.k_clt));
  }
  return Report(cfg, "seeds", {{"bits", bits}, {"checks", checks}, {"pass", pass}}, out);
}

int SuiteAccountant(const RunConfig& cfg, const Params& p, std::ostream& out) {
  using Wide = boost::multiprecision::cpp_bin_float_100;
  const int lists = p.Get("lists", 1000);
  if (lists < 1) throw ConfigError("lists must be positive");
  CounterRng rng(DeriveKey(cfg.engine.master_seed, 0xacc0));
  int mismatches = 0;
  json first_mismatch;
  for (int l = 0; l < lists; ++l) {
    const int length = 1 + static_cast<int>(rng.Next() % 64);
    BudgetLedger ledger;
    std::vector<std::pair<double, double>> charges;
    Wide eps_sum = 0, delta_sum = 0;
    for (int c = 0; c < length; ++c) {
      // Magnitudes spread over ten decades so that naive summation rounds.
      const double eps =
          rng.NextUnit() * std::pow(10.0, static_cast<double>(rng.Next() % 10) - 6);
      const double delta = rng.NextUnit() * 1e-6;
      ledger.Add({eps, delta, "charge"});
      charges.emplace_back(eps, delta);
      eps_sum += Wide(eps);
      delta_sum += Wide(delta);
    }
    const double want_eps = static_cast<double>(eps_sum);
    const double want_delta = static_cast<double>(delta_sum);
    const auto [eps, delta] = AccountantCompose(charges);
    if (ledger.epsilon() != want_eps || ledger.delta() != want_delta || eps != want_eps ||
        delta != want_delta) {
      if (mismatches++ == 0) {
        first_mismatch = {{"list", l}, {"epsilon", ledger.epsilon()}, {"expected_epsilon", want_eps},
                          {"delta", ledger.delta()}, {"expected_delta", want_delta}};
      }
    }
  }
  json report = {{"lists", lists}, {"mismatches", mismatches}, {"pass", mismatches == 0}};
  if (mismatches) report["first_mismatch"] = first_mismatch;
  return Report(cfg, "accountant", report, out);
}

int SuiteObliviousness(const RunConfig& cfg, const Params& p, std::ostream& out) {
  SoundnessOptions options;
  options.alpha = p.Get("alpha", 0.01);
  options.trials = p.Get("trials", 0);
  options.master_seed = cfg.engine.master_seed;
  options.workers = p.Get("workers", 0u);
  if (!(options.alpha > 0 && options.alpha < 1)) throw ConfigError("alpha must lie in (0, 1)");
  if (options.trials != 0 && options.trials < 100) throw ConfigError("trials must be 0 or >= 100");
  const std::vector<std::string> only = p.Get("only", std::vector<std::string>{});
  const bool controls = p.Get("include_negative_controls", false);
  const int power_reps = p.Get("power_reps", 100);
  const int power_trials = p.Get("power_trials", 5000);
  if (controls && (power_reps < 1 || power_trials < 100)) {
    throw ConfigError("power_reps must be positive and power_trials >= 100");
  }

  std::vector<CatalogEntry> catalog = SecureCatalog(cfg.engine);
  for (const std::string& id : only) {
    if (std::none_of(catalog.begin(), catalog.end(), [&](const CatalogEntry& e) { return e.id == id; })) {
      throw ConfigError("unknown protocol '" + id + "' in --only");
    }
  }
  json families = json::array();
  int rejected = 0;
  for (const CatalogEntry& entry : catalog) {
    if (!only.empty() && std::find(only.begin(), only.end(), entry.id) == only.end()) continue;
    FamilyVerdict f = SoundnessFamily(entry, cfg.engine.parties, options);
    rejected += f.rejected;
    families.push_back(f.ToJson());
  }
  // At most one family may reject by chance.
  bool pass = rejected <= 1;
  json report = {{"families", families}, {"rejected_families", rejected}};
  if (controls) {
    json control_json = json::array();
    uint64_t key = DeriveKey(cfg.engine.master_seed, 0xc0);
    for (const ProtocolUnderTest& c : NegativeControls(cfg.engine)) {
      const double power =
          EstimatePower(c, power_trials, power_reps, options.alpha, key++, options.workers);
      const bool ok = power >= 0.99;
      pass = pass && ok;
      control_json.push_back({{"protocol", c.id}, {"trials", power_trials},
                              {"repetitions", power_reps}, {"power", power}, {"pass", ok}});
    }
    report["negative_controls"] = control_json;
  }
  report["pass"] = pass;
  return Report(cfg, "obliviousness", report, out);
}

int CmdTest(const RunConfig& cfg, std::ostream& out) {
  const Params p(cfg.params, "test",
                 {"which", "input", "dist", "alpha", "bits", "lists", "trials", "only",
                  "include_negative_controls", "power_reps", "power_trials", "workers"});
  const std::string suite = p.Require("which");
  if (suite == "gof") return SuiteGof(cfg, p, out);
  if (suite == "seeds") return SuiteSeeds(cfg, p, out);
  if (suite == "accountant") return SuiteAccountant(cfg, p, out);
  if (suite == "obliviousness") return SuiteObliviousness(cfg, p, out);
  throw ConfigError("unknown suite '" + suite + "' (obliviousness, gof, seeds, accountant)");
}

// ---- erm --------------------------------------------------------------------

int CmdErm(const RunConfig& cfg, std::ostream& out) {
  const Params p(cfg.params, "erm", {"data", "manifest", "regularization", "epsilon"});
  const ErmDataset data = ReadErmDataset(p.Require("data"), p.Require("manifest"));
  ErmParams params;
  params.regularization = p.Get("regularization", params.regularization);
  params.epsilon = p.Get("epsilon", params.epsilon);
  params.paper_literal_rate = cfg.paper_literal;
  AsConfig([&] { params.Validate(); });
  if (static_cast<int>(data.parts.size()) > cfg.engine.parties) {
    throw ConfigError("the manifest lists more owners than parties");
  }
  // The never-opened assertion needs the gate log.
  EngineConfig engine_config = cfg.engine;
  engine_config.transcript_mode = TranscriptMode::kFull;
  Engine engine(engine_config);
  FixedArith fa(engine);
  BudgetLedger ledger;
  Stopwatch clock;
  const ErmResult result = MpDpErm(fa, data, params, &ledger);
  const double seconds = clock.Seconds();

  Artifact art;
  art.stem = "erm";
  art.header = Columns("f", data.dim);
  art.rows.push_back(result.released);
  art.metadata = result.ToJson();
  art.metadata["artifact"] = "erm";
  art.metadata["records"] = data.total();
  art.metadata["dim"] = data.dim;
  art.metadata["clipped"] = data.clipped;
  art.metadata["minimizer_opened"] = false;
  art.metadata["ledger"] = ledger.ToJson();
  Publish(cfg, engine, std::move(art), seconds, out);
  return kExitOk;
}

// ---- flags ------------------------------------------------------------------

// Collects subcommand options that override params entries when given.
class ParamFlags {
 public:
  template <typename T>
  CLI::Option* Add(CLI::App* app, const std::string& flag, const std::string& key,
                   const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    apply_.push_back([value, opt, key](json& params) {
      if (opt->count() > 0) params[key] = *value;
    });
    return opt;
  }
  void AddFlag(CLI::App* app, const std::string& flag, const std::string& key,
               const std::string& help) {
    CLI::Option* opt = app->add_flag(flag, help);
    apply_.push_back([opt, key](json& params) {
      if (opt->count() > 0) params[key] = true;
    });
  }
  void Apply(json& params) const {
    for (const auto& fn : apply_) fn(params);
  }

 private:
  std::vector<std::function<void(json&)>> apply_;
};

}  // namespace

json RunConfig::ToJson() const {
  return {{"command", command},
          {"seed", engine.master_seed},
          {"out_dir", out_dir},
          {"paper_literal", paper_literal},
          {"engine", EngineToJson(engine)},
          {"params", params}};
}

RunConfig RunConfig::FromJson(const json& j) {
  if (j.is_object() && j.contains("config")) return FromJson(j["config"]);
  CheckKeys(j, "config", {"command", "seed", "out_dir", "paper_literal", "engine", "params"});
  RunConfig c;
  if (j.contains("engine")) c.engine = EngineFromJson(j["engine"]);
  Read(j, "seed", c.engine.master_seed, "config");
  Read(j, "command", c.command, "config");
  Read(j, "out_dir", c.out_dir, "config");
  Read(j, "paper_literal", c.paper_literal, "config");
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ConfigError("config.params must be an object");
    c.params = j["params"];
  }
  return c;
}

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiparty random-variate generation and DP mechanisms on a simulated engine.\n"
               "Precedence: built-in defaults < --config file < command-line flags.",
               "mprf"};
  std::optional<std::string> config_path, out_dir;
  std::optional<uint64_t> seed;
  std::optional<int> parties, threshold;
  bool paper_literal = false;
  app.add_option("--config", config_path, "JSON run config, or any artifact sidecar to repeat it");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out-dir", out_dir, "Directory for artifacts");
  app.add_option("--parties", parties, "Number of parties n");
  app.add_option("--threshold", threshold, "Shamir threshold t");
  app.add_flag("--paper-literal", paper_literal,
               "Gaussian: literal sqrt(k) scaling (std sigma/2); ERM: 2/(k Lambda eps) used as the rate");
  app.require_subcommand(0, 1);

  std::map<std::string, ParamFlags> flags;
  CLI::App* sample = app.add_subcommand("sample", "Draw samples from a secure sampler");
  flags["sample"].Add<std::string>(sample, "which", "which",
                                   "bernoulli | gaussian | uniform | inverse:<exponential|laplace|normal|gamma> | polar");
  flags["sample"].Add<int>(sample, "--count", "count", "Number of draws (default 1000)");
  flags["sample"].Add<int>(sample, "--dim", "dim", "polar: dimension (default 2)");
  flags["sample"].Add<double>(sample, "--rate", "rate", "polar / inverse:exponential rate (default 1)");
  flags["sample"].Add<double>(sample, "--scale", "scale", "inverse:laplace scale (default 1)");
  flags["sample"].Add<int>(sample, "--shape", "shape", "inverse:gamma shape (default 2)");

  CLI::App* mechanism = app.add_subcommand("mechanism", "Run a DP mechanism on shared inputs");
  flags["mechanism"].Add<std::string>(mechanism, "which", "which",
                                      "gaussian | laplace | exponential | gibbs");
  flags["mechanism"].Add<std::string>(mechanism, "--input", "input", "Query/utility/target JSON file");
  flags["mechanism"].Add<int>(mechanism, "--count", "count", "Number of releases (default 1)");
  flags["mechanism"].Add<double>(mechanism, "--epsilon", "epsilon", "Privacy parameter (default 1)");
  flags["mechanism"].Add<double>(mechanism, "--delta", "delta", "gaussian: delta (default 1e-5)");
  flags["mechanism"].Add<int>(mechanism, "--sweeps", "sweeps", "gibbs: sweeps per chain (default 200)");

  CLI::App* test = app.add_subcommand("test", "Run a check suite; exit 3 when it fails");
  flags["test"].Add<std::string>(test, "suite", "which", "obliviousness | gof | seeds | accountant");
  flags["test"].Add<std::string>(test, "--input", "input", "gof: sample CSV");
  flags["test"].Add<std::string>(test, "--dist", "dist",
                                 "gof: uniform | normal | exponential | laplace | gamma | bernoulli");
  flags["test"].Add<double>(test, "--alpha", "alpha", "Significance level (default 0.01)");
  flags["test"].Add<int>(test, "--bits", "bits", "seeds: stream length (default 1024)");
  flags["test"].Add<int>(test, "--lists", "lists", "accountant: charge lists (default 1000)");
  flags["test"].Add<int>(test, "--trials", "trials", "obliviousness: runs per arm (default per protocol)");
  flags["test"]
      .Add<std::vector<std::string>>(test, "--only", "only", "obliviousness: protocol ids")
      ->delimiter(',');
  flags["test"].AddFlag(test, "--include-negative-controls", "include_negative_controls",
                        "obliviousness: estimate power on the insecure constructions");
  flags["test"].Add<int>(test, "--power-reps", "power_reps", "Control repetitions (default 100)");
  flags["test"].Add<int>(test, "--power-trials", "power_trials", "Control runs per arm (default 5000)");
  flags["test"].Add<unsigned>(test, "--workers", "workers", "Worker threads (default: all cores)");

  CLI::App* erm = app.add_subcommand("erm", "Differentially private logistic regression");
  flags["erm"].Add<std::string>(erm, "--data", "data", "CSV of features and a final label column");
  flags["erm"].Add<std::string>(erm, "--manifest", "manifest", "Row ownership JSON");
  flags["erm"].Add<double>(erm, "--regularization", "regularization", "Lambda (default 0.1)");
  flags["erm"].Add<double>(erm, "--epsilon", "epsilon", "Privacy parameter (default 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  RunConfig cfg;
  try {
    if (config_path) cfg = RunConfig::FromJson(LoadJson(*config_path));
    if (seed) cfg.engine.master_seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    if (parties) cfg.engine.parties = *parties;
    if (threshold) cfg.engine.threshold = *threshold;
    if (paper_literal) cfg.paper_literal = true;
    const std::vector<CLI::App*> chosen = app.get_subcommands();
    if (!chosen.empty()) {
      const std::string name = chosen.front()->get_name();
      if (!cfg.command.empty() && cfg.command != name) cfg.params = json::object();
      cfg.command = name;
      flags.at(name).Apply(cfg.params);
    }
    if (cfg.command.empty()) throw ConfigError("no command given (sample, mechanism, test, erm)");
    cfg.engine.Validate();
  } catch (const Error& e) {
    err << "mprf: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (cfg.command == "sample") return CmdSample(cfg, out);
    if (cfg.command == "mechanism") return CmdMechanism(cfg, out);
    if (cfg.command == "test") return CmdTest(cfg, out);
    if (cfg.command == "erm") return CmdErm(cfg, out);
    throw ConfigError("unknown command '" + cfg.command + "'");
  } catch (const StatisticalFailure& e) {
    err << "mprf: " << e.what() << '\n';
    return kExitStatistical;
  } catch (const ConfigError& e) {
    err << "mprf: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "mprf: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "mprf: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv = {"mprf"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace mprf::cli
