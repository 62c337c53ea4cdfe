#include "mprf/erm.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mprf/errors.h"
#include "mprf/samplers.h"

namespace mprf {

namespace {

constexpr double kGradientTol = 1e-6;
constexpr int kMaxIterations = 10000;

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseCell(const std::string& cell, size_t row) {
  double v = 0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("row " + std::to_string(row) + ": cannot parse '" + cell + "'");
  }
  return v;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// log(1 + exp(z)) without overflow.
double Softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double Sigmoid(double z) {
  return z >= 0 ? 1 / (1 + std::exp(-z)) : std::exp(z) / (1 + std::exp(z));
}

}  // namespace

size_t ErmDataset::total() const {
  size_t k = 0;
  for (const auto& part : parts) k += part.size();
  return k;
}

std::vector<ErmPoint> ErmDataset::Pooled() const {
  std::vector<ErmPoint> out;
  for (const auto& part : parts) out.insert(out.end(), part.begin(), part.end());
  return out;
}

ErmDataset ErmDataset::Ingest(std::vector<std::vector<ErmPoint>> parts) {
  ErmDataset data;
  data.dim = -1;
  for (auto& part : parts) {
    for (ErmPoint& p : part) {
      if (data.dim < 0) data.dim = static_cast<int>(p.x.size());
      if (static_cast<int>(p.x.size()) != data.dim || data.dim == 0) {
        throw ConfigError("every point needs the same positive dimension");
      }
      if (p.y != 1 && p.y != -1) throw ConfigError("labels must be -1 or +1");
      double norm2 = 0;
      for (double v : p.x) {
        if (!std::isfinite(v)) throw ConfigError("non-finite feature");
        norm2 += v * v;
      }
      if (norm2 > 1) {
        const double scale = 1 / std::sqrt(norm2);
        for (double& v : p.x) v *= scale;
        ++data.clipped;
      }
    }
  }
  data.parts = std::move(parts);
  if (data.total() == 0) throw ConfigError("empty dataset");
  return data;
}

ErmDataset ReadErmDataset(const std::string& csv_path, const std::string& manifest_path) {
  std::ifstream csv(csv_path);
  if (!csv) throw ConfigError("cannot open " + csv_path);
  std::string line;
  if (!std::getline(csv, line)) throw ConfigError(csv_path + ": missing header");
  std::vector<std::string> header = SplitCsv(line);
  if (header.size() < 2 || header.back() != "label") {
    throw ConfigError(csv_path + ": header needs feature columns and a final label column");
  }
  std::vector<ErmPoint> rows;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells = SplitCsv(line);
    if (cells.size() != header.size()) {
      throw ConfigError("row " + std::to_string(rows.size()) + ": wrong column count");
    }
    ErmPoint p;
    for (size_t j = 0; j + 1 < cells.size(); ++j) p.x.push_back(ParseCell(cells[j], rows.size()));
    const double label = ParseCell(cells.back(), rows.size());
    if (label != 1 && label != -1) throw ConfigError("labels must be -1 or +1");
    p.y = static_cast<int>(label);
    rows.push_back(std::move(p));
  }

  std::ifstream mf(manifest_path);
  if (!mf) throw ConfigError("cannot open " + manifest_path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mf);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(manifest_path + ": " + e.what());
  }
  if (!manifest.contains("parties") || !manifest["parties"].is_array()) {
    throw ConfigError(manifest_path + ": missing parties list");
  }
  std::vector<int> owner(rows.size(), 0);
  std::vector<std::vector<ErmPoint>> parts;
  int party = 0;
  for (const auto& entry : manifest["parties"]) {
    ++party;
    parts.emplace_back();
    for (const auto& range : entry.at("ranges")) {
      const long long begin = range.at(0).get<long long>();
      const long long end = range.at(1).get<long long>();
      if (begin < 0 || end < begin || end > static_cast<long long>(rows.size())) {
        throw ConfigError("party " + std::to_string(party) + ": bad row range");
      }
      for (long long r = begin; r < end; ++r) {
        if (owner[r] != 0) throw ConfigError("row " + std::to_string(r) + " assigned twice");
        owner[r] = party;
        parts.back().push_back(rows[r]);
      }
    }
  }
  for (size_t r = 0; r < owner.size(); ++r) {
    if (owner[r] == 0) throw ConfigError("row " + std::to_string(r) + " has no owner");
  }
  return ErmDataset::Ingest(std::move(parts));
}

void ErmParams::Validate() const {
  if (!(regularization > 0) || !std::isfinite(regularization)) {
    throw DomainError("regularization must be positive");
  }
  if (!(epsilon > 0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be positive");
}

double ErmParams::NoiseParameter(size_t k) const {
  Validate();
  if (k == 0) throw ConfigError("empty dataset");
  return 2 / (static_cast<double>(k) * regularization * epsilon);
}

double ErmParams::NoiseRate(size_t k) const {
  const double lambda = NoiseParameter(k);
  return paper_literal_rate ? lambda : 1 / lambda;
}

double ErmObjective(std::span<const ErmPoint> points, double regularization,
                    std::span<const double> f) {
  double loss = 0;
  for (const ErmPoint& p : points) loss += Softplus(-p.y * Dot(f, p.x));
  return loss / static_cast<double>(points.size()) + regularization * Dot(f, f) / 2;
}

std::vector<double> ErmGradient(std::span<const ErmPoint> points, double regularization,
                                std::span<const double> f) {
  std::vector<double> g(f.size(), 0.0);
  const double inv_k = 1 / static_cast<double>(points.size());
  for (const ErmPoint& p : points) {
    // d/df log(1 + exp(-y f.x)) = -y x sigmoid(-y f.x)
    const double w = -p.y * Sigmoid(-p.y * Dot(f, p.x)) * inv_k;
    for (size_t j = 0; j < g.size(); ++j) g[j] += w * p.x[j];
  }
  for (size_t j = 0; j < g.size(); ++j) g[j] += regularization * f[j];
  return g;
}

GradientDescentResult PlainErmMinimize(std::span<const ErmPoint> points, int dim,
                                       double regularization) {
  if (points.empty()) throw ConfigError("empty dataset");
  if (!(regularization > 0)) throw DomainError("regularization must be positive");
  // ||x|| <= 1 bounds the loss curvature by 1/4.
  const double step = 1 / (0.25 + regularization);
  GradientDescentResult r;
  r.minimizer.assign(static_cast<size_t>(dim), 0.0);
  for (r.iterations = 0; r.iterations <= kMaxIterations; ++r.iterations) {
    std::vector<double> g = ErmGradient(points, regularization, r.minimizer);
    r.gradient_norm = std::sqrt(Dot(g, g));
    if (r.gradient_norm <= kGradientTol) return r;
    for (size_t j = 0; j < g.size(); ++j) r.minimizer[j] -= step * g[j];
  }
  throw NumericalError("gradient descent did not converge in 10^4 iterations");
}

std::vector<std::vector<SecretFixed>> ShareErmDataset(FixedArith& fa, const ErmDataset& data) {
  if (static_cast<int>(data.parts.size()) > fa.engine().parties()) {
    throw ConfigError("more data partitions than parties");
  }
  std::vector<std::vector<SecretFixed>> rows;
  for (size_t i = 0; i < data.parts.size(); ++i) {
    const int party = static_cast<int>(i) + 1;
    for (const ErmPoint& p : data.parts[i]) {
      std::vector<SecretFixed> row;
      for (double v : p.x) row.push_back(fa.Input(party, v));
      row.push_back(fa.Input(party, p.y));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<SecretFixed> ErmMinimizeIdeal(FixedArith& fa,
                                          const std::vector<std::vector<SecretFixed>>& rows,
                                          int dim, double regularization) {
  if (rows.empty()) throw ConfigError("empty dataset");
  if (!(regularization > 0)) throw DomainError("regularization must be positive");
  std::vector<ShareVector> flat;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != dim + 1) throw ConfigError("row width differs from d + 1");
    for (const SecretFixed& v : row) flat.push_back(v.raw);
  }
  const FixedCodec codec = fa.codec();
  IdealFunction argmin = [&codec, dim, regularization](std::span<const FieldElement> in) {
    std::vector<ErmPoint> points(in.size() / static_cast<size_t>(dim + 1));
    for (size_t r = 0; r < points.size(); ++r) {
      const FieldElement* row = &in[r * static_cast<size_t>(dim + 1)];
      for (int j = 0; j < dim; ++j) points[r].x.push_back(codec.Decode(row[j]));
      points[r].y = codec.Decode(row[dim]) > 0 ? 1 : -1;
    }
    std::vector<FieldElement> out;
    for (double w : PlainErmMinimize(points, dim, regularization).minimizer) {
      out.push_back(codec.Encode(w));
    }
    return out;
  };
  std::vector<ShareVector> shares = fa.engine().Ideal(IdealKind::kErmArgmin, flat, argmin);
  std::vector<SecretFixed> out;
  for (ShareVector& s : shares) out.push_back({std::move(s)});
  return out;
}

nlohmann::json ErmResult::ToJson() const {
  return {{"released", released},
          {"noise_parameter", noise_parameter},
          {"noise_rate", noise_rate},
          {"charge", {{"epsilon", charge.epsilon}, {"delta", charge.delta}, {"label", charge.label}}},
          {"seed_cost", seed_cost}};
}

ErmResult MpDpErm(FixedArith& fa, const ErmDataset& data, const ErmParams& params,
                  BudgetLedger* ledger) {
  params.Validate();
  Engine& engine = fa.engine();
  Engine::Scope scope(engine, "dp-erm");
  const std::vector<uint64_t> start = engine.ledger().per_party;

  ErmResult result;
  result.noise_parameter = params.NoiseParameter(data.total());
  result.noise_rate = params.NoiseRate(data.total());
  std::vector<SecretFixed> f =
      ErmMinimizeIdeal(fa, ShareErmDataset(fa, data), data.dim, params.regularization);
  for (const SecretFixed& v : f) result.minimizer_ids.push_back(v.raw.id());

  RadialDraw noise = MpRadialPolar(fa, data.dim, result.noise_rate).value;
  for (int j = 0; j < data.dim; ++j) {
    result.released.push_back(fa.Open(fa.Add(f[j], noise.value[j])));
  }
  if (engine.transcript().full && SharesOpened(engine.transcript(), result.minimizer_ids)) {
    throw IntegrityError("the minimizer reached an open gate");
  }

  result.charge = {params.epsilon, 0, "dp-erm"};
  if (ledger) ledger->Add(result.charge);
  result.seed_cost = engine.ledger().per_party;
  for (size_t i = 0; i < start.size(); ++i) result.seed_cost[i] -= start[i];
  return result;
}

bool SharesOpened(const Transcript& transcript, std::span<const uint64_t> ids) {
  if (!transcript.full) throw ConfigError("needs a full transcript");
  for (const GateRecord& g : transcript.gates) {
    if (g.kind != GateKind::kOpen) continue;
    for (uint64_t in : g.inputs) {
      for (uint64_t id : ids) {
        if (in == id) return true;
      }
    }
  }
  return false;
}

}  // namespace mprf
