#ifndef MPRF_TESTS_ACCEPTANCE_ACCEPTANCE_H_
#define MPRF_TESTS_ACCEPTANCE_ACCEPTANCE_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mprf/engine.h"
#include "mprf/fixed_point.h"

namespace mprf::acceptance {

// Checks recorded by one criterion; it passes iff every check passed.
class Outcome {
 public:
  void Check(bool ok, const std::string& note);
  void Note(const std::string& note) { notes_.push_back(note); }
  bool pass() const { return pass_; }
  std::string Summary() const;

 private:
  bool pass_ = true;
  std::vector<std::string> notes_;
};

struct Criterion {
  int number;
  std::string title;
  std::function<void(Outcome&)> run;
};

std::vector<Criterion> AllCriteria();

// n = 3, t = 1 and the default engine parameters.
EngineConfig DeskConfig(uint64_t seed);

// `count` draws split into `chunks` fresh engines keyed DeriveKey(seed, c),
// run in parallel and concatenated in chunk order.
std::vector<std::vector<double>> Collect(const EngineConfig& base, int count, int chunks,
                                         const std::function<std::vector<double>(FixedArith&)>& draw);
std::vector<double> Column(const std::vector<std::vector<double>>& rows, size_t c);

// printf-style formatting for notes.
std::string Fmt(const char* format, ...);

void Criterion01(Outcome& out);
void Criterion02(Outcome& out);
void Criterion03(Outcome& out);
void Criterion04(Outcome& out);
void Criterion05(Outcome& out);
void Criterion06(Outcome& out);
void Criterion07(Outcome& out);
void Criterion08(Outcome& out);
void Criterion09(Outcome& out);
void Criterion10(Outcome& out);
void Criterion11(Outcome& out);
void Criterion12(Outcome& out);
void Criterion13(Outcome& out);
void Criterion14(Outcome& out);

}  // namespace mprf::acceptance

#endif  // MPRF_TESTS_ACCEPTANCE_ACCEPTANCE_H_
