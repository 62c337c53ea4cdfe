#ifndef MPRF_TOOLS_CLI_H_
#define MPRF_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mprf/engine.h"

namespace mprf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitStatistical = 3;

// Everything a run depends on. Echoed into every artifact; feeding an
// artifact back through --config repeats the run.
struct RunConfig {
  EngineConfig engine;
  std::string command;
  nlohmann::json params = nlohmann::json::object();
  std::string out_dir = "out";
  bool paper_literal = false;

  nlohmann::json ToJson() const;
  // Accepts a config object or an artifact holding one under "config".
  // Unknown keys throw ConfigError.
  static RunConfig FromJson(const nlohmann::json& j);
};

// argv[0] is the program name. Returns the process exit code.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
// Arguments without the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mprf::cli

#endif  // MPRF_TOOLS_CLI_H_
