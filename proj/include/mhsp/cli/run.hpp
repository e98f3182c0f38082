#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mhsp/common/json_io.hpp"

namespace mhsp::cli {

inline constexpr const char* kVersion = "0.1.0";

// Everything a run depends on. Unset optionals fall back to the energy
// config; the resolved spec is written to the manifest and can be replayed.
struct RunSpec {
  std::string command;
  std::string config_path;
  std::string archive_path;   // empty selects the built-in synthetic archive
  std::string instance_path;  // solve/export a serialized instance instead of a config
  std::string out_dir = "out";

  std::optional<std::string> sgr;
  std::optional<int> seasons;  // regular seasons per year in the archive
  std::optional<int> season_len;
  std::optional<int> peaks;
  std::optional<int> peak_len;
  std::optional<int> scenarios;
  std::optional<int> candidates;
  int replications = 5;           // stability: trees per experiment
  int reference_scenarios = 0;    // stability: size of the reference tree, 0 = 2 * scenarios
  std::string direction = "reference-on-small";

  std::string method = "benders";  // or "extensive"
  double eps = 0.0;
  double relative_eps = 1e-6;
  double gamma = 0.5;
  bool stabilise = true;
  int max_iterations = 500;
  std::string mode = "serial";
  std::vector<std::string> workers;
  int cores = 0;  // threads for inprocess, cores per worker when distributed; 0 = auto
  double min_solve_seconds = 0.0;
  std::optional<std::uint64_t> seed;

  std::vector<std::string> modes = {"serial", "inprocess"};  // benchmark
  std::string kind = "both";                                  // vss: short, long or both

  // synth-archive
  std::vector<std::string> regions = {"north", "south"};
  std::vector<int> years = {2015, 2016, 2017};
  int hours = 8760;

  std::string manifest_path;  // rerun
};

Json spec_to_json(const RunSpec& spec);
RunSpec spec_from_json(const Json& value);

std::uint64_t fnv1a(const std::string& bytes);

// Executes one subcommand. Returns the process exit code; failures also
// write a JSON error record to `err` and to <out>/error.json.
int run(const RunSpec& spec, std::ostream& out, std::ostream& err);

// Exit code for an error kind (see mhsp::Error::kind()).
int exit_code_for(const std::string& kind);

}  // namespace mhsp::cli
