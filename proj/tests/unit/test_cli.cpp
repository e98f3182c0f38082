#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mhsp/cli/run.hpp"
#include "mhsp/common/json_io.hpp"
#include "mhsp/scenario/short_term.hpp"

using mhsp::Json;
using mhsp::cli::RunSpec;
namespace fs = std::filesystem;

namespace {

const std::string kRoot = MHSP_SOURCE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mhsp_cli_test" / name;
  fs::remove_all(dir);
  return dir;
}

RunSpec toy(const std::string& command, const fs::path& out) {
  RunSpec s;
  s.command = command;
  s.config_path = kRoot + "/configs/toy_energy.json";
  s.archive_path = kRoot + "/data/toy_archive.csv";
  s.seed = 1;
  s.season_len = 2;
  s.out_dir = out.string();
  return s;
}

int run_quiet(const RunSpec& spec, std::string* err_text = nullptr) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = mhsp::cli::run(spec, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::string slurp(const fs::path& p) { return mhsp::read_text_file(p.string()); }

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

// Iteration log without wall-clock fields.
std::vector<Json> untimed_log(const fs::path& p) {
  std::vector<Json> records;
  for (const std::string& line : lines_of(slurp(p))) {
    Json r = Json::parse(line);
    for (const char* key : {"master_seconds", "round_seconds", "solve_seconds", "wall_seconds"}) r.erase(key);
    records.push_back(r);
  }
  return records;
}

}  // namespace

TEST_CASE("solve matches the committed extensive-form objective") {
  const Json golden = mhsp::read_json_file(kRoot + "/tests/golden/toy_solve.json");
  const double reference = golden["objective"].get<double>();
  const fs::path out = scratch("golden");
  REQUIRE(run_quiet(toy("solve", out)) == 0);
  const Json sol = mhsp::read_json_file((out / "solution.json").string());
  CHECK(sol["converged"].get<bool>());
  const double upper = sol["objective"].get<double>();
  const double lower = sol["lower"].get<double>();
  const double tol = 1e-6 * (1.0 + std::abs(reference));
  CHECK(lower <= reference + tol);
  CHECK(upper >= reference - tol);
  CHECK(upper - reference <= tol);
}

TEST_CASE("solve artifacts have the documented shape") {
  const fs::path out = scratch("schema");
  REQUIRE(run_quiet(toy("solve", out)) == 0);
  CHECK_FALSE(fs::exists(out / "error.json"));

  const Json sol = mhsp::read_json_file((out / "solution.json").string());
  for (const char* key : {"objective", "lower", "converged", "iterations", "warnings", "nodes"}) {
    CHECK_MESSAGE(sol.contains(key), key);
  }
  REQUIRE(sol["nodes"].size() == 7);
  for (const Json& node : sol["nodes"]) {
    for (const char* key : {"node", "stage", "probability", "parent", "parameters", "x", "group_capacity"}) {
      CHECK_MESSAGE(node.contains(key), key);
    }
    CHECK(node["group_capacity"].size() == 7);
    CHECK(node["x"].contains("cap:north:coal"));
  }
  CHECK(sol["nodes"][0]["parent"].is_null());

  const auto capacity = lines_of(slurp(out / "capacity.csv"));
  CHECK(capacity.front() == "node,stage,probability,group,capacity");
  CHECK(capacity.size() == 1 + 7 * 7);

  const auto log = lines_of(slurp(out / "iterations.jsonl"));
  REQUIRE(static_cast<int>(log.size()) == sol["iterations"].get<int>());
  double prev_lower = -INFINITY;
  double prev_upper = INFINITY;
  for (const std::string& line : log) {
    const Json r = Json::parse(line);
    for (const char* key : {"j", "L", "U", "gap", "T", "rmp", "x_eva"}) CHECK_MESSAGE(r.contains(key), key);
    CHECK(r["L"].get<double>() >= prev_lower - 1e-9 * (1.0 + std::abs(prev_lower)));
    CHECK(r["U"].get<double>() <= prev_upper);
    prev_lower = r["L"].get<double>();
    prev_upper = r["U"].get<double>();
  }

  const auto bounds = lines_of(slurp(out / "bounds.csv"));
  CHECK(bounds.size() == log.size() + 1);

  const Json timing = mhsp::read_json_file((out / "timing.json").string());
  CHECK(timing["rounds"].size() == log.size());

  const Json manifest = mhsp::read_json_file((out / "manifest.json").string());
  for (const char* key : {"tool", "version", "command", "seed", "config_hash", "archive_hash", "compiler", "spec",
                          "outputs", "wall_seconds"}) {
    CHECK_MESSAGE(manifest.contains(key), key);
  }
  CHECK(manifest["seed"].get<int>() == 1);
  CHECK(manifest["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("rerun reproduces every non-timing artifact") {
  const fs::path first = scratch("rerun_a");
  const fs::path second = scratch("rerun_b");
  REQUIRE(run_quiet(toy("solve", first)) == 0);
  RunSpec again;
  again.command = "rerun";
  again.manifest_path = (first / "manifest.json").string();
  again.out_dir = second.string();
  REQUIRE(run_quiet(again) == 0);
  for (const char* name : {"solution.json", "capacity.csv", "bounds.csv"}) {
    CHECK_MESSAGE(slurp(first / name) == slurp(second / name), name);
  }
  CHECK(untimed_log(first / "iterations.jsonl") == untimed_log(second / "iterations.jsonl"));
  Json a = mhsp::read_json_file((first / "manifest.json").string());
  Json b = mhsp::read_json_file((second / "manifest.json").string());
  for (Json* m : {&a, &b}) {
    m->erase("wall_seconds");
    (*m)["spec"].erase("out");
  }
  CHECK(a == b);
}

TEST_CASE("benchmark modes agree on the solution") {
  const fs::path out = scratch("benchmark");
  RunSpec spec = toy("benchmark", out);
  spec.modes = {"serial", "inprocess"};
  spec.cores = 2;
  REQUIRE(run_quiet(spec) == 0);
  const Json bench = mhsp::read_json_file((out / "benchmark.json").string());
  REQUIRE(bench["rows"].size() == 2);
  CHECK(bench["rows"][0]["objective"] == bench["rows"][1]["objective"]);
  CHECK(bench["rows"][0]["iterations"] == bench["rows"][1]["iterations"]);
  CHECK(bench["rows"][0]["speedup"].get<double>() == 1.0);
  CHECK(lines_of(slurp(out / "benchmark.csv")).size() == 3);
}

TEST_CASE("long-term VSS and RHVSS are nonnegative") {
  const fs::path out = scratch("vss");
  RunSpec spec = toy("vss", out);
  spec.kind = "long";
  REQUIRE(run_quiet(spec) == 0);
  const Json vss = mhsp::read_json_file((out / "vss.json").string());
  CHECK_FALSE(vss.contains("short"));
  const double sp = vss["long"]["sp"].get<double>();
  const double tol = 1e-6 * (1.0 + std::abs(sp));
  CHECK(vss["long"]["vss"].get<double>() >= -tol);
  CHECK(vss["long"]["eev"].get<double>() >= sp - tol);

  const fs::path rh_out = scratch("rhvss");
  REQUIRE(run_quiet(toy("rhvss", rh_out)) == 0);
  const Json rh = mhsp::read_json_file((rh_out / "rhvss.json").string());
  CHECK(rh["rhvss"].get<double>() >= -tol);
  // One solve at the root plus one per branching node.
  CHECK(rh["solves"].get<int>() == 1 + 2 + 4);
  const auto rows = lines_of(slurp(rh_out / "rolling_horizon.csv"));
  CHECK(rows.size() == 1 + 4 + 1);
}

TEST_CASE("scengen writes the tree and moment-matching distances") {
  const fs::path out = scratch("scengen");
  RunSpec spec = toy("scengen", out);
  spec.sgr = "moment";
  spec.candidates = 8;
  REQUIRE(run_quiet(spec) == 0);
  const auto rows = lines_of(slurp(out / "moment_distances.csv"));
  REQUIRE(rows.size() == 1 + 8);
  int winners = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) winners += rows[i].back() == '1';
  CHECK(winners == 1);
  const Json tree = mhsp::read_json_file((out / "long_term_tree.json").string());
  CHECK(tree.is_object());
  CHECK(fs::exists(out / "short_scenarios.json"));
}

TEST_CASE("synthetic archive round-trips through the loader") {
  const fs::path out = scratch("synth");
  RunSpec spec;
  spec.command = "synth-archive";
  spec.regions = {"a", "b"};
  spec.years = {2001};
  spec.hours = 48;
  spec.seed = 3;
  spec.out_dir = out.string();
  REQUIRE(run_quiet(spec) == 0);
  const auto archive = mhsp::scenario::load_archive_csv((out / "archive.csv").string(), 4);
  CHECK(archive.years().size() == 1);
  const std::string first = slurp(out / "archive.csv");
  REQUIRE(run_quiet(spec) == 0);
  CHECK(slurp(out / "archive.csv") == first);
}

TEST_CASE("exported instance solves to the same objective") {
  const fs::path exported = scratch("export");
  REQUIRE(run_quiet(toy("export", exported)) == 0);
  const fs::path direct = scratch("export_direct");
  REQUIRE(run_quiet(toy("solve", direct)) == 0);
  RunSpec spec;
  spec.command = "solve";
  spec.instance_path = (exported / "instance.json").string();
  const fs::path via = scratch("export_solve");
  spec.out_dir = via.string();
  REQUIRE(run_quiet(spec) == 0);
  const Json a = mhsp::read_json_file((direct / "solution.json").string());
  const Json b = mhsp::read_json_file((via / "solution.json").string());
  CHECK(a["objective"] == b["objective"]);
  CHECK_FALSE(b["nodes"][0].contains("group_capacity"));
}

TEST_CASE("failures produce an error record and a mapped exit code") {
  std::string err;

  const fs::path no_seed = scratch("err_seed");
  RunSpec spec = toy("solve", no_seed);
  spec.seed.reset();
  CHECK(run_quiet(spec, &err) == 2);
  Json record = Json::parse(err);
  CHECK(record["error"]["kind"] == "configuration");
  CHECK(record["exit_code"] == 2);
  CHECK(mhsp::read_json_file((no_seed / "error.json").string()) == record);

  const fs::path missing = scratch("err_missing");
  spec = toy("solve", missing);
  spec.archive_path = kRoot + "/data/does_not_exist.csv";
  CHECK(run_quiet(spec, &err) == 3);
  CHECK(Json::parse(err)["error"]["kind"] == "io");

  const fs::path bad_json = scratch("err_parse");
  fs::create_directories(bad_json);
  {
    std::ofstream f(bad_json / "broken.json");
    f << "{\"stages\": [";
  }
  spec = toy("solve", bad_json / "out");
  spec.config_path = (bad_json / "broken.json").string();
  CHECK(run_quiet(spec, &err) == 3);
  CHECK(Json::parse(err)["error"]["kind"] == "parse");

  spec = toy("frobnicate", scratch("err_cmd"));
  CHECK(run_quiet(spec, &err) == 2);

  const fs::path dist = scratch("err_transport");
  spec = toy("solve", dist);
  spec.mode = "distributed";
  spec.workers = {"127.0.0.1:1"};
  CHECK(run_quiet(spec, &err) == 5);
  CHECK(Json::parse(err)["error"]["kind"] == "transport");

  CHECK(mhsp::cli::exit_code_for("numerical_instability") == 4);
  CHECK(mhsp::cli::exit_code_for("recourse_violated") == 4);
  CHECK(mhsp::cli::exit_code_for("something_else") == 1);
}

TEST_CASE("a successful run clears a stale error record") {
  const fs::path out = scratch("stale");
  RunSpec spec = toy("scengen", out);
  spec.seed.reset();
  REQUIRE(run_quiet(spec) == 2);
  REQUIRE(fs::exists(out / "error.json"));
  spec.seed = 1;
  REQUIRE(run_quiet(spec) == 0);
  CHECK_FALSE(fs::exists(out / "error.json"));
}
