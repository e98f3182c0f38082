#include <iostream>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include "mhsp/cli/run.hpp"
#include "mhsp/runtime/evaluator.hpp"

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Options shared by every instance-building subcommand.
void add_instance_options(CLI::App* app, mhsp::cli::RunSpec& s, std::string& workers) {
  app->add_option("--config", s.config_path, "energy instance config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--archive", s.archive_path, "time-series archive CSV; synthetic data when omitted")
      ->check(CLI::ExistingFile);
  app->add_option("--instance", s.instance_path, "serialized instance JSON instead of a config")
      ->check(CLI::ExistingFile);
  app->add_option("--sgr", s.sgr, "scenario generation routine")->check(CLI::IsMember({"random", "moment"}));
  app->add_option("--seasons", s.seasons, "regular seasons per year");
  app->add_option("--season-len", s.season_len, "regular season length in hours");
  app->add_option("--peaks", s.peaks, "number of peak seasons");
  app->add_option("--peak-len", s.peak_len, "peak season length in hours (odd)");
  app->add_option("--scenarios", s.scenarios, "short-term scenarios per tree");
  app->add_option("--candidates", s.candidates, "candidate trees for moment matching");
  app->add_option("--method", s.method, "solution method")->check(CLI::IsMember({"benders", "extensive"}));
  app->add_option("--eps", s.eps, "absolute convergence tolerance (0 uses --rel-eps)");
  app->add_option("--rel-eps", s.relative_eps, "relative convergence tolerance");
  app->add_option("--gamma", s.gamma, "level parameter in (0, 1)");
  app->add_flag("!--no-stabilise", s.stabilise, "evaluate at the master solution");
  app->add_option("--max-iter", s.max_iterations, "iteration limit");
  app->add_option("--mode", s.mode, "evaluation mode")->check(CLI::IsMember({"serial", "inprocess", "distributed"}));
  app->add_option("--workers", workers, "worker endpoints host:port,...");
  app->add_option("--cores", s.cores, "threads (inprocess) or cores per worker (distributed)");
  app->add_option("--min-solve-seconds", s.min_solve_seconds, "pad every subproblem solve to this duration");
  app->add_option("--seed", s.seed, "random seed");
  app->add_option("--out", s.out_dir, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-horizon stochastic programming toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mhsp::cli::kVersion);
  mhsp::cli::RunSpec spec;
  std::string workers;
  std::string modes;

  const std::pair<const char*, const char*> commands[] = {
      {"solve", "build and solve an instance"},
      {"benchmark", "solve once per evaluation mode and compare"},
      {"stability", "in-sample and out-of-sample stability"},
      {"vss", "value of the stochastic solution"},
      {"rhvss", "rolling-horizon value of the stochastic solution"},
      {"scengen", "generate short-term scenarios only"},
      {"export", "write the instance as JSON"}};
  for (const auto& [name, about] : commands) {
    CLI::App* sub = app.add_subcommand(name, about);
    add_instance_options(sub, spec, workers);
    if (std::string(name) == "benchmark") sub->add_option("--modes", modes, "comma-separated modes, first is the baseline");
    if (std::string(name) == "stability") {
      sub->add_option("--replications", spec.replications, "trees per experiment (m)");
      sub->add_option("--reference-scenarios", spec.reference_scenarios, "scenarios of the reference tree (n')");
      sub->add_option("--direction", spec.direction, "out-of-sample direction")
          ->check(CLI::IsMember({"reference-on-small", "small-on-reference"}));
    }
    if (std::string(name) == "vss") {
      sub->add_option("--kind", spec.kind, "short, long or both")->check(CLI::IsMember({"short", "long", "both"}));
    }
  }
  CLI::App* synth = app.add_subcommand("synth-archive", "write a synthetic time-series archive");
  std::string regions;
  std::string years;
  synth->add_option("--regions", regions, "comma-separated region names");
  synth->add_option("--years", years, "comma-separated years");
  synth->add_option("--hours", spec.hours, "hours per year");
  synth->add_option("--seed", spec.seed, "random seed");
  synth->add_option("--out", spec.out_dir, "output directory");

  CLI::App* rerun = app.add_subcommand("rerun", "replay the run recorded in a manifest");
  rerun->add_option("--manifest", spec.manifest_path)->required()->check(CLI::ExistingFile);
  rerun->add_option("--out", spec.out_dir, "output directory");

  CLI::App* worker = app.add_subcommand("worker", "serve subproblem evaluations");
  std::string listen;
  std::size_t max_frame = 0;
  worker->add_option("--listen", listen, "host:port")->required();
  worker->add_option("--max-frame-bytes", max_frame, "largest accepted frame");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) std::cerr << "{\"error\":{\"kind\":\"usage\",\"message\":\"invalid command line\"},\"exit_code\":2}\n";
    return code == 0 ? 0 : 2;
  }

  if (worker->parsed()) {
    try {
      mhsp::runtime::WorkerOptions opts;
      if (max_frame > 0) opts.max_frame_bytes = max_frame;
      mhsp::runtime::serve_worker(listen, opts, [](int port) { std::cerr << "listening on port " << port << std::endl; });
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "{\"error\":{\"kind\":\"transport\",\"message\":\"" << e.what() << "\"},\"exit_code\":5}\n";
      return 5;
    }
  }

  spec.command = app.get_subcommands().front()->get_name();
  spec.workers = split_list(workers);
  if (!modes.empty()) spec.modes = split_list(modes);
  if (!regions.empty()) spec.regions = split_list(regions);
  if (!years.empty()) {
    spec.years.clear();
    for (const auto& y : split_list(years)) spec.years.push_back(std::stoi(y));
  }
  return mhsp::cli::run(spec, std::cout, std::cerr);
}
