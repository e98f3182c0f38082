#include "mhsp/cli/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "mhsp/assessment/metrics.hpp"
#include "mhsp/benders/engine.hpp"
#include "mhsp/common/error.hpp"
#include "mhsp/common/random.hpp"
#include "mhsp/energy/energy.hpp"
#include "mhsp/runtime/evaluator.hpp"
#include "mhsp/scenario/short_term.hpp"

namespace mhsp::cli {

namespace fs = std::filesystem;

namespace {

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json();
}

template <typename T>
std::optional<T> optional_from(const Json& v, const char* key) {
  if (!v.contains(key) || v[key].is_null()) return std::nullopt;
  return v[key].get<T>();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::uint64_t require_seed(const RunSpec& spec) {
  if (!spec.seed) throw ConfigError("--seed is required for '" + spec.command + "'");
  return *spec.seed;
}

// Shared state of one run: loaded inputs plus the artifact list.
class Context {
 public:
  explicit Context(const RunSpec& spec) : spec_(spec) {
    fs::create_directories(spec.out_dir);
    fs::remove(fs::path(spec.out_dir) / "error.json");
    if (!spec.config_path.empty()) {
      config_text_ = read_text_file(spec.config_path);
      Json doc;
      try {
        doc = Json::parse(config_text_);
      } catch (const Json::parse_error& e) {
        throw ParseError(spec.config_path + ": " + e.what());
      }
      config_ = energy::energy_config_from_json(doc);
      apply_overrides();
    }
  }

  const RunSpec& spec() const { return spec_; }
  bool has_config() const { return !config_text_.empty(); }

  const energy::EnergyConfig& config() const {
    if (!has_config()) throw ConfigError("--config is required for '" + spec_.command + "'");
    return config_;
  }

  const scenario::TimeSeriesArchive& archive() {
    if (!archive_) {
      const int seasons = spec_.seasons.value_or(4);
      if (!spec_.archive_path.empty()) {
        archive_text_hash_ = fnv1a(read_text_file(spec_.archive_path));
        archive_ = std::make_unique<scenario::TimeSeriesArchive>(scenario::load_archive_csv(spec_.archive_path, seasons));
      } else {
        scenario::SyntheticArchiveSpec syn;
        std::vector<std::string> regions;
        for (const auto& r : config().regions) {
          if (std::find(regions.begin(), regions.end(), r.series_region) == regions.end()) regions.push_back(r.series_region);
        }
        syn.regions = regions;
        auto a = scenario::synthetic_archive(syn);
        if (seasons != a.seasons()) {
          scenario::TimeSeriesArchive resized(a.kinds(), a.regions(), a.years(), a.hours(), seasons);
          for (std::size_t k = 0; k < a.kinds().size(); ++k)
            for (std::size_t n = 0; n < a.regions().size(); ++n)
              for (std::size_t y = 0; y < a.years().size(); ++y)
                std::copy_n(a.series(k, n, y), a.hours(), resized.series(k, n, y));
          a = std::move(resized);
        }
        archive_ = std::make_unique<scenario::TimeSeriesArchive>(std::move(a));
      }
    }
    return *archive_;
  }

  model::MhspInstance instance(std::uint64_t seed) {
    if (!spec_.instance_path.empty()) return model::read_instance(spec_.instance_path);
    return energy::build_instance(config(), archive(), seed);
  }

  model::MhspInstance instance_with(int scenarios, std::uint64_t seed) {
    energy::EnergyConfig cfg = config();
    cfg.short_scenarios = scenarios;
    return energy::build_instance(cfg, archive(), seed);
  }

  void write(const std::string& name, const std::string& text) {
    write_text_file((fs::path(spec_.out_dir) / name).string(), text);
    outputs_.push_back(name);
  }
  void write_json(const std::string& name, const Json& value) { write(name, value.dump(2) + "\n"); }

  void write_manifest(double wall_seconds) {
    Json m{{"tool", "mhsp"},
           {"version", kVersion},
           {"command", spec_.command},
           {"seed", spec_.seed ? Json(*spec_.seed) : Json()},
           {"config_hash", has_config() ? Json(hex64(fnv1a(config_text_))) : Json()},
           {"archive_hash", archive_text_hash_ ? Json(hex64(*archive_text_hash_)) : Json()},
           {"instance_hash", spec_.instance_path.empty() ? Json() : Json(hex64(fnv1a(read_text_file(spec_.instance_path))))},
           {"compiler", __VERSION__},
           {"cxx_standard", static_cast<long>(__cplusplus)},
           {"spec", spec_to_json(spec_)},
           {"outputs", outputs_},
           {"wall_seconds", wall_seconds}};
    write_json("manifest.json", m);
  }

 private:
  void apply_overrides() {
    if (spec_.sgr) config_.sgr = *spec_.sgr;
    if (spec_.season_len) config_.season.regular_length = *spec_.season_len;
    if (spec_.peaks) config_.season.peak_count = *spec_.peaks;
    if (spec_.peak_len) config_.season.peak_length = *spec_.peak_len;
    if (spec_.scenarios) config_.short_scenarios = *spec_.scenarios;
    if (spec_.candidates) config_.candidates = *spec_.candidates;
    config_.validate();
  }

  RunSpec spec_;
  std::string config_text_;
  energy::EnergyConfig config_;
  std::unique_ptr<scenario::TimeSeriesArchive> archive_;
  std::optional<std::uint64_t> archive_text_hash_;
  std::vector<std::string> outputs_;
};

benders::BendersConfig benders_config(const RunSpec& spec) {
  benders::BendersConfig c;
  c.eps = spec.eps;
  c.relative_eps = spec.relative_eps;
  c.gamma = spec.gamma;
  c.stabilise = spec.stabilise;
  c.max_iterations = spec.max_iterations;
  c.validate();
  return c;
}

int auto_threads(int cores) {
  if (cores > 0) return cores;
  return std::max(2, static_cast<int>(std::thread::hardware_concurrency()));
}

std::unique_ptr<runtime::RoundEvaluator> make_evaluator(const RunSpec& spec, const model::MhspInstance& instance,
                                                        const std::string& mode) {
  runtime::EvaluatorOptions opts;
  opts.min_solve_seconds = spec.min_solve_seconds;
  switch (runtime::mode_from_string(mode)) {
    case runtime::Mode::kSerial:
      return std::make_unique<runtime::LocalEvaluator>(instance, 1, opts);
    case runtime::Mode::kInProcess:
      return std::make_unique<runtime::LocalEvaluator>(instance, auto_threads(spec.cores), opts);
    case runtime::Mode::kDistributed:
      if (spec.workers.empty()) throw ConfigError("distributed mode needs --workers");
      return std::make_unique<runtime::DistributedEvaluator>(instance, spec.workers, std::max(1, spec.cores), opts);
  }
  throw ConfigError("unknown mode '" + mode + "'");
}

struct SolveRun {
  benders::BendersResult result;
  std::vector<runtime::RoundTiming> timings;
  double wall_seconds = 0.0;
};

SolveRun solve_with(const RunSpec& spec, const model::MhspInstance& instance, const std::string& mode) {
  const auto start = std::chrono::steady_clock::now();
  auto evaluator = make_evaluator(spec, instance, mode);
  SolveRun run;
  run.result = benders::run_benders(instance, benders_config(spec), *evaluator);
  run.timings = evaluator->timings();
  if (auto* d = dynamic_cast<runtime::DistributedEvaluator*>(evaluator.get())) d->shutdown_workers();
  run.wall_seconds = seconds_since(start);
  return run;
}

assessment::Solver make_solver(const RunSpec& spec) {
  if (spec.method == "extensive") return assessment::extensive_form_solver();
  if (spec.method != "benders") throw ConfigError("unknown method '" + spec.method + "'");
  return [spec](const model::MhspInstance& instance) {
    const SolveRun run = solve_with(spec, instance, spec.mode);
    if (run.result.x.empty()) throw SolverError("Benders found no incumbent within the iteration limit");
    return assessment::SolveOutcome{run.result.objective, run.result.x, run.result.converged, run.result.iterations};
  };
}

std::string bounds_csv(const std::vector<benders::IterationRecord>& log) {
  std::ostringstream os;
  os.precision(17);
  os << "j,lower,upper,level,gap\n";
  for (const auto& r : log) {
    os << r.j << ',' << r.lower << ',' << r.upper << ',';
    if (!std::isnan(r.level)) os << r.level;
    os << ',' << r.gap << '\n';
  }
  return os.str();
}

Json timing_json(const SolveRun& run) {
  double master = 0.0;
  for (const auto& r : run.result.log) master += r.master_seconds;
  double solving = 0.0;
  double overhead = 0.0;
  Json rounds = Json::array();
  for (const auto& t : run.timings) {
    solving += t.solving_seconds;
    overhead += t.overhead_seconds;
    rounds.push_back({{"iteration", t.iteration},
                      {"wall_seconds", t.wall_seconds},
                      {"solving_seconds", t.solving_seconds},
                      {"overhead_seconds", t.overhead_seconds}});
  }
  return {{"wall_seconds", run.wall_seconds},
          {"master_seconds", master},
          {"solving_seconds", solving},
          {"overhead_seconds", overhead},
          {"rounds", rounds}};
}

// Labelled strategic decisions plus capacity by technology group per node.
Json solution_json(const Context& ctx, const model::MhspInstance& instance, double objective, double lower,
                   bool converged, int iterations, const std::vector<double>& x,
                   const std::vector<std::string>& warnings) {
  Json nodes = Json::array();
  for (const auto& node : instance.nodes) {
    Json values = Json::object();
    const auto& labels = instance.metadata.stage_labels;
    for (int k = node.x_range.begin; k < node.x_range.end; ++k) {
      const int local = k - node.x_range.begin;
      const std::string label = node.stage < static_cast<int>(labels.size()) &&
                                        local < static_cast<int>(labels[node.stage].size())
                                    ? labels[node.stage][local]
                                    : "x" + std::to_string(local);
      values[label] = number_to_json(x[k]);
    }
    Json entry{{"node", node.id},
               {"stage", node.stage},
               {"probability", node.probability},
               {"parent", node.parent ? Json(*node.parent) : Json()},
               {"parameters", node.parameters},
               {"x", values}};
    if (ctx.has_config() && ctx.spec().instance_path.empty()) {
      const auto caps = energy::group_capacity(ctx.config(), instance, x, node.id);
      Json groups = Json::object();
      for (std::size_t g = 0; g < caps.size(); ++g) groups[energy::technology_groups()[g]] = caps[g];
      entry["group_capacity"] = groups;
    }
    nodes.push_back(entry);
  }
  return {{"objective", number_to_json(objective)},
          {"lower", number_to_json(lower)},
          {"converged", converged},
          {"iterations", iterations},
          {"warnings", warnings},
          {"nodes", nodes}};
}

std::string capacity_csv(const Json& solution) {
  std::ostringstream os;
  os.precision(17);
  os << "node,stage,probability,group,capacity\n";
  for (const auto& node : solution["nodes"]) {
    if (!node.contains("group_capacity")) continue;
    for (const auto& [group, value] : node["group_capacity"].items()) {
      os << node["node"].get<int>() << ',' << node["stage"].get<int>() << ',' << node["probability"].get<double>()
         << ',' << group << ',' << value.get<double>() << '\n';
    }
  }
  return os.str();
}

void cmd_solve(Context& ctx, std::ostream& out) {
  const RunSpec& spec = ctx.spec();
  const model::MhspInstance instance = ctx.instance(spec.instance_path.empty() ? require_seed(spec) : spec.seed.value_or(0));
  Json solution;
  if (spec.method == "extensive") {
    const auto start = std::chrono::steady_clock::now();
    const auto r = assessment::extensive_form_solver()(instance);
    solution = solution_json(ctx, instance, r.objective, r.objective, true, 1, r.x, {});
    ctx.write_json("timing.json", {{"wall_seconds", seconds_since(start)}});
  } else {
    const SolveRun run = solve_with(spec, instance, spec.mode);
    if (run.result.x.empty()) throw SolverError("Benders found no incumbent within the iteration limit");
    solution = solution_json(ctx, instance, run.result.objective, run.result.lower, run.result.converged,
                             run.result.iterations, run.result.x, run.result.warnings);
    ctx.write("iterations.jsonl", benders::iteration_log_jsonl(run.result.log));
    ctx.write("bounds.csv", bounds_csv(run.result.log));
    ctx.write_json("timing.json", timing_json(run));
  }
  ctx.write_json("solution.json", solution);
  ctx.write("capacity.csv", capacity_csv(solution));
  out << std::setprecision(12) << "objective " << solution["objective"].get<double>() << " iterations "
      << solution["iterations"].get<int>() << (solution["converged"].get<bool>() ? "" : " (not converged)") << "\n";
}

void cmd_export(Context& ctx, std::ostream& out) {
  const model::MhspInstance instance = ctx.instance(require_seed(ctx.spec()));
  ctx.write("instance.json", model::to_json(instance));
  out << "instance with " << instance.nodes.size() << " strategic nodes and " << instance.subproblems.size()
      << " subproblems\n";
}

void cmd_benchmark(Context& ctx, std::ostream& out) {
  const RunSpec& spec = ctx.spec();
  const model::MhspInstance instance = ctx.instance(spec.instance_path.empty() ? require_seed(spec) : spec.seed.value_or(0));
  if (spec.modes.empty()) throw ConfigError("--modes lists no modes");
  std::ostringstream csv;
  csv.precision(17);
  csv << "mode,workers,iterations,objective,wall_seconds,solving_seconds,overhead_seconds,speedup\n";
  Json rows = Json::array();
  double baseline = 0.0;
  for (std::size_t i = 0; i < spec.modes.size(); ++i) {
    const std::string& mode = spec.modes[i];
    const SolveRun run = solve_with(spec, instance, mode);
    const Json t = timing_json(run);
    if (i == 0) baseline = run.wall_seconds;
    const double speedup = run.wall_seconds > 0.0 ? baseline / run.wall_seconds : 0.0;
    const int parallel = mode == "serial"        ? 1
                         : mode == "inprocess"   ? auto_threads(spec.cores)
                                                 : static_cast<int>(spec.workers.size());
    csv << mode << ',' << parallel << ',' << run.result.iterations << ',' << run.result.objective << ','
        << run.wall_seconds << ',' << t["solving_seconds"].get<double>() << ',' << t["overhead_seconds"].get<double>()
        << ',' << speedup << '\n';
    rows.push_back({{"mode", mode},
                    {"workers", parallel},
                    {"iterations", run.result.iterations},
                    {"objective", number_to_json(run.result.objective)},
                    {"timing", t},
                    {"speedup", speedup}});
    out << std::setprecision(12) << mode << ": objective " << run.result.objective << " in "
        << run.result.iterations << " iterations, " << std::setprecision(4) << run.wall_seconds << " s (speedup "
        << speedup << ")\n";
  }
  ctx.write("benchmark.csv", csv.str());
  ctx.write_json("benchmark.json", {{"rows", rows}});
}

Json report_json(const assessment::StabilityReport& r) {
  return {{"objectives", numbers_to_json(r.objectives)},
          {"mean", r.mean},
          {"sd", r.sd},
          {"relative_sd", r.relative_sd},
          {"all_converged", r.all_converged},
          {"first_stage_costs", numbers_to_json(r.first_stage_costs)}};
}

void cmd_stability(Context& ctx, std::ostream& out) {
  const RunSpec& spec = ctx.spec();
  const std::uint64_t seed = require_seed(spec);
  const int m = spec.replications;
  const int n = ctx.config().short_scenarios;
  const int n_ref = spec.reference_scenarios > 0 ? spec.reference_scenarios : 2 * n;
  if (m < 2) throw ConfigError("stability needs at least two replications");
  const assessment::InstanceGenerator gen = [&ctx](int scenarios, std::uint64_t s) {
    return ctx.instance_with(scenarios, s);
  };
  const assessment::Solver solver = make_solver(spec);
  assessment::OutOfSampleDirection dir = assessment::OutOfSampleDirection::kReferenceOnSmallTrees;
  if (spec.direction == "small-on-reference") {
    dir = assessment::OutOfSampleDirection::kSmallTreesOnReference;
  } else if (spec.direction != "reference-on-small") {
    throw ConfigError("unknown direction '" + spec.direction + "'");
  }
  const auto in = assessment::in_sample_stability(gen, m, n, seed, solver);
  const auto outs = assessment::out_of_sample_stability(gen, m, n, n_ref, seed, solver, dir);
  ctx.write("in_sample.csv", assessment::stability_csv(in));
  ctx.write("out_of_sample.csv", assessment::stability_csv(outs));
  ctx.write_json("stability.json", {{"replications", m},
                                    {"scenarios", n},
                                    {"reference_scenarios", n_ref},
                                    {"direction", spec.direction},
                                    {"in_sample", report_json(in)},
                                    {"out_of_sample", report_json(outs)}});
  out << std::setprecision(6) << "in-sample mean " << in.mean << " sd " << in.sd << "; out-of-sample mean "
      << outs.mean << " sd " << outs.sd << "\n";
}

Json metrics_json(const assessment::ValueMetrics& v) {
  return {{"ev", number_to_json(v.ev)},
          {"eev", number_to_json(v.eev)},
          {"sp", number_to_json(v.sp)},
          {"vss", number_to_json(v.vss)}};
}

void cmd_vss(Context& ctx, std::ostream& out) {
  const RunSpec& spec = ctx.spec();
  const model::MhspInstance instance = ctx.instance(spec.instance_path.empty() ? require_seed(spec) : spec.seed.value_or(0));
  const assessment::Solver solver = make_solver(spec);
  Json report = Json::object();
  if (spec.kind != "short" && spec.kind != "long" && spec.kind != "both") {
    throw ConfigError("--kind must be short, long or both");
  }
  if (spec.kind != "long") {
    const auto v = assessment::short_term_vss(instance, solver);
    report["short"] = metrics_json(v);
    out << std::setprecision(10) << "short-term VSS " << v.vss << " (EEV " << v.eev << ", SP " << v.sp << ")\n";
  }
  if (spec.kind != "short") {
    const auto v = assessment::long_term_vss(instance, solver);
    report["long"] = metrics_json(v);
    out << std::setprecision(10) << "long-term VSS " << v.vss << " (EEV " << v.eev << ", SP " << v.sp << ")\n";
  }
  ctx.write_json("vss.json", report);
}

void cmd_rhvss(Context& ctx, std::ostream& out) {
  const RunSpec& spec = ctx.spec();
  const model::MhspInstance instance = ctx.instance(spec.instance_path.empty() ? require_seed(spec) : spec.seed.value_or(0));
  const assessment::Solver solver = make_solver(spec);
  const auto sp = solver(instance);
  const auto rh = assessment::rolling_horizon(instance, solver);
  const double rhvss = assessment::compute_rhvss(rh.erhev, sp.objective);
  ctx.write("rolling_horizon.csv", assessment::rolling_horizon_csv(rh));
  ctx.write_json("rhvss.json", {{"erhev", number_to_json(rh.erhev)},
                                {"sp", number_to_json(sp.objective)},
                                {"rhvss", number_to_json(rhvss)},
                                {"solves", rh.solves}});
  out << std::setprecision(10) << "ERHEV " << rh.erhev << " SP " << sp.objective << " RHVSS " << rhvss << "\n";
}

void cmd_scengen(Context& ctx, std::ostream& out) {
  const RunSpec& spec = ctx.spec();
  const std::uint64_t seed = require_seed(spec);
  const energy::EnergyConfig& cfg = ctx.config();
  const auto& archive = ctx.archive();
  Rng rng(seed);
  std::vector<scenario::ShortTermScenario> tree;
  if (cfg.sgr == "moment") {
    const auto r = scenario::generate_moment_matched(archive, cfg.season, cfg.candidates, cfg.short_scenarios, rng);
    tree = r.tree;
    std::ostringstream csv;
    csv.precision(17);
    csv << "candidate,distance,winner\n";
    for (std::size_t c = 0; c < r.distances.size(); ++c) {
      csv << c << ',' << r.distances[c] << ',' << (static_cast<int>(c) == r.winner ? 1 : 0) << '\n';
    }
    ctx.write("moment_distances.csv", csv.str());
    out << "moment matching picked candidate " << r.winner << " of " << r.distances.size() << "\n";
  } else {
    tree = scenario::generate_random_scenarios(archive, cfg.season, cfg.short_scenarios, rng);
  }
  ctx.write_json("short_scenarios.json", scenario::scenarios_to_json(archive, tree));
  ctx.write_json("long_term_tree.json", scenario::long_term_tree_to_json(energy::energy_long_term_tree(cfg)));
  out << tree.size() << " short-term scenarios\n";
}

void cmd_synth_archive(Context& ctx, std::ostream& out) {
  const RunSpec& spec = ctx.spec();
  scenario::SyntheticArchiveSpec syn;
  syn.regions = spec.regions;
  syn.years = spec.years;
  syn.hours = spec.hours;
  syn.seed = require_seed(spec);
  ctx.write("archive.csv", scenario::write_archive_csv(scenario::synthetic_archive(syn)));
  out << "archive with " << syn.regions.size() << " regions, " << syn.years.size() << " years, " << syn.hours
      << " hours\n";
}

int dispatch(const RunSpec& spec, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  Context ctx(spec);
  const std::string& c = spec.command;
  if (c == "solve") {
    cmd_solve(ctx, out);
  } else if (c == "benchmark") {
    cmd_benchmark(ctx, out);
  } else if (c == "stability") {
    cmd_stability(ctx, out);
  } else if (c == "vss") {
    cmd_vss(ctx, out);
  } else if (c == "rhvss") {
    cmd_rhvss(ctx, out);
  } else if (c == "scengen") {
    cmd_scengen(ctx, out);
  } else if (c == "synth-archive") {
    cmd_synth_archive(ctx, out);
  } else if (c == "export") {
    cmd_export(ctx, out);
  } else {
    throw ConfigError("unknown command '" + c + "'");
  }
  ctx.write_manifest(seconds_since(start));
  return 0;
}

}  // namespace

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Json spec_to_json(const RunSpec& s) {
  return {{"command", s.command},
          {"config", s.config_path},
          {"archive", s.archive_path},
          {"instance", s.instance_path},
          {"out", s.out_dir},
          {"sgr", optional_json(s.sgr)},
          {"seasons", optional_json(s.seasons)},
          {"season_len", optional_json(s.season_len)},
          {"peaks", optional_json(s.peaks)},
          {"peak_len", optional_json(s.peak_len)},
          {"scenarios", optional_json(s.scenarios)},
          {"candidates", optional_json(s.candidates)},
          {"replications", s.replications},
          {"reference_scenarios", s.reference_scenarios},
          {"direction", s.direction},
          {"method", s.method},
          {"eps", s.eps},
          {"relative_eps", s.relative_eps},
          {"gamma", s.gamma},
          {"stabilise", s.stabilise},
          {"max_iterations", s.max_iterations},
          {"mode", s.mode},
          {"workers", s.workers},
          {"cores", s.cores},
          {"min_solve_seconds", s.min_solve_seconds},
          {"seed", optional_json(s.seed)},
          {"modes", s.modes},
          {"kind", s.kind},
          {"regions", s.regions},
          {"years", s.years},
          {"hours", s.hours}};
}

RunSpec spec_from_json(const Json& v) {
  RunSpec s;
  try {
    s.command = require(v, "command").get<std::string>();
    s.config_path = v.value("config", s.config_path);
    s.archive_path = v.value("archive", s.archive_path);
    s.instance_path = v.value("instance", s.instance_path);
    s.out_dir = v.value("out", s.out_dir);
    s.sgr = optional_from<std::string>(v, "sgr");
    s.seasons = optional_from<int>(v, "seasons");
    s.season_len = optional_from<int>(v, "season_len");
    s.peaks = optional_from<int>(v, "peaks");
    s.peak_len = optional_from<int>(v, "peak_len");
    s.scenarios = optional_from<int>(v, "scenarios");
    s.candidates = optional_from<int>(v, "candidates");
    s.replications = v.value("replications", s.replications);
    s.reference_scenarios = v.value("reference_scenarios", s.reference_scenarios);
    s.direction = v.value("direction", s.direction);
    s.method = v.value("method", s.method);
    s.eps = v.value("eps", s.eps);
    s.relative_eps = v.value("relative_eps", s.relative_eps);
    s.gamma = v.value("gamma", s.gamma);
    s.stabilise = v.value("stabilise", s.stabilise);
    s.max_iterations = v.value("max_iterations", s.max_iterations);
    s.mode = v.value("mode", s.mode);
    s.workers = v.value("workers", s.workers);
    s.cores = v.value("cores", s.cores);
    s.min_solve_seconds = v.value("min_solve_seconds", s.min_solve_seconds);
    s.seed = optional_from<std::uint64_t>(v, "seed");
    s.modes = v.value("modes", s.modes);
    s.kind = v.value("kind", s.kind);
    s.regions = v.value("regions", s.regions);
    s.years = v.value("years", s.years);
    s.hours = v.value("hours", s.hours);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("run spec: ") + e.what());
  }
  return s;
}

int exit_code_for(const std::string& kind) {
  if (kind == "configuration" || kind == "usage") return 2;
  if (kind == "parse" || kind == "validation" || kind == "dimension_mismatch" || kind == "io") return 3;
  if (kind == "solver_failure" || kind == "numerical_instability" || kind == "infeasible_fix" ||
      kind == "recourse_violated") {
    return 4;
  }
  if (kind == "transport") return 5;
  return 1;
}

int run(const RunSpec& input, std::ostream& out, std::ostream& err) {
  RunSpec spec = input;
  std::string kind;
  std::string message;
  try {
    if (spec.command == "rerun") {
      if (spec.manifest_path.empty()) throw ConfigError("rerun needs --manifest");
      const std::string out_dir = spec.out_dir;
      spec = spec_from_json(require(read_json_file(spec.manifest_path), "spec"));
      spec.out_dir = out_dir;
    }
    return dispatch(spec, out);
  } catch (const Error& e) {
    kind = e.kind();
    message = e.what();
  } catch (const fs::filesystem_error& e) {
    kind = "io";
    message = e.what();
  } catch (const std::exception& e) {
    kind = "internal";
    message = e.what();
  }
  const Json record{{"error", {{"kind", kind}, {"message", message}, {"command", spec.command}}},
                    {"exit_code", exit_code_for(kind)}};
  err << record.dump() << "\n";
  try {
    fs::create_directories(spec.out_dir);
    write_text_file((fs::path(spec.out_dir) / "error.json").string(), record.dump(2) + "\n");
  } catch (const std::exception&) {
  }
  return exit_code_for(kind);
}

}  // namespace mhsp::cli
