#include "mhsp/assessment/metrics.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "mhsp/common/error.hpp"
#include "mhsp/lp/solver.hpp"
#include "mhsp/model/evaluate.hpp"
#include "mhsp/runtime/evaluator.hpp"

namespace mhsp::assessment {

Solver benders_solver(benders::BendersConfig config, int threads) {
  return [config, threads](const model::MhspInstance& instance) {
    runtime::LocalEvaluator evaluator(instance, threads);
    const benders::BendersResult r = benders::run_benders(instance, config, evaluator);
    if (r.x.empty()) throw SolverError("Benders found no incumbent within the iteration limit");
    return SolveOutcome{r.objective, r.x, r.converged, r.iterations};
  };
}

Solver extensive_form_solver() {
  return [](const model::MhspInstance& instance) {
    const model::LinearProgramView view = model::build_deterministic_equivalent(instance);
    const lp::LpSolution sol = lp::default_solver().solve(view.lp, nullptr);
    if (sol.status != lp::LpStatus::kOptimal) {
      throw SolverError("extensive form ended with status " + lp::to_string(sol.status));
    }
    return SolveOutcome{sol.objective, std::vector<double>(sol.primal.begin(), sol.primal.begin() + instance.num_x()),
                        true, 1};
  };
}

double investment_cost(const model::MhspInstance& instance, const std::vector<double>& x) {
  return instance.strategic_value(x);
}

double evaluate_policy(const model::MhspInstance& instance, const std::vector<double>& x) {
  double value = instance.strategic_value(x);
  for (const model::OperationalSubproblem& sp : instance.subproblems) {
    const std::vector<double> local = model::extract_subvector(instance, sp.owner, x);
    value += sp.probability * model::evaluate_subproblem(sp, local, sp.coefficients).theta;
  }
  return value;
}

StabilityReport summarize(const std::vector<double>& objectives) {
  StabilityReport r;
  r.objectives = objectives;
  const double m = static_cast<double>(objectives.size());
  if (objectives.empty()) return r;
  r.mean = std::accumulate(objectives.begin(), objectives.end(), 0.0) / m;
  if (objectives.size() > 1) {
    double ss = 0.0;
    for (double v : objectives) ss += (v - r.mean) * (v - r.mean);
    r.sd = std::sqrt(ss / (m - 1.0));
  }
  r.relative_sd = r.mean > 0.0 ? r.sd / r.mean : 0.0;
  return r;
}

namespace {

std::vector<double> root_of(const model::MhspInstance& instance, const std::vector<double>& x) {
  return model::extract_subvector(instance, 0, x);
}

double root_cost(const model::MhspInstance& instance, const std::vector<double>& root_x) {
  const std::vector<double> c = instance.node_cost(0);
  double v = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) v += instance.nodes[0].probability * c[k] * root_x[k];
  return v;
}

}  // namespace

model::MhspInstance fix_root(const model::MhspInstance& instance, const std::vector<double>& root_x) {
  const model::IndexRange r = instance.nodes[0].x_range;
  if (static_cast<int>(root_x.size()) != r.size()) throw DimensionError("root decision has the wrong length");
  std::vector<double> x(instance.num_x(), 0.0);
  std::copy(root_x.begin(), root_x.end(), x.begin() + r.begin);
  return model::fix_strategic(instance, x, 0);
}

StabilityReport in_sample_stability(const InstanceGenerator& generate, int m, int n, std::uint64_t base_seed,
                                    const Solver& solve) {
  if (m < 2) throw ValidationError("stability needs at least two replications");
  std::vector<double> values;
  std::vector<std::vector<double>> roots;
  std::vector<double> costs;
  bool converged = true;
  for (int r = 0; r < m; ++r) {
    const model::MhspInstance inst = generate(n, base_seed + r);
    const SolveOutcome out = solve(inst);
    converged = converged && out.converged;
    values.push_back(out.objective);
    roots.push_back(root_of(inst, out.x));
    costs.push_back(root_cost(inst, roots.back()));
  }
  StabilityReport report = summarize(values);
  report.all_converged = converged;
  report.first_stage = std::move(roots);
  report.first_stage_costs = std::move(costs);
  return report;
}

StabilityReport out_of_sample_stability(const InstanceGenerator& generate, int m, int n, int n_reference,
                                        std::uint64_t base_seed, const Solver& solve, OutOfSampleDirection direction) {
  if (m < 2) throw ValidationError("stability needs at least two replications");
  const model::MhspInstance reference = generate(n_reference, base_seed + m);
  std::vector<double> values;
  std::vector<std::vector<double>> roots;
  std::vector<double> costs;
  bool converged = true;
  if (direction == OutOfSampleDirection::kReferenceOnSmallTrees) {
    const SolveOutcome ref = solve(reference);
    converged = ref.converged;
    const std::vector<double> root = root_of(reference, ref.x);
    for (int r = 0; r < m; ++r) {
      const model::MhspInstance inst = fix_root(generate(n, base_seed + r), root);
      const SolveOutcome out = solve(inst);
      converged = converged && out.converged;
      values.push_back(out.objective);
      roots.push_back(root);
      costs.push_back(root_cost(inst, root));
    }
  } else {
    for (int r = 0; r < m; ++r) {
      const model::MhspInstance small = generate(n, base_seed + r);
      const SolveOutcome own = solve(small);
      const std::vector<double> root = root_of(small, own.x);
      const SolveOutcome out = solve(fix_root(reference, root));
      converged = converged && own.converged && out.converged;
      values.push_back(out.objective);
      roots.push_back(root);
      costs.push_back(root_cost(reference, root));
    }
  }
  StabilityReport report = summarize(values);
  report.all_converged = converged;
  report.first_stage = std::move(roots);
  report.first_stage_costs = std::move(costs);
  return report;
}

namespace {

ValueMetrics value_of_solution(const model::MhspInstance& instance, model::Scope scope, const Solver& solve) {
  ValueMetrics vm;
  const model::MhspInstance ev = model::expected_value_instance(instance, scope);
  const SolveOutcome ev_out = solve(ev);
  vm.ev = ev_out.objective;
  vm.ev_x = model::lift_by_stage(ev, ev_out.x, instance);
  // Fixing every stage leaves only subproblem evaluations.
  const model::MhspInstance fixed = model::fix_strategic(instance, vm.ev_x, instance.num_stages() - 1);
  vm.eev = evaluate_policy(fixed, fixed.master.x_lower);
  vm.sp = solve(instance).objective;
  vm.vss = vm.eev - vm.sp;
  return vm;
}

}  // namespace

ValueMetrics short_term_vss(const model::MhspInstance& instance, const Solver& solve) {
  return value_of_solution(instance, model::Scope::kBoth, solve);
}

ValueMetrics long_term_vss(const model::MhspInstance& instance, const Solver& solve) {
  return value_of_solution(instance, model::Scope::kStrategic, solve);
}

namespace {

struct RollingState {
  const model::MhspInstance& instance;
  const Solver& solve;
  std::vector<double> x;
  std::vector<bool> decided;
  int solves = 0;
};

std::string fixed_prefix(const RollingState& st) {
  std::ostringstream out;
  out << "fixed nodes:";
  for (std::size_t k = 0; k < st.decided.size(); ++k) {
    if (!st.decided[k]) continue;
    const model::IndexRange r = st.instance.nodes[k].x_range;
    out << " [" << k << ":";
    for (int j = r.begin; j < r.end; ++j) out << ' ' << st.x[j];
    out << ']';
  }
  return out.str();
}

void decide_from(RollingState& st, int node) {
  const model::MhspInstance& inst = st.instance;
  model::MhspInstance sub = model::conditional_expected_instance(inst, node, st.x);
  SolveOutcome out;
  try {
    out = st.solve(sub);
  } catch (const Error& e) {
    throw SolverError("rolling-horizon problem at node " + std::to_string(node) + " failed (" + e.what() + "); " +
                      fixed_prefix(st));
  }
  ++st.solves;
  const std::vector<double> lifted = model::lift_by_stage(sub, out.x, inst);
  // Fix the chain from `node` to the next branching node, inclusive.
  int v = node;
  for (;;) {
    const model::IndexRange r = inst.nodes[v].x_range;
    std::copy(lifted.begin() + r.begin, lifted.begin() + r.end, st.x.begin() + r.begin);
    st.decided[v] = true;
    const std::vector<int> kids = inst.children(v);
    if (kids.size() == 1) {
      v = kids[0];
      continue;
    }
    for (int c : kids) decide_from(st, c);
    return;
  }
}

}  // namespace

RollingHorizonResult rolling_horizon(const model::MhspInstance& instance, const Solver& solve) {
  instance.validate();
  RollingState st{instance, solve, std::vector<double>(instance.num_x(), 0.0),
                  std::vector<bool>(instance.nodes.size(), false)};
  decide_from(st, 0);

  RollingHorizonResult result;
  result.policy = st.x;
  result.solves = st.solves;
  std::vector<double> sub_value(instance.subproblems.size(), 0.0);
  for (const model::OperationalSubproblem& sp : instance.subproblems) {
    const std::vector<double> local = model::extract_subvector(instance, sp.owner, st.x);
    sub_value[sp.id] = model::evaluate_subproblem(sp, local, sp.coefficients).theta;
  }
  for (int leaf : instance.leaves()) {
    RollingScenario sc;
    sc.leaf = leaf;
    sc.weight = instance.nodes[leaf].probability;
    for (std::optional<int> v = leaf; v; v = instance.nodes[*v].parent) {
      const model::StrategicNode& node = instance.nodes[*v];
      const std::vector<double> cost = instance.node_cost(node.id);
      for (int k = 0; k < node.x_range.size(); ++k) sc.investment_cost += cost[k] * st.x[node.x_range.begin + k];
      for (const model::OperationalSubproblem& sp : instance.subproblems) {
        if (sp.owner == node.id) sc.operational_cost += sp.probability / node.probability * sub_value[sp.id];
      }
    }
    sc.objective = sc.investment_cost + sc.operational_cost;
    result.erhev += sc.weight * sc.objective;
    result.scenarios.push_back(sc);
  }
  return result;
}

double compute_rhvss(double erhev, double sp) { return erhev - sp; }

double normalized_l1(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("mix vectors differ in length");
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double pa = sa > 0.0 ? a[k] / sa : 0.0;
    const double pb = sb > 0.0 ? b[k] / sb : 0.0;
    d += std::abs(pa - pb);
  }
  return d;
}

std::string stability_csv(const StabilityReport& report) {
  std::ostringstream out;
  out.precision(12);
  out << "replication,objective,first_stage_cost\n";
  for (std::size_t r = 0; r < report.objectives.size(); ++r) {
    out << r + 1 << ',' << report.objectives[r] << ','
        << (r < report.first_stage_costs.size() ? report.first_stage_costs[r] : 0.0) << '\n';
  }
  out << "mean," << report.mean << ",\n";
  out << "sd," << report.sd << ",\n";
  out << "relative_sd," << report.relative_sd << ",\n";
  return out.str();
}

std::string rolling_horizon_csv(const RollingHorizonResult& result) {
  std::ostringstream out;
  out.precision(12);
  out << "scenario,leaf,objective,investment_cost,operational_cost,weight\n";
  for (std::size_t k = 0; k < result.scenarios.size(); ++k) {
    const RollingScenario& s = result.scenarios[k];
    out << k + 1 << ',' << s.leaf << ',' << s.objective << ',' << s.investment_cost << ',' << s.operational_cost << ','
        << s.weight << '\n';
  }
  out << "ERHEV,," << result.erhev << ",,,\n";
  return out.str();
}

}  // namespace mhsp::assessment
