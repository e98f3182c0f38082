#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mhsp/benders/engine.hpp"
#include "mhsp/model/instance.hpp"

namespace mhsp::assessment {

struct SolveOutcome {
  double objective = 0.0;
  std::vector<double> x;
  bool converged = true;
  int iterations = 0;
};

using Solver = std::function<SolveOutcome(const model::MhspInstance&)>;

// Benders with `threads` in-process evaluation threads (1 = serial).
Solver benders_solver(benders::BendersConfig config = {}, int threads = 1);
// Direct solve of the deterministic equivalent; exact up to LP tolerances.
Solver extensive_form_solver();

// f(x) + sum_k pi_k theta_k(x) for a complete strategic vector.
double evaluate_policy(const model::MhspInstance& instance, const std::vector<double>& x);
// Probability-weighted strategic part of the objective.
double investment_cost(const model::MhspInstance& instance, const std::vector<double>& x);

struct StabilityReport {
  std::vector<double> objectives;
  double mean = 0.0;
  double sd = 0.0;           // sample (m - 1) denominator
  double relative_sd = 0.0;  // sd / mean for positive means, else 0
  bool all_converged = true;
  std::vector<std::vector<double>> first_stage;  // root decisions per replication
  std::vector<double> first_stage_costs;         // root strategic cost per replication
};

StabilityReport summarize(const std::vector<double>& objectives);

// Builds a tree-structured instance with `scenarios` short-term scenarios
// from the seed.
using InstanceGenerator = std::function<model::MhspInstance(int scenarios, std::uint64_t seed)>;

// Replication r uses seed base_seed + r.
StabilityReport in_sample_stability(const InstanceGenerator& generate, int m, int n, std::uint64_t base_seed,
                                    const Solver& solve);

enum class OutOfSampleDirection {
  // Fix the root decision of the large reference tree, evaluate on m small trees.
  kReferenceOnSmallTrees,
  // Fix the root decision of each small tree, evaluate on the reference tree.
  kSmallTreesOnReference,
};

// The reference tree uses seed base_seed + m (distinct from the replications).
StabilityReport out_of_sample_stability(const InstanceGenerator& generate, int m, int n, int n_reference,
                                        std::uint64_t base_seed, const Solver& solve,
                                        OutOfSampleDirection direction = OutOfSampleDirection::kReferenceOnSmallTrees);

// Copies the root decision into a full-length vector for `instance` and
// fixes stage 0 to it.
model::MhspInstance fix_root(const model::MhspInstance& instance, const std::vector<double>& root_x);

struct ValueMetrics {
  double ev = 0.0;    // expected-value problem objective
  double eev = 0.0;   // its policy evaluated on the full instance
  double sp = 0.0;    // stochastic optimum
  double vss = 0.0;   // eev - sp
  std::vector<double> ev_x;
};

// Expected-value problem with strategic and operational parameters at their
// means; every strategic decision is then fixed on the full instance.
ValueMetrics short_term_vss(const model::MhspInstance& instance, const Solver& solve);
// Expected-value problem over the long-term tree only; short-term scenarios kept.
ValueMetrics long_term_vss(const model::MhspInstance& instance, const Solver& solve);

struct RollingScenario {
  int leaf = 0;
  double objective = 0.0;
  double investment_cost = 0.0;
  double operational_cost = 0.0;
  double weight = 0.0;
};

struct RollingHorizonResult {
  double erhev = 0.0;
  std::vector<RollingScenario> scenarios;
  std::vector<double> policy;  // full strategic vector of the rolling policy
  int solves = 0;
};

// Solves an expected-value problem at the root and again at every branching
// point, fixing decisions down to and including each branching node.
RollingHorizonResult rolling_horizon(const model::MhspInstance& instance, const Solver& solve);

double compute_rhvss(double erhev, double sp);

// L1 distance of the two vectors after normalising each to unit sum.
double normalized_l1(const std::vector<double>& a, const std::vector<double>& b);

std::string stability_csv(const StabilityReport& report);
std::string rolling_horizon_csv(const RollingHorizonResult& result);

}  // namespace mhsp::assessment
