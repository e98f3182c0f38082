#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mhsp/lp/simplex.hpp"
#include "mhsp/model/instance.hpp"
#include "mhsp/runtime/evaluator.hpp"

namespace mhsp::benders {

// beta_k >= theta + lambda'(x_owner - anchor)
struct Cut {
  int subproblem = 0;
  std::vector<double> anchor;
  double theta = 0.0;
  std::vector<double> lambda;
  int iteration = 0;

  double value_at(const std::vector<double>& x_owner) const;
  friend bool operator==(const Cut&, const Cut&) = default;
};

class CutPool {
 public:
  CutPool() = default;
  CutPool(int n_subproblems, double floor) : floor_(floor), cuts_(n_subproblems) {}

  // Lower bound of every beta (the initial (floor, 0, 0) entry of each list).
  double floor() const { return floor_; }
  int num_subproblems() const { return static_cast<int>(cuts_.size()); }
  void add(Cut cut);
  const std::vector<Cut>& of(int subproblem) const { return cuts_[subproblem]; }
  // All cuts in (subproblem, iteration) order.
  std::vector<Cut> canonical() const;
  std::size_t size() const;
  // Cuts in insertion order; this is the RMP row order.
  const std::vector<Cut>& rows() const { return rows_; }

 private:
  double floor_ = 0.0;
  std::vector<std::vector<Cut>> cuts_;
  std::vector<Cut> rows_;
};

struct BendersConfig {
  // Absolute tolerance on U - L; non-positive selects relative_eps * (1 + |L|).
  double eps = 0.0;
  double relative_eps = 1e-6;
  double gamma = 0.5;
  double beta_floor = 0.0;
  double initial_upper = std::numeric_limits<double>::infinity();
  int max_iterations = 500;
  bool stabilise = true;

  void validate() const;
  double tolerance(double lower) const;
};

struct IterationRecord {
  int j = 0;
  double lower = 0.0;      // max of all RMP objectives so far
  double rmp_value = 0.0;  // this iteration's RMP objective
  double upper = 0.0;
  double level = std::numeric_limits<double>::quiet_NaN();
  double gap = 0.0;
  std::vector<double> x_rmp;
  std::vector<double> x_cp;  // empty when no centre point was computed
  std::vector<double> x_eva;
  std::vector<double> beta;
  double wall_seconds = 0.0;
  double master_seconds = 0.0;
  double round_seconds = 0.0;
  std::vector<double> solve_seconds;
};

struct BendersResult {
  double objective = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  std::vector<double> x;
  bool converged = false;
  int iterations = 0;
  std::vector<IterationRecord> log;
  CutPool pool;
  std::vector<std::string> warnings;
};

struct RmpSolution {
  std::vector<double> x;
  std::vector<double> beta;
  double objective = 0.0;
};

// Throws ConfigError when X is empty.
RmpSolution solve_rmp(const model::MhspInstance& instance, const CutPool& pool,
                      lp::BasisState* warm = nullptr);

double compute_level(double lower, double upper, double gamma);

struct CentrePoint {
  std::vector<double> x;
  std::vector<double> beta;
  double sigma = 0.0;
  bool fallback = false;
};

// Maximises the scaled slack sigma of every master row, cut, finite bound and
// the level row f(x) + sum pi beta <= level. On solver failure returns
// `fallback_x` with fallback = true. `rmp_basis`, the optimal basis of the
// RMP over the same pool, is used as the starting basis when given.
CentrePoint solve_centre_point(const model::MhspInstance& instance, const CutPool& pool,
                               double level, const std::vector<double>& fallback_x,
                               std::int64_t max_pivots = 50000,
                               const lp::BasisState* rmp_basis = nullptr);

struct BoundUpdate {
  double upper = 0.0;
  bool improved = false;
};

// Keeps the earlier incumbent unless the candidate is lower by more than 1e-12.
BoundUpdate update_bounds(double upper, double candidate);

using IterationObserver = std::function<void(const IterationRecord&)>;

BendersResult run_benders(const model::MhspInstance& instance, const BendersConfig& config,
                          runtime::RoundEvaluator& evaluator, const IterationObserver& observer = {});

// One JSON object per line.
std::string iteration_log_jsonl(const std::vector<IterationRecord>& log);

}  // namespace mhsp::benders
