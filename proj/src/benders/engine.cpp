#include "mhsp/benders/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "mhsp/common/error.hpp"
#include "mhsp/common/json_io.hpp"
#include "mhsp/lp/solver.hpp"

namespace mhsp::benders {

using lp::RowSense;
using lp::Triplet;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// x columns first, then one beta per subproblem.
struct MasterLayout {
  int n_x = 0;
  int n_beta = 0;
  int beta(int k) const { return n_x + k; }
};

void append_cut_rows(const model::MhspInstance& instance, const CutPool& pool,
                     const MasterLayout& layout, int first_row, std::vector<Triplet>& entries,
                     lp::StandardLp& lp, bool with_sigma, int sigma_col) {
  int row = first_row;
  for (const Cut& cut : pool.rows()) {
    const int owner = instance.subproblems[cut.subproblem].owner;
    const int begin = instance.nodes[owner].x_range.begin;
    double norm2 = 1.0;
    for (std::size_t l = 0; l < cut.lambda.size(); ++l) {
      if (cut.lambda[l] != 0.0) entries.push_back({row, begin + static_cast<int>(l), cut.lambda[l]});
      norm2 += cut.lambda[l] * cut.lambda[l];
    }
    entries.push_back({row, layout.beta(cut.subproblem), -1.0});
    if (with_sigma) entries.push_back({row, sigma_col, std::sqrt(norm2)});
    lp.rhs.push_back(dot(cut.lambda, cut.anchor) - cut.theta);
    lp.senses.push_back(RowSense::kLessEqual);
    ++row;
  }
}

}  // namespace

double Cut::value_at(const std::vector<double>& x_owner) const {
  double v = theta;
  for (std::size_t l = 0; l < lambda.size(); ++l) v += lambda[l] * (x_owner[l] - anchor[l]);
  return v;
}

void CutPool::add(Cut cut) {
  if (cut.subproblem < 0 || cut.subproblem >= num_subproblems()) {
    throw ValidationError("cut for unknown subproblem " + std::to_string(cut.subproblem));
  }
  if (cut.anchor.size() != cut.lambda.size()) throw DimensionError("cut anchor and subgradient sizes differ");
  rows_.push_back(cut);
  auto& list = cuts_[cut.subproblem];
  const auto pos = std::upper_bound(list.begin(), list.end(), cut.iteration,
                                    [](int it, const Cut& c) { return it < c.iteration; });
  list.insert(pos, std::move(cut));
}

std::vector<Cut> CutPool::canonical() const {
  std::vector<Cut> out;
  for (const auto& list : cuts_) out.insert(out.end(), list.begin(), list.end());
  return out;
}

std::size_t CutPool::size() const { return rows_.size(); }

void BendersConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (eps <= 0.0 && !(relative_eps > 0.0)) throw ConfigError("convergence tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
}

double BendersConfig::tolerance(double lower) const {
  if (eps > 0.0) return eps;
  return relative_eps * (1.0 + (std::isfinite(lower) ? std::abs(lower) : 0.0));
}

RmpSolution solve_rmp(const model::MhspInstance& instance, const CutPool& pool, lp::BasisState* warm) {
  const lp::StandardLp base = model::master_lp(instance);
  const MasterLayout layout{instance.num_x(), pool.num_subproblems()};
  lp::StandardLp lp;
  lp.objective = base.objective;
  lp.lower = base.lower;
  lp.upper = base.upper;
  for (const auto& sp : instance.subproblems) {
    lp.objective.push_back(sp.probability);
    lp.lower.push_back(pool.floor());
    lp.upper.push_back(lp::kInfinity);
  }
  std::vector<Triplet> entries = base.rows.entries();
  lp.rhs = base.rhs;
  lp.senses = base.senses;
  append_cut_rows(instance, pool, layout, base.num_rows(), entries, lp, false, -1);
  lp.rows = lp::SparseMatrix(static_cast<int>(lp.rhs.size()), layout.n_x + layout.n_beta, std::move(entries));

  const lp::LpSolution sol = lp::default_solver().solve(lp, warm);
  if (sol.status == lp::LpStatus::kInfeasible) throw ConfigError("master problem is infeasible");
  if (sol.status != lp::LpStatus::kOptimal) {
    throw SolverError("master problem solve ended with status " + lp::to_string(sol.status));
  }
  if (warm) *warm = sol.basis;
  RmpSolution out;
  out.x.assign(sol.primal.begin(), sol.primal.begin() + layout.n_x);
  out.beta.assign(sol.primal.begin() + layout.n_x, sol.primal.end());
  out.objective = sol.objective;
  return out;
}

double compute_level(double lower, double upper, double gamma) { return lower + gamma * (upper - lower); }

CentrePoint solve_centre_point(const model::MhspInstance& instance, const CutPool& pool, double level,
                               const std::vector<double>& fallback_x, std::int64_t max_pivots,
                               const lp::BasisState* rmp_basis) {
  constexpr double kSigmaCap = 1e9;
  const lp::StandardLp base = model::master_lp(instance);
  const MasterLayout layout{instance.num_x(), pool.num_subproblems()};
  const int sigma = layout.n_x + layout.n_beta;

  lp::StandardLp lp;
  lp.objective.assign(sigma + 1, 0.0);
  lp.objective[sigma] = -1.0;
  lp.lower = base.lower;
  lp.upper = base.upper;
  for (int k = 0; k < layout.n_beta; ++k) {
    lp.lower.push_back(pool.floor());
    lp.upper.push_back(lp::kInfinity);
  }
  lp.lower.push_back(0.0);
  lp.upper.push_back(kSigmaCap);

  std::vector<Triplet> entries;
  int row = 0;
  // Master rows, scaled by their norms. Equalities stay exact.
  std::vector<double> norm2(base.num_rows(), 0.0);
  for (const Triplet& t : base.rows.entries()) {
    entries.push_back(t);
    norm2[t.row] += t.value * t.value;
  }
  for (; row < base.num_rows(); ++row) {
    lp.rhs.push_back(base.rhs[row]);
    lp.senses.push_back(base.senses[row]);
    const double norm = std::sqrt(norm2[row]);
    if (base.senses[row] == RowSense::kLessEqual) entries.push_back({row, sigma, norm});
    if (base.senses[row] == RowSense::kGreaterEqual) entries.push_back({row, sigma, -norm});
  }
  // Distance to finite bounds.
  for (int col = 0; col < sigma; ++col) {
    const double lo = lp.lower[col];
    const double hi = lp.upper[col];
    if (lo == hi) continue;
    if (std::isfinite(lo)) {
      entries.push_back({row, col, 1.0});
      entries.push_back({row, sigma, -1.0});
      lp.rhs.push_back(lo);
      lp.senses.push_back(RowSense::kGreaterEqual);
      ++row;
    }
    if (std::isfinite(hi)) {
      entries.push_back({row, col, 1.0});
      entries.push_back({row, sigma, 1.0});
      lp.rhs.push_back(hi);
      lp.senses.push_back(RowSense::kLessEqual);
      ++row;
    }
  }
  // Level row.
  {
    double n2 = 0.0;
    for (int col = 0; col < layout.n_x; ++col) {
      const double f = base.objective[col];
      if (f != 0.0) entries.push_back({row, col, f});
      n2 += f * f;
    }
    for (int k = 0; k < layout.n_beta; ++k) {
      const double p = instance.subproblems[k].probability;
      entries.push_back({row, layout.beta(k), p});
      n2 += p * p;
    }
    if (n2 > 0.0) entries.push_back({row, sigma, std::sqrt(n2)});
    lp.rhs.push_back(level - base.objective_offset);
    lp.senses.push_back(RowSense::kLessEqual);
    ++row;
  }
  const int bound_and_level_rows = row - base.num_rows();
  append_cut_rows(instance, pool, layout, row, entries, lp, true, sigma);
  lp.rows = lp::SparseMatrix(static_cast<int>(lp.rhs.size()), sigma + 1, std::move(entries));

  // The RMP optimum with sigma = 0 is feasible here; starting from its basis
  // skips phase one entirely.
  lp::BasisState warm;
  const bool use_warm = rmp_basis != nullptr && static_cast<int>(rmp_basis->columns.size()) == sigma &&
                        rmp_basis->rows.size() == static_cast<std::size_t>(base.num_rows()) + pool.size();
  if (use_warm) {
    warm.columns = rmp_basis->columns;
    warm.columns.push_back(lp::VarStatus::kAtLower);
    warm.rows.assign(rmp_basis->rows.begin(), rmp_basis->rows.begin() + base.num_rows());
    warm.rows.insert(warm.rows.end(), bound_and_level_rows, lp::VarStatus::kBasic);
    warm.rows.insert(warm.rows.end(), rmp_basis->rows.begin() + base.num_rows(), rmp_basis->rows.end());
  }

  lp::LpLimits limits;
  limits.max_pivots = max_pivots;
  CentrePoint out;
  try {
    const lp::LpSolution sol = lp::SimplexSolver(limits).solve(lp, use_warm ? &warm : nullptr);
    if (sol.status == lp::LpStatus::kOptimal) {
      out.x.assign(sol.primal.begin(), sol.primal.begin() + layout.n_x);
      out.beta.assign(sol.primal.begin() + layout.n_x, sol.primal.begin() + sigma);
      out.sigma = sol.primal[sigma];
      return out;
    }
  } catch (const NumericalError&) {
  }
  out.x = fallback_x;
  out.fallback = true;
  return out;
}

BoundUpdate update_bounds(double upper, double candidate) {
  if (candidate < upper - 1e-12) return {candidate, true};
  return {upper, false};
}

BendersResult run_benders(const model::MhspInstance& instance, const BendersConfig& config,
                          runtime::RoundEvaluator& evaluator, const IterationObserver& observer) {
  config.validate();
  instance.validate();
  const int n_subs = static_cast<int>(instance.subproblems.size());
  const std::vector<double> f = instance.strategic_cost();

  BendersResult result;
  result.pool = CutPool(n_subs, config.beta_floor);
  double lower = -std::numeric_limits<double>::infinity();
  double upper = config.initial_upper;
  lp::BasisState rmp_basis;

  for (int j = 1; j <= config.max_iterations; ++j) {
    const Clock::time_point start = Clock::now();
    IterationRecord rec;
    rec.j = j;

    const RmpSolution rmp = solve_rmp(instance, result.pool, &rmp_basis);
    rec.rmp_value = rmp.objective;
    lower = std::max(lower, rmp.objective);
    rec.x_rmp = rmp.x;
    rec.beta = rmp.beta;

    rec.x_eva = rmp.x;
    if (config.stabilise && j > 1 && std::isfinite(upper)) {
      rec.level = compute_level(lower, upper, config.gamma);
      const CentrePoint cp = solve_centre_point(instance, result.pool, rec.level, rmp.x, 50000, &rmp_basis);
      if (cp.fallback) {
        result.warnings.push_back("iteration " + std::to_string(j) +
                                  ": centre-point problem not solved, evaluating at the master solution");
      } else {
        rec.x_cp = cp.x;
        rec.x_eva = cp.x;
      }
    }
    rec.master_seconds = elapsed(start);

    runtime::EvalRequest request;
    request.iteration = j;
    std::vector<std::vector<double>> anchors(n_subs);
    for (const auto& sp : instance.subproblems) {
      anchors[sp.id] = model::extract_subvector(instance, sp.owner, rec.x_eva);
      request.items.push_back({sp.id, anchors[sp.id], sp.coefficients});
    }
    const Clock::time_point round_start = Clock::now();
    double candidate = dot(f, rec.x_eva);
    if (n_subs > 0) {
      const runtime::EvalResult round = evaluator.evaluate_round(request);
      if (static_cast<int>(round.outcomes.size()) != n_subs) {
        throw SolverError("evaluation round returned " + std::to_string(round.outcomes.size()) + " of " +
                          std::to_string(n_subs) + " results");
      }
      rec.solve_seconds.assign(n_subs, 0.0);
      for (const runtime::EvalOutcome& o : round.outcomes) {
        candidate += instance.subproblems[o.subproblem].probability * o.theta;
        rec.solve_seconds[o.subproblem] = o.solve_seconds;
        result.pool.add({o.subproblem, anchors[o.subproblem], o.theta, o.lambda, j});
      }
    }
    rec.round_seconds = elapsed(round_start);

    const BoundUpdate bu = update_bounds(upper, candidate);
    if (bu.improved) result.x = rec.x_eva;
    upper = bu.upper;

    rec.lower = lower;
    rec.upper = upper;
    rec.gap = upper - lower;
    rec.wall_seconds = elapsed(start);
    result.log.push_back(rec);
    if (observer) observer(result.log.back());

    result.iterations = j;
    if (upper - lower <= config.tolerance(lower)) {
      result.converged = true;
      break;
    }
  }
  result.objective = upper;
  result.lower = lower;
  return result;
}

std::string iteration_log_jsonl(const std::vector<IterationRecord>& log) {
  std::ostringstream out;
  for (const IterationRecord& r : log) {
    Json line{{"j", r.j},
              {"L", number_to_json(r.lower)},
              {"rmp", number_to_json(r.rmp_value)},
              {"U", number_to_json(r.upper)},
              {"T", std::isnan(r.level) ? Json() : Json(r.level)},
              {"gap", number_to_json(r.gap)},
              {"wall_seconds", r.wall_seconds},
              {"master_seconds", r.master_seconds},
              {"round_seconds", r.round_seconds},
              {"solve_seconds", r.solve_seconds},
              {"x_eva", numbers_to_json(r.x_eva)}};
    out << line.dump() << '\n';
  }
  return out.str();
}

}  // namespace mhsp::benders
