#include "mhsp/model/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mhsp/common/error.hpp"

namespace mhsp::model {

lp::StandardLp subproblem_lp(const OperationalSubproblem& sub, const std::vector<double>& x,
                             const std::vector<double>& coefficients) {
  if (static_cast<int>(x.size()) != sub.B.cols()) {
    throw DimensionError("subproblem " + std::to_string(sub.id) + " expects " +
                         std::to_string(sub.B.cols()) + " strategic values, got " +
                         std::to_string(x.size()));
  }
  lp::StandardLp lp;
  lp.objective = sub.effective_cost(coefficients);
  lp.rows = sub.A;
  lp.rhs = sub.b;
  for (const lp::Triplet& t : sub.B.entries()) lp.rhs[t.row] += t.value * x[t.col];
  lp.senses = sub.senses;
  lp.lower = sub.y_lower;
  lp.upper = sub.y_upper;
  return lp;
}

SubproblemValue evaluate_subproblem(const OperationalSubproblem& sub, const std::vector<double>& x,
                                    const std::vector<double>& coefficients,
                                    const lp::LpSolver& solver, lp::BasisState* basis) {
  const lp::StandardLp lp = subproblem_lp(sub, x, coefficients);
  const lp::LpSolution sol = solver.solve(lp, basis);
  switch (sol.status) {
    case lp::LpStatus::kOptimal:
      break;
    case lp::LpStatus::kInfeasible:
      throw RecourseError("subproblem " + std::to_string(sub.id) +
                          " is infeasible at the given strategic values");
    default:
      throw SolverError("subproblem " + std::to_string(sub.id) + " ended with status " +
                        lp::to_string(sol.status));
  }
  if (basis) *basis = sol.basis;
  SubproblemValue out;
  out.theta = sol.objective;
  out.lambda = sub.B.transpose_multiply(sol.duals);
  // Cancellation noise in B'mu would otherwise reach the master as entries
  // many orders of magnitude below the rest of the cut.
  double largest = 0.0;
  for (double v : out.lambda) largest = std::max(largest, std::abs(v));
  for (double& v : out.lambda) {
    if (std::abs(v) <= 1e-13 * largest) v = 0.0;
  }
  out.pivots = sol.pivots;
  return out;
}

}  // namespace mhsp::model
