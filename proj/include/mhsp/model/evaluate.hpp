#pragma once

#include <cstdint>
#include <vector>

#include "mhsp/lp/solver.hpp"
#include "mhsp/model/instance.hpp"

namespace mhsp::model {

struct SubproblemValue {
  double theta = 0.0;
  // Subgradient of g(., coefficients) at x: theta + lambda'(z - x) <= g(z).
  std::vector<double> lambda;
  std::int64_t pivots = 0;
};

lp::StandardLp subproblem_lp(const OperationalSubproblem& sub, const std::vector<double>& x,
                             const std::vector<double>& coefficients);

// Solves g(x, coefficients). When `basis` is given it is used as a warm start
// and replaced by the final basis. Infeasibility raises RecourseError, any
// other non-optimal status SolverError.
SubproblemValue evaluate_subproblem(const OperationalSubproblem& sub, const std::vector<double>& x,
                                    const std::vector<double>& coefficients,
                                    const lp::LpSolver& solver = lp::default_solver(),
                                    lp::BasisState* basis = nullptr);

}  // namespace mhsp::model
