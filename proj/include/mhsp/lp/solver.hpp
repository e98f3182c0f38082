#pragma once

#include <memory>
#include <string>

#include "mhsp/lp/simplex.hpp"

namespace mhsp::lp {

// Adapter boundary for LP engines. Implementations must be safe to call
// concurrently on distinct problems.
class LpSolver {
 public:
  virtual ~LpSolver() = default;
  virtual LpSolution solve(const StandardLp& lp, const BasisState* warm_start) const = 0;
  virtual std::string name() const = 0;
};

class SimplexSolver final : public LpSolver {
 public:
  explicit SimplexSolver(LpLimits limits = {}) : limits_(limits) {}
  LpSolution solve(const StandardLp& lp, const BasisState* warm_start) const override {
    return solve_lp(lp, limits_, warm_start);
  }
  std::string name() const override { return "kernel-simplex"; }

 private:
  LpLimits limits_;
};

inline const LpSolver& default_solver() {
  static const SimplexSolver solver;
  return solver;
}

}  // namespace mhsp::lp
