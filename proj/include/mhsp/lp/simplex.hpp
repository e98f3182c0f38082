#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mhsp/lp/sparse_matrix.hpp"

namespace mhsp::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowSense : std::uint8_t { kLessEqual, kGreaterEqual, kEqual };

// minimize  objective' z + objective_offset
// s.t.      rows z (sense) rhs,   lower <= z <= upper.
//
// Rows default to `<=`; `>=` and `=` rows are accepted as a convenience so
// equality-heavy models (energy balances, state recursions) do not have to be
// split into pairs of inequalities.
struct StandardLp {
  std::vector<double> objective;
  double objective_offset = 0.0;
  SparseMatrix rows;
  std::vector<double> rhs;
  std::vector<RowSense> senses;  // empty means all kLessEqual
  std::vector<double> lower;
  std::vector<double> upper;

  int num_rows() const { return rows.rows(); }
  int num_cols() const { return rows.cols(); }
  RowSense sense(int row) const {
    return senses.empty() ? RowSense::kLessEqual : senses[row];
  }

  // Throws DimensionError / ValidationError on malformed input.
  void validate() const;
};

enum class LpStatus : std::uint8_t {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kIterationLimit,
};

std::string to_string(LpStatus status);

enum class VarStatus : std::uint8_t { kBasic, kAtLower, kAtUpper, kFree };

// Basis snapshot usable as a warm start. Columns first, then one entry per
// row for the row-activity variable. Rows appended after the snapshot was
// taken start basic.
struct BasisState {
  std::vector<VarStatus> columns;
  std::vector<VarStatus> rows;
};

struct LpLimits {
  // 0 selects the default of 50 * (rows + cols).
  std::int64_t max_pivots = 0;
  // Dantzig pricing is used for this many pivots, after which Bland's rule
  // takes over for the rest of the solve. Negative selects 20 * (rows + cols).
  std::int64_t dantzig_pivots = -1;
  // Consecutive degenerate pivots tolerated before Bland's rule is used until
  // the next non-degenerate pivot.
  int degenerate_streak = 30;
  double feasibility_tolerance = 1e-9;
  double optimality_tolerance = 1e-9;
  bool record_pivots = false;
};

struct LpSolution {
  LpStatus status = LpStatus::kIterationLimit;
  double objective = 0.0;
  std::vector<double> primal;
  // d objective / d rhs for every row: <= 0 on active `<=` rows, >= 0 on
  // active `>=` rows, free on equalities, zero on inactive rows.
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  std::vector<double> row_activity;
  std::int64_t pivots = 0;
  // (entering, leaving) variable indices; row variables are offset by the
  // column count, -1 marks a bound flip. Filled when LpLimits::record_pivots.
  std::vector<std::pair<int, int>> pivot_log;
  BasisState basis;
};

// Bounded primal simplex over a working basis of size at most
// min(rows, cols). Deterministic: identical input gives identical pivots.
// Throws NumericalError when the final feasibility residual exceeds 1e-6.
LpSolution solve_lp(const StandardLp& lp, const LpLimits& limits = {},
                    const BasisState* warm_start = nullptr);

// Max bound/row violation of `primal` for `lp`.
double primal_infeasibility(const StandardLp& lp,
                            const std::vector<double>& primal);

// Plain-text dump of the basis statuses, duals and reduced costs.
std::string debug_dump(const StandardLp& lp, const LpSolution& solution);

}  // namespace mhsp::lp
