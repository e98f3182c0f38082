#include "mhsp/lp/simplex.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "mhsp/common/error.hpp"

namespace mhsp::lp {

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
    case LpStatus::kIterationLimit:
      return "iteration_limit";
  }
  return "unknown";
}

void StandardLp::validate() const {
  const int n = num_cols();
  const int m = num_rows();
  if (static_cast<int>(objective.size()) != n) {
    throw DimensionError("objective has " + std::to_string(objective.size()) +
                         " entries, expected " + std::to_string(n));
  }
  if (static_cast<int>(rhs.size()) != m) {
    throw DimensionError("rhs has " + std::to_string(rhs.size()) +
                         " entries, expected " + std::to_string(m));
  }
  if (!senses.empty() && static_cast<int>(senses.size()) != m) {
    throw DimensionError("senses has " + std::to_string(senses.size()) +
                         " entries, expected " + std::to_string(m));
  }
  if (static_cast<int>(lower.size()) != n ||
      static_cast<int>(upper.size()) != n) {
    throw DimensionError("bounds do not match the column count " +
                         std::to_string(n));
  }
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(objective[j])) {
      throw ValidationError("objective coefficient " + std::to_string(j) +
                            " is not finite");
    }
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] ||
        lower[j] == kInfinity || upper[j] == -kInfinity) {
      throw ValidationError("invalid bounds on column " + std::to_string(j));
    }
  }
  for (int i = 0; i < m; ++i) {
    if (!std::isfinite(rhs[i])) {
      throw ValidationError("rhs " + std::to_string(i) + " is not finite");
    }
  }
  for (const Triplet& t : rows.entries()) {
    if (!std::isfinite(t.value)) {
      throw ValidationError("matrix entry is not finite");
    }
  }
}

double primal_infeasibility(const StandardLp& lp,
                            const std::vector<double>& primal) {
  double worst = 0.0;
  for (int j = 0; j < lp.num_cols(); ++j) {
    worst = std::max(worst, lp.lower[j] - primal[j]);
    worst = std::max(worst, primal[j] - lp.upper[j]);
  }
  const std::vector<double> activity = lp.rows.multiply(primal);
  for (int i = 0; i < lp.num_rows(); ++i) {
    const double slack = lp.rhs[i] - activity[i];
    switch (lp.sense(i)) {
      case RowSense::kLessEqual:
        worst = std::max(worst, -slack);
        break;
      case RowSense::kGreaterEqual:
        worst = std::max(worst, slack);
        break;
      case RowSense::kEqual:
        worst = std::max(worst, std::abs(slack));
        break;
    }
  }
  return worst;
}

namespace {

// Violation relative to the magnitude of the quantities involved, so rows
// with large coefficients are judged on the same footing as unit rows.
double scaled_infeasibility(const StandardLp& lp, const std::vector<double>& primal) {
  double worst = 0.0;
  for (int j = 0; j < lp.num_cols(); ++j) {
    const double v = std::max(lp.lower[j] - primal[j], primal[j] - lp.upper[j]);
    worst = std::max(worst, v / std::max(1.0, std::abs(primal[j])));
  }
  std::vector<double> activity(lp.num_rows(), 0.0);
  std::vector<double> magnitude(lp.num_rows(), 0.0);
  for (const Triplet& t : lp.rows.entries()) {
    activity[t.row] += t.value * primal[t.col];
    magnitude[t.row] += std::abs(t.value * primal[t.col]);
  }
  for (int i = 0; i < lp.num_rows(); ++i) {
    const double slack = lp.rhs[i] - activity[i];
    double v = 0.0;
    switch (lp.sense(i)) {
      case RowSense::kLessEqual:
        v = -slack;
        break;
      case RowSense::kGreaterEqual:
        v = slack;
        break;
      case RowSense::kEqual:
        v = std::abs(slack);
        break;
    }
    worst = std::max(worst, v / std::max({1.0, std::abs(lp.rhs[i]), magnitude[i]}));
  }
  return worst;
}

constexpr double kPivotTolerance = 1e-9;
constexpr double kDegenerateStep = 1e-12;
constexpr double kResidualLimit = 1e-6;
constexpr double kLooseFeasibility = 1e-7;

struct Compressed {
  std::vector<int> start;
  std::vector<int> index;
  std::vector<double> value;
};

Compressed compress(const SparseMatrix& matrix, bool by_column) {
  const int major = by_column ? matrix.cols() : matrix.rows();
  Compressed out;
  out.start.assign(major + 1, 0);
  for (const Triplet& t : matrix.entries()) {
    ++out.start[(by_column ? t.col : t.row) + 1];
  }
  for (int k = 0; k < major; ++k) out.start[k + 1] += out.start[k];
  out.index.resize(matrix.nonzeros());
  out.value.resize(matrix.nonzeros());
  std::vector<int> fill(out.start.begin(), out.start.end() - 1);
  for (const Triplet& t : matrix.entries()) {
    const int slot = fill[by_column ? t.col : t.row]++;
    out.index[slot] = by_column ? t.row : t.col;
    out.value[slot] = t.value;
  }
  return out;
}

// Variables 0..n-1 are the structural columns, n..n+m-1 the row activities
// r = G z. A basis holds k basic columns and m-k basic row activities; the
// k nonbasic rows together with the basic columns form the working kernel
// K = G[nonbasic rows, basic columns], whose inverse is kept explicitly.
// Rows of `inverse()` are indexed by kernel column position, columns by
// kernel row position.
class KernelSimplex {
 public:
  KernelSimplex(const StandardLp& lp, const LpLimits& limits)
      : lp_(lp),
        limits_(limits),
        n_(lp.num_cols()),
        m_(lp.num_rows()),
        by_col_(compress(lp.rows, true)),
        by_row_(compress(lp.rows, false)),
        feasibility_tol_(limits.feasibility_tolerance) {
    lower_.resize(n_ + m_);
    upper_.resize(n_ + m_);
    for (int j = 0; j < n_; ++j) {
      lower_[j] = lp.lower[j];
      upper_[j] = lp.upper[j];
    }
    for (int i = 0; i < m_; ++i) {
      const double h = lp.rhs[i];
      switch (lp.sense(i)) {
        case RowSense::kLessEqual:
          lower_[n_ + i] = -kInfinity;
          upper_[n_ + i] = h;
          break;
        case RowSense::kGreaterEqual:
          lower_[n_ + i] = h;
          upper_[n_ + i] = kInfinity;
          break;
        case RowSense::kEqual:
          lower_[n_ + i] = h;
          upper_[n_ + i] = h;
          break;
      }
    }
    cost_scale_ = 1.0;
    for (double c : lp.objective) cost_scale_ = std::max(cost_scale_, std::abs(c));
    max_pivots_ = limits.max_pivots > 0
                      ? limits.max_pivots
                      : 50 * static_cast<std::int64_t>(m_ + n_ + 1);
    dantzig_pivots_ = limits.dantzig_pivots >= 0
                          ? limits.dantzig_pivots
                          : 20 * static_cast<std::int64_t>(m_ + n_ + 1);
    status_.assign(n_ + m_, VarStatus::kBasic);
    value_.assign(n_ + m_, 0.0);
    phase_cost_.assign(n_ + m_, 0.0);
    duals_.assign(m_, 0.0);
    row_step_.assign(m_, 0.0);
    row_pos_.assign(m_, -1);
    col_pos_.assign(n_, -1);
  }

  LpSolution solve(const BasisState* warm) {
    if (warm == nullptr || !load_basis(*warm)) cold_start();
    LpSolution out;
    out.status = iterate(out);
    finish(out);
    return out;
  }

 private:
  int kernel_size() const { return static_cast<int>(kernel_cols_.size()); }

  // The live inverse is the leading k x k block of store_, which grows
  // geometrically so kernel growth does not copy the whole matrix each pivot.
  Eigen::Block<Eigen::MatrixXd> inverse() {
    const int k = kernel_size();
    return store_.topLeftCorner(k, k);
  }
  Eigen::Block<const Eigen::MatrixXd> inverse() const {
    const int k = kernel_size();
    return store_.topLeftCorner(k, k);
  }

  void reserve(int k) {
    if (store_.rows() >= k) return;
    const int cap = std::max(k, std::min(std::max<int>(16, 2 * store_.rows()), std::min(m_, n_)));
    Eigen::MatrixXd next(cap, cap);
    const int live = std::min<int>(kernel_size(), store_.rows());
    next.topLeftCorner(live, live) = store_.topLeftCorner(live, live);
    store_ = std::move(next);
  }

  void cold_start() {
    kernel_rows_.clear();
    kernel_cols_.clear();
    std::fill(row_pos_.begin(), row_pos_.end(), -1);
    std::fill(col_pos_.begin(), col_pos_.end(), -1);
    for (int j = 0; j < n_; ++j) status_[j] = resting_status(j);
    for (int i = 0; i < m_; ++i) status_[n_ + i] = VarStatus::kBasic;
    recompute_values();
  }

  VarStatus resting_status(int v) const {
    if (std::isfinite(lower_[v])) return VarStatus::kAtLower;
    if (std::isfinite(upper_[v])) return VarStatus::kAtUpper;
    return VarStatus::kFree;
  }

  bool load_basis(const BasisState& basis) {
    if (static_cast<int>(basis.columns.size()) != n_ ||
        static_cast<int>(basis.rows.size()) > m_) {
      return false;
    }
    kernel_rows_.clear();
    kernel_cols_.clear();
    std::fill(row_pos_.begin(), row_pos_.end(), -1);
    std::fill(col_pos_.begin(), col_pos_.end(), -1);
    for (int v = 0; v < n_ + m_; ++v) {
      VarStatus s = VarStatus::kBasic;
      if (v < n_) {
        s = basis.columns[v];
      } else if (v - n_ < static_cast<int>(basis.rows.size())) {
        s = basis.rows[v - n_];
      }
      if (s == VarStatus::kAtLower && !std::isfinite(lower_[v])) s = resting_status(v);
      if (s == VarStatus::kAtUpper && !std::isfinite(upper_[v])) s = resting_status(v);
      if (s == VarStatus::kFree && (std::isfinite(lower_[v]) || std::isfinite(upper_[v]))) {
        s = resting_status(v);
      }
      status_[v] = s;
    }
    for (int j = 0; j < n_; ++j) {
      if (status_[j] == VarStatus::kBasic) {
        col_pos_[j] = kernel_size();
        kernel_cols_.push_back(j);
      }
    }
    for (int i = 0; i < m_; ++i) {
      if (status_[n_ + i] != VarStatus::kBasic) {
        row_pos_[i] = static_cast<int>(kernel_rows_.size());
        kernel_rows_.push_back(i);
      }
    }
    if (kernel_rows_.size() != kernel_cols_.size() || !refactor()) {
      return false;
    }
    recompute_values();
    return true;
  }

  // Rebuilds the kernel inverse from scratch. Returns false if singular.
  bool refactor() {
    const int k = kernel_size();
    since_refactor_ = 0;
    if (k == 0) return true;
    Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(k, k);
    for (int q = 0; q < k; ++q) {
      const int j = kernel_cols_[q];
      for (int s = by_col_.start[j]; s < by_col_.start[j + 1]; ++s) {
        const int p = row_pos_[by_col_.index[s]];
        if (p >= 0) kernel(p, q) = by_col_.value[s];
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kernel);
    if (!(lu.rcond() > 1e-14)) return false;
    reserve(k);
    inverse() = lu.inverse();
    return true;
  }

  // Refactors the kernel; a numerically singular kernel is repaired by
  // swapping its dependent columns for row activities.
  void refactor_or_repair() {
    if (refactor()) return;
    const int k = kernel_size();
    Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(k, k);
    for (int q = 0; q < k; ++q) {
      const int j = kernel_cols_[q];
      for (int s = by_col_.start[j]; s < by_col_.start[j + 1]; ++s) {
        const int p = row_pos_[by_col_.index[s]];
        if (p >= 0) kernel(p, q) = by_col_.value[s];
      }
    }
    // Gaussian elimination with complete pivoting to find a well-conditioned
    // subset of rows and columns.
    std::vector<int> rows(k);
    std::vector<int> cols(k);
    for (int t = 0; t < k; ++t) rows[t] = cols[t] = t;
    const double tol = 1e-11 * std::max(1.0, kernel.cwiseAbs().maxCoeff());
    int rank = 0;
    for (; rank < k; ++rank) {
      Eigen::Index pi = 0;
      Eigen::Index pj = 0;
      const double big = kernel.bottomRightCorner(k - rank, k - rank).cwiseAbs().maxCoeff(&pi, &pj);
      if (!(big > tol)) break;
      pi += rank;
      pj += rank;
      kernel.row(rank).swap(kernel.row(pi));
      kernel.col(rank).swap(kernel.col(pj));
      std::swap(rows[rank], rows[pi]);
      std::swap(cols[rank], cols[pj]);
      const int rest = k - rank - 1;
      if (rest > 0) {
        kernel.col(rank).tail(rest) /= kernel(rank, rank);
        kernel.bottomRightCorner(rest, rest).noalias() -= kernel.col(rank).tail(rest) * kernel.row(rank).tail(rest);
      }
    }
    for (int t = rank; t < k; ++t) {
      const int j = kernel_cols_[cols[t]];
      const bool near_upper = std::isfinite(upper_[j]) &&
                              (!std::isfinite(lower_[j]) || upper_[j] - value_[j] < value_[j] - lower_[j]);
      status_[j] = near_upper ? VarStatus::kAtUpper : resting_status(j);
      status_[n_ + kernel_rows_[rows[t]]] = VarStatus::kBasic;
    }
    kernel_rows_.clear();
    kernel_cols_.clear();
    std::fill(row_pos_.begin(), row_pos_.end(), -1);
    std::fill(col_pos_.begin(), col_pos_.end(), -1);
    for (int j = 0; j < n_; ++j) {
      if (status_[j] == VarStatus::kBasic) {
        col_pos_[j] = kernel_size();
        kernel_cols_.push_back(j);
      }
    }
    for (int i = 0; i < m_; ++i) {
      if (status_[n_ + i] != VarStatus::kBasic) {
        row_pos_[i] = static_cast<int>(kernel_rows_.size());
        kernel_rows_.push_back(i);
      }
    }
    if (!refactor()) cold_start();
  }

  void recompute_values() {
    for (int v = 0; v < n_ + m_; ++v) {
      switch (status_[v]) {
        case VarStatus::kAtLower:
          value_[v] = lower_[v];
          break;
        case VarStatus::kAtUpper:
          value_[v] = upper_[v];
          break;
        case VarStatus::kFree:
          value_[v] = 0.0;
          break;
        case VarStatus::kBasic:
          break;
      }
    }
    const int k = kernel_size();
    if (k > 0) {
      Eigen::VectorXd rhs(k);
      for (int p = 0; p < k; ++p) {
        const int i = kernel_rows_[p];
        double r = value_[n_ + i];
        for (int s = by_row_.start[i]; s < by_row_.start[i + 1]; ++s) {
          const int j = by_row_.index[s];
          if (col_pos_[j] < 0) r -= by_row_.value[s] * value_[j];
        }
        rhs[p] = r;
      }
      const Eigen::VectorXd basic = inverse() * rhs;
      for (int q = 0; q < k; ++q) value_[kernel_cols_[q]] = basic[q];
    }
    for (int i = 0; i < m_; ++i) {
      if (status_[n_ + i] != VarStatus::kBasic) continue;
      double r = 0.0;
      for (int s = by_row_.start[i]; s < by_row_.start[i + 1]; ++s) {
        r += by_row_.value[s] * value_[by_row_.index[s]];
      }
      value_[n_ + i] = r;
    }
  }

  // Sets phase costs on infeasible basics; returns true if any exist.
  bool price_infeasibility() {
    const double tol = feasibility_tol_;
    bool infeasible = false;
    for (int v = 0; v < n_ + m_; ++v) {
      double c = 0.0;
      if (status_[v] == VarStatus::kBasic) {
        if (value_[v] < lower_[v] - tol) {
          c = -1.0;
        } else if (value_[v] > upper_[v] + tol) {
          c = 1.0;
        }
      }
      phase_cost_[v] = c;
      infeasible = infeasible || c != 0.0;
    }
    return infeasible;
  }

  double column_cost(int j, bool phase_one) const {
    return phase_one ? phase_cost_[j] : lp_.objective[j];
  }

  void compute_duals(bool phase_one) {
    const int k = kernel_size();
    Eigen::VectorXd rhs(k);
    for (int q = 0; q < k; ++q) rhs[q] = column_cost(kernel_cols_[q], phase_one);
    if (phase_one) {
      for (int q = 0; q < k; ++q) {
        const int j = kernel_cols_[q];
        for (int s = by_col_.start[j]; s < by_col_.start[j + 1]; ++s) {
          const int i = by_col_.index[s];
          if (status_[n_ + i] == VarStatus::kBasic) {
            rhs[q] += by_col_.value[s] * phase_cost_[n_ + i];
          }
        }
      }
    }
    Eigen::VectorXd kernel_duals;
    if (k > 0) kernel_duals = inverse().transpose() * rhs;
    for (int i = 0; i < m_; ++i) {
      const int p = row_pos_[i];
      duals_[i] = p >= 0 ? kernel_duals[p]
                         : (phase_one ? -phase_cost_[n_ + i] : 0.0);
    }
  }

  double reduced_cost(int v, bool phase_one) const {
    if (v >= n_) return duals_[v - n_];
    double d = column_cost(v, phase_one);
    for (int s = by_col_.start[v]; s < by_col_.start[v + 1]; ++s) {
      d -= by_col_.value[s] * duals_[by_col_.index[s]];
    }
    return d;
  }

  // Improving direction (+1/-1) for nonbasic v with reduced cost d, or 0.
  int improving_direction(int v, double d, double tol) const {
    if (upper_[v] - lower_[v] <= 0.0) return 0;
    switch (status_[v]) {
      case VarStatus::kAtLower:
        return d < -tol ? 1 : 0;
      case VarStatus::kAtUpper:
        return d > tol ? -1 : 0;
      case VarStatus::kFree:
        return d < -tol ? 1 : (d > tol ? -1 : 0);
      case VarStatus::kBasic:
        return 0;
    }
    return 0;
  }

  // Returns the entering variable or -1 when optimal for the current phase.
  int choose_entering(bool phase_one, bool bland, int* direction) {
    const double tol = limits_.optimality_tolerance * (phase_one ? 1.0 : cost_scale_);
    int best = -1;
    double best_score = 0.0;
    for (int v = 0; v < n_ + m_; ++v) {
      if (status_[v] == VarStatus::kBasic || rejected_[v]) continue;
      const double d = reduced_cost(v, phase_one);
      const int dir = improving_direction(v, d, tol);
      if (dir == 0) continue;
      if (bland) {
        *direction = dir;
        return v;
      }
      if (std::abs(d) > best_score) {
        best_score = std::abs(d);
        best = v;
        *direction = dir;
      }
    }
    return best;
  }

  // Fills column_step_ (basic columns) and row_step_ (basic rows) with the
  // rate of change per unit move of `entering` in `direction`.
  void compute_direction(int entering, int direction) {
    const int k = kernel_size();
    column_step_ = Eigen::VectorXd::Zero(k);
    if (entering < n_) {
      for (int s = by_col_.start[entering]; s < by_col_.start[entering + 1]; ++s) {
        const int p = row_pos_[by_col_.index[s]];
        if (p >= 0) column_step_.noalias() -= (direction * by_col_.value[s]) * inverse().col(p);
      }
    } else {
      column_step_ = direction * inverse().col(row_pos_[entering - n_]);
    }
    std::fill(row_step_.begin(), row_step_.end(), 0.0);
    for (int q = 0; q < k; ++q) {
      const double dz = column_step_[q];
      if (dz == 0.0) continue;
      const int j = kernel_cols_[q];
      for (int s = by_col_.start[j]; s < by_col_.start[j + 1]; ++s) {
        row_step_[by_col_.index[s]] += by_col_.value[s] * dz;
      }
    }
    if (entering < n_) {
      for (int s = by_col_.start[entering]; s < by_col_.start[entering + 1]; ++s) {
        row_step_[by_col_.index[s]] += direction * by_col_.value[s];
      }
    }
  }

  struct Blocking {
    int variable = -1;
    double step = kInfinity;
    double target = 0.0;
    double rate = 0.0;
  };

  // Bound a basic variable moves towards at `rate`, honouring phase one
  // semantics for currently infeasible variables.
  bool ratio_target(int v, double rate, double* target) const {
    const double tol = limits_.feasibility_tolerance;
    const double x = value_[v];
    if (rate > 0.0) {
      if (x < lower_[v] - tol) {
        *target = lower_[v];
        return true;
      }
      if (x <= upper_[v] + tol && std::isfinite(upper_[v])) {
        *target = upper_[v];
        return true;
      }
      return false;
    }
    if (x > upper_[v] + tol) {
      *target = upper_[v];
      return true;
    }
    if (x >= lower_[v] - tol && std::isfinite(lower_[v])) {
      *target = lower_[v];
      return true;
    }
    return false;
  }

  template <typename Visit>
  void for_each_basic(Visit&& visit) const {
    for (int q = 0; q < kernel_size(); ++q) {
      visit(kernel_cols_[q], column_step_[q]);
    }
    for (int i = 0; i < m_; ++i) {
      if (status_[n_ + i] == VarStatus::kBasic) visit(n_ + i, row_step_[i]);
    }
  }

  // Two-pass (Harris) ratio test.
  Blocking ratio_test(bool bland) const {
    const double tol = limits_.feasibility_tolerance;
    double relaxed = kInfinity;
    for_each_basic([&](int v, double rate) {
      if (std::abs(rate) < kPivotTolerance) return;
      double target;
      if (!ratio_target(v, rate, &target)) return;
      const double bound = rate > 0.0 ? target + tol : target - tol;
      relaxed = std::min(relaxed, (bound - value_[v]) / rate);
    });
    Blocking best;
    if (!std::isfinite(relaxed)) return best;
    for_each_basic([&](int v, double rate) {
      if (std::abs(rate) < kPivotTolerance) return;
      double target;
      if (!ratio_target(v, rate, &target)) return;
      const double step = (target - value_[v]) / rate;
      if (step > relaxed) return;
      bool take = best.variable < 0;
      if (!take) {
        take = bland ? v < best.variable
                     : std::abs(rate) > std::abs(best.rate);
      }
      if (take) best = {v, std::max(step, 0.0), target, rate};
    });
    return best;
  }

  void apply_step(int entering, int direction, double step) {
    if (step == 0.0) return;
    value_[entering] += direction * step;
    for (int q = 0; q < kernel_size(); ++q) {
      value_[kernel_cols_[q]] += step * column_step_[q];
    }
    for (int i = 0; i < m_; ++i) {
      if (status_[n_ + i] == VarStatus::kBasic) value_[n_ + i] += step * row_step_[i];
    }
  }

  // Kernel row vector u = G[row, basic columns] * inverse().
  Eigen::RowVectorXd row_times_inverse(int row) const {
    Eigen::RowVectorXd u = Eigen::RowVectorXd::Zero(kernel_size());
    for (int s = by_row_.start[row]; s < by_row_.start[row + 1]; ++s) {
      const int q = col_pos_[by_row_.index[s]];
      if (q >= 0) u.noalias() += by_row_.value[s] * inverse().row(q);
    }
    return u;
  }

  void replace_column(int position, int entering, int direction) {
    const Eigen::VectorXd w = -direction * column_step_;
    const double pivot = w[position];
    const Eigen::RowVectorXd r = inverse().row(position) / pivot;
    inverse().noalias() -= w * r;
    inverse().row(position) = r;
    col_pos_[kernel_cols_[position]] = -1;
    kernel_cols_[position] = entering;
    col_pos_[entering] = position;
  }

  void grow(int leaving_row, int entering, int direction) {
    const int k = kernel_size();
    const Eigen::VectorXd w = -direction * column_step_;
    const Eigen::RowVectorXd u = row_times_inverse(leaving_row);
    double alpha = 0.0;
    double vw = 0.0;
    for (int s = by_row_.start[leaving_row]; s < by_row_.start[leaving_row + 1]; ++s) {
      const int j = by_row_.index[s];
      if (j == entering) alpha = by_row_.value[s];
      const int q = col_pos_[j];
      if (q >= 0) vw += by_row_.value[s] * w[q];
    }
    const double schur = alpha - vw;
    reserve(k + 1);
    store_.topLeftCorner(k, k).noalias() += (w / schur) * u;
    store_.block(0, k, k, 1) = -w / schur;
    store_.block(k, 0, 1, k) = -u / schur;
    store_(k, k) = 1.0 / schur;
    row_pos_[leaving_row] = k;
    kernel_rows_.push_back(leaving_row);
    col_pos_[entering] = k;
    kernel_cols_.push_back(entering);
  }

  void shrink(int row_position, int col_position) {
    const int k = kernel_size();
    const double pivot = inverse()(col_position, row_position);
    const Eigen::VectorXd c = inverse().col(row_position);
    const Eigen::RowVectorXd r = inverse().row(col_position) / pivot;
    inverse().noalias() -= c * r;
    const int last = k - 1;
    if (col_position != last) inverse().row(col_position).swap(inverse().row(last));
    if (row_position != last) inverse().col(row_position).swap(inverse().col(last));

    row_pos_[kernel_rows_[row_position]] = -1;
    if (row_position != last) {
      kernel_rows_[row_position] = kernel_rows_[last];
      row_pos_[kernel_rows_[row_position]] = row_position;
    }
    kernel_rows_.pop_back();
    col_pos_[kernel_cols_[col_position]] = -1;
    if (col_position != last) {
      kernel_cols_[col_position] = kernel_cols_[last];
      col_pos_[kernel_cols_[col_position]] = col_position;
    }
    kernel_cols_.pop_back();
  }

  void replace_row(int position, int leaving_row) {
    const Eigen::RowVectorXd u = row_times_inverse(leaving_row);
    const double pivot = u[position];
    const Eigen::VectorXd c = inverse().col(position);
    Eigen::RowVectorXd scaled = u / pivot;
    scaled[position] -= 1.0 / pivot;
    inverse().noalias() -= c * scaled;
    row_pos_[kernel_rows_[position]] = -1;
    kernel_rows_[position] = leaving_row;
    row_pos_[leaving_row] = position;
  }

  void pivot(int entering, int direction, const Blocking& block) {
    const int leaving = block.variable;
    if (entering < n_ && leaving < n_) {
      replace_column(col_pos_[leaving], entering, direction);
    } else if (entering < n_) {
      grow(leaving - n_, entering, direction);
    } else if (leaving < n_) {
      shrink(row_pos_[entering - n_], col_pos_[leaving]);
    } else {
      replace_row(row_pos_[entering - n_], leaving - n_);
    }
    status_[entering] = VarStatus::kBasic;
    value_[leaving] = block.target;
    status_[leaving] = block.target == lower_[leaving] ? VarStatus::kAtLower
                                                       : VarStatus::kAtUpper;
    ++since_refactor_;
  }

  LpStatus iterate(LpSolution& out) {
    bool verified = false;
    int verifications = 0;
    int degenerate = 0;
    rejected_.assign(n_ + m_, false);
    bool any_rejected = false;
    const int refactor_period = std::max(100, std::min(n_, m_));
    for (;;) {
      if (pivots_ >= max_pivots_) return LpStatus::kIterationLimit;
      if (since_refactor_ >= refactor_period) {
        refactor_or_repair();
        recompute_values();
      }
      const bool phase_one = price_infeasibility();
      compute_duals(phase_one);
      const bool bland = pivots_ >= dantzig_pivots_ ||
                         degenerate >= limits_.degenerate_streak;
      int direction = 0;
      const int entering = choose_entering(phase_one, bland, &direction);
      if (entering < 0) {
        if (any_rejected) {
          std::fill(rejected_.begin(), rejected_.end(), false);
          any_rejected = false;
          refactor_or_repair();
          recompute_values();
          continue;
        }
        if (!verified) {
          verified = true;
          refactor_or_repair();
          recompute_values();
          // A fresh factorisation can expose violations just above tolerance
          // that the next pivot hides again through incremental updates.
          // Widen the pricing tolerance instead of cycling.
          if (!phase_one && ++verifications > 3) feasibility_tol_ = kLooseFeasibility;
          continue;
        }
        return phase_one ? LpStatus::kInfeasible : LpStatus::kOptimal;
      }
      compute_direction(entering, direction);
      const Blocking block = ratio_test(bland);
      const double range = upper_[entering] - lower_[entering];
      if (std::isfinite(range) && range <= block.step) {
        apply_step(entering, direction, range);
        status_[entering] = direction > 0 ? VarStatus::kAtUpper : VarStatus::kAtLower;
        value_[entering] = direction > 0 ? upper_[entering] : lower_[entering];
        if (limits_.record_pivots) out.pivot_log.emplace_back(entering, -1);
      } else if (block.variable < 0) {
        if (!phase_one) return LpStatus::kUnbounded;
        // Phase one cannot be unbounded; a vanishing rate means the candidate
        // is numerically unusable for now.
        rejected_[entering] = true;
        any_rejected = true;
        continue;
      } else {
        apply_step(entering, direction, block.step);
        pivot(entering, direction, block);
        if (limits_.record_pivots) out.pivot_log.emplace_back(entering, block.variable);
        degenerate = block.step < kDegenerateStep ? degenerate + 1 : 0;
      }
      ++pivots_;
      verified = false;
      if (any_rejected) {
        std::fill(rejected_.begin(), rejected_.end(), false);
        any_rejected = false;
      }
    }
  }

  void finish(LpSolution& out) {
    out.pivots = pivots_;
    out.primal.assign(value_.begin(), value_.begin() + n_);
    out.row_activity.assign(value_.begin() + n_, value_.end());
    out.basis.columns.assign(status_.begin(), status_.begin() + n_);
    out.basis.rows.assign(status_.begin() + n_, status_.end());
    out.objective = lp_.objective_offset;
    for (int j = 0; j < n_; ++j) out.objective += lp_.objective[j] * value_[j];
    out.duals.assign(m_, 0.0);
    out.reduced_costs.assign(n_, 0.0);
    if (out.status != LpStatus::kOptimal) return;
    compute_duals(false);
    out.duals = duals_;
    for (int j = 0; j < n_; ++j) {
      if (status_[j] != VarStatus::kBasic) out.reduced_costs[j] = reduced_cost(j, false);
    }
    const bool finite = std::all_of(out.primal.begin(), out.primal.end(), [](double v) { return std::isfinite(v); });
    const double residual = finite ? scaled_infeasibility(lp_, out.primal) : std::numeric_limits<double>::infinity();
    if (!(residual <= kResidualLimit)) {
      throw NumericalError("scaled feasibility residual " + std::to_string(residual) +
                           " after " + std::to_string(pivots_) + " pivots");
    }
  }

  const StandardLp& lp_;
  LpLimits limits_;
  int n_;
  int m_;
  Compressed by_col_;
  Compressed by_row_;
  double feasibility_tol_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  double cost_scale_ = 1.0;
  std::int64_t max_pivots_ = 0;
  std::int64_t dantzig_pivots_ = 0;

  std::vector<VarStatus> status_;
  std::vector<double> value_;
  std::vector<double> phase_cost_;
  std::vector<double> duals_;
  std::vector<bool> rejected_;

  std::vector<int> kernel_rows_;
  std::vector<int> kernel_cols_;
  std::vector<int> row_pos_;
  std::vector<int> col_pos_;
  Eigen::MatrixXd store_;
  Eigen::VectorXd column_step_;
  std::vector<double> row_step_;

  std::int64_t pivots_ = 0;
  int since_refactor_ = 0;
};

}  // namespace

namespace {

double power_of_two(double v) { return std::ldexp(1.0, static_cast<int>(std::lround(std::log2(v)))); }

// Geometric-mean equilibration with power-of-two factors, so scaling and
// unscaling are exact. a'_ij = row_i a_ij col_j, x' = x / col_j, and the
// objective is multiplied by `objective`.
struct Scaling {
  std::vector<double> row;
  std::vector<double> col;
  double objective = 1.0;
};

Scaling equilibrate(const StandardLp& lp) {
  Scaling sc;
  sc.row.assign(lp.num_rows(), 1.0);
  sc.col.assign(lp.num_cols(), 1.0);
  const auto& entries = lp.rows.entries();
  for (int pass = 0; pass < 4; ++pass) {
    std::vector<double> lo(lp.num_rows(), std::numeric_limits<double>::infinity());
    std::vector<double> hi(lp.num_rows(), 0.0);
    for (const Triplet& t : entries) {
      const double v = std::abs(t.value) * sc.col[t.col];
      lo[t.row] = std::min(lo[t.row], v);
      hi[t.row] = std::max(hi[t.row], v);
    }
    for (int i = 0; i < lp.num_rows(); ++i) {
      if (hi[i] > 0.0) sc.row[i] = power_of_two(1.0 / std::sqrt(lo[i] * hi[i]));
    }
    std::vector<double> clo(lp.num_cols(), std::numeric_limits<double>::infinity());
    std::vector<double> chi(lp.num_cols(), 0.0);
    for (const Triplet& t : entries) {
      const double v = std::abs(t.value) * sc.row[t.row];
      clo[t.col] = std::min(clo[t.col], v);
      chi[t.col] = std::max(chi[t.col], v);
    }
    for (int j = 0; j < lp.num_cols(); ++j) {
      if (chi[j] > 0.0) sc.col[j] = power_of_two(1.0 / std::sqrt(clo[j] * chi[j]));
    }
  }
  double cmax = 0.0;
  for (int j = 0; j < lp.num_cols(); ++j) cmax = std::max(cmax, std::abs(lp.objective[j]) * sc.col[j]);
  if (cmax > 0.0) sc.objective = power_of_two(1.0 / cmax);
  return sc;
}

// Largest reduced cost or row dual with an improving sign, on unscaled data.
double dual_infeasibility(const StandardLp& lp, const LpSolution& sol) {
  auto violation = [](VarStatus status, double d) {
    switch (status) {
      case VarStatus::kAtLower:
        return std::max(0.0, -d);
      case VarStatus::kAtUpper:
        return std::max(0.0, d);
      case VarStatus::kFree:
        return std::abs(d);
      case VarStatus::kBasic:
        break;
    }
    return 0.0;
  };
  double worst = 0.0;
  for (int j = 0; j < lp.num_cols(); ++j) {
    if (lp.upper[j] - lp.lower[j] <= 0.0) continue;
    worst = std::max(worst, violation(sol.basis.columns[j], sol.reduced_costs[j]));
  }
  for (int i = 0; i < lp.num_rows(); ++i) {
    if (lp.sense(i) == RowSense::kEqual) continue;
    worst = std::max(worst, violation(sol.basis.rows[i], sol.duals[i]));
  }
  return worst;
}

}  // namespace

LpSolution solve_lp(const StandardLp& lp, const LpLimits& limits,
                    const BasisState* warm_start) {
  lp.validate();
  const Scaling sc = equilibrate(lp);
  StandardLp scaled;
  scaled.objective.resize(lp.num_cols());
  scaled.lower.resize(lp.num_cols());
  scaled.upper.resize(lp.num_cols());
  for (int j = 0; j < lp.num_cols(); ++j) {
    scaled.objective[j] = lp.objective[j] * sc.col[j] * sc.objective;
    scaled.lower[j] = lp.lower[j] / sc.col[j];
    scaled.upper[j] = lp.upper[j] / sc.col[j];
  }
  std::vector<Triplet> entries = lp.rows.entries();
  for (Triplet& t : entries) t.value *= sc.row[t.row] * sc.col[t.col];
  scaled.rows = SparseMatrix(lp.num_rows(), lp.num_cols(), std::move(entries));
  scaled.rhs.resize(lp.num_rows());
  for (int i = 0; i < lp.num_rows(); ++i) scaled.rhs[i] = lp.rhs[i] * sc.row[i];
  scaled.senses = lp.senses;

  KernelSimplex simplex(scaled, limits);
  LpSolution out = simplex.solve(warm_start);
  for (int j = 0; j < lp.num_cols(); ++j) {
    out.primal[j] *= sc.col[j];
    out.reduced_costs[j] /= sc.col[j] * sc.objective;
  }
  for (int i = 0; i < lp.num_rows(); ++i) {
    out.row_activity[i] /= sc.row[i];
    out.duals[i] *= sc.row[i] / sc.objective;
  }
  out.objective = lp.objective_offset;
  for (int j = 0; j < lp.num_cols(); ++j) out.objective += lp.objective[j] * out.primal[j];

  // Strong column scaling can push a genuine improving direction below the
  // scaled tolerance. Finish such solves on the original data.
  if (out.status == LpStatus::kOptimal) {
    double cmax = 1.0;
    for (double c : lp.objective) cmax = std::max(cmax, std::abs(c));
    if (dual_infeasibility(lp, out) > limits.optimality_tolerance * cmax) {
      try {
        KernelSimplex polish(lp, limits);
        LpSolution refined = polish.solve(&out.basis);
        if (refined.status == LpStatus::kOptimal) {
          refined.pivots += out.pivots;
          if (limits.record_pivots) {
            out.pivot_log.insert(out.pivot_log.end(), refined.pivot_log.begin(), refined.pivot_log.end());
            refined.pivot_log = std::move(out.pivot_log);
          }
          return refined;
        }
      } catch (const NumericalError&) {
      }
    }
  }
  return out;
}

std::string debug_dump(const StandardLp& lp, const LpSolution& solution) {
  std::ostringstream os;
  os.precision(17);
  os << "status " << to_string(solution.status) << "\n";
  os << "objective " << solution.objective << "\n";
  os << "pivots " << solution.pivots << "\n";
  auto name = [](VarStatus s) {
    switch (s) {
      case VarStatus::kBasic:
        return "basic";
      case VarStatus::kAtLower:
        return "lower";
      case VarStatus::kAtUpper:
        return "upper";
      case VarStatus::kFree:
        return "free";
    }
    return "?";
  };
  for (int j = 0; j < lp.num_cols(); ++j) {
    os << "col " << j << " " << name(solution.basis.columns[j]) << " value "
       << solution.primal[j] << " reduced_cost " << solution.reduced_costs[j]
       << "\n";
  }
  for (int i = 0; i < lp.num_rows(); ++i) {
    os << "row " << i << " " << name(solution.basis.rows[i]) << " activity "
       << solution.row_activity[i] << " dual " << solution.duals[i] << "\n";
  }
  return os.str();
}

}  // namespace mhsp::lp
