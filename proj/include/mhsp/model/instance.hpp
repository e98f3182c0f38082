#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mhsp/lp/simplex.hpp"
#include "mhsp/lp/sparse_matrix.hpp"

namespace mhsp::model {

struct IndexRange {
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct StrategicNode {
  int id = 0;
  std::optional<int> parent;
  int stage = 0;
  // Absolute (root-relative) probability.
  double probability = 1.0;
  // Uncertain coefficients c_i realised at this node.
  std::vector<double> coefficients;
  // Realised parameter values by name, kept for audit output only.
  std::map<std::string, double> parameters;
  IndexRange x_range;

  friend bool operator==(const StrategicNode&, const StrategicNode&) = default;
};

// min (coefficients' C + c') y  s.t.  A y (senses) b + B x_owner,
//                                      y_lower <= y <= y_upper.
struct OperationalSubproblem {
  int id = 0;
  int owner = 0;
  int stage = 0;
  // Groups subproblems that belong to the same operational situation across
  // short-term scenarios (the long-term node whose data they carry).
  int operational_node = 0;
  int short_scenario = 0;
  // Absolute probability used as the weight of this block's cost.
  double probability = 1.0;
  lp::SparseMatrix A;
  lp::SparseMatrix B;
  lp::SparseMatrix C;
  std::vector<double> b;
  std::vector<double> c;
  std::vector<double> y_lower;
  std::vector<double> y_upper;
  std::vector<lp::RowSense> senses;  // empty means all <=
  std::vector<double> coefficients;

  int num_rows() const { return A.rows(); }
  int num_cols() const { return A.cols(); }
  lp::RowSense sense(int row) const {
    return senses.empty() ? lp::RowSense::kLessEqual : senses[row];
  }
  // Objective vector C' coefficients + c.
  std::vector<double> effective_cost(const std::vector<double>& coeffs) const;

  friend bool operator==(const OperationalSubproblem&, const OperationalSubproblem&) = default;
};

// A master term refers to the owner node (depth 0) or its parent (depth 1).
struct MasterTerm {
  int depth = 0;
  int local = 0;
  double coefficient = 0.0;

  friend bool operator==(const MasterTerm&, const MasterTerm&) = default;
};

struct MasterRow {
  int owner = 0;
  std::vector<MasterTerm> terms;
  lp::RowSense sense = lp::RowSense::kLessEqual;
  double rhs = 0.0;

  friend bool operator==(const MasterRow&, const MasterRow&) = default;
};

// Per-node strategic cost: cost_i = base + mixing' c_i, where mixing is
// |c_i| x |x_i|. f(x) = sum_i pi_i cost_i' x_i.
struct NodeCost {
  std::vector<double> base;
  lp::SparseMatrix mixing;

  friend bool operator==(const NodeCost&, const NodeCost&) = default;
};

struct MasterPolytope {
  std::vector<double> x_lower;
  std::vector<double> x_upper;
  // Indexed by node id.
  std::vector<NodeCost> costs;
  std::vector<MasterRow> rows;

  friend bool operator==(const MasterPolytope&, const MasterPolytope&) = default;
};

struct Metadata {
  std::string name;
  std::vector<int> stage_years;
  // Labels of the strategic variables of each stage's node, in local order.
  std::vector<std::vector<std::string>> stage_labels;

  friend bool operator==(const Metadata&, const Metadata&) = default;
};

// Node ids equal their position in `nodes`, subproblem ids their position in
// `subproblems`; parents precede children.
struct MhspInstance {
  std::vector<StrategicNode> nodes;
  std::vector<OperationalSubproblem> subproblems;
  MasterPolytope master;
  Metadata metadata;

  int num_x() const { return static_cast<int>(master.x_lower.size()); }
  int num_stages() const;
  std::vector<int> children(int node) const;
  std::vector<int> leaves() const;
  // Strategic cost vector over the whole x, probability-weighted.
  std::vector<double> strategic_cost() const;
  double strategic_value(const std::vector<double>& x) const;
  std::vector<double> node_cost(int node) const;

  // Throws DimensionError / ValidationError when an invariant fails.
  void validate() const;

  friend bool operator==(const MhspInstance&, const MhspInstance&) = default;
};

enum class Scope { kStrategic, kOperational, kBoth };

struct VariableOrigin {
  enum class Kind { kStrategic, kOperational } kind = Kind::kStrategic;
  int owner = 0;  // node id or subproblem id
  int local = 0;

  friend bool operator==(const VariableOrigin&, const VariableOrigin&) = default;
};

struct LinearProgramView {
  lp::StandardLp lp;
  std::vector<VariableOrigin> origins;
  // Offset of each subproblem's y block within the LP columns.
  std::vector<int> y_offset;
};

LinearProgramView build_deterministic_equivalent(const MhspInstance& instance);

// Builds the master-only LP over x with rows translated to global indices.
lp::StandardLp master_lp(const MhspInstance& instance);

MhspInstance expected_value_instance(const MhspInstance& instance, Scope scope);

// Single-path instance for a decision taken at `node`: ancestors of `node`
// are kept with their x fixed to `x_fixed`, the subtree of `node` is
// collapsed stage by stage to its conditional expectation.
MhspInstance conditional_expected_instance(const MhspInstance& instance, int node,
                                           const std::vector<double>& x_fixed);

MhspInstance fix_strategic(const MhspInstance& instance,
                           const std::vector<double>& x_fixed, int up_to_stage);

std::vector<double> extract_subvector(const MhspInstance& instance, int node,
                                      const std::vector<double>& x);

// Maps a solution of a single-path instance onto every node of `target` with
// the same stage. Identical layouts are copied through.
std::vector<double> lift_by_stage(const MhspInstance& source,
                                  const std::vector<double>& x_source,
                                  const MhspInstance& target);

std::string to_json(const MhspInstance& instance);
MhspInstance instance_from_json(const std::string& text);
void write_instance(const MhspInstance& instance, const std::string& path);
MhspInstance read_instance(const std::string& path);

}  // namespace mhsp::model
