#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mhsp/common/json_io.hpp"
#include "mhsp/model/instance.hpp"

namespace mhsp::scenario {

// kRhs parameters scale right-hand sides of the operational problems,
// kCostCoefficient parameters enter operational costs through C, and
// kMasterCost parameters enter strategic costs through the mixing matrix.
enum class ParameterRole { kRhs, kCostCoefficient, kMasterCost };

std::string to_string(ParameterRole role);
ParameterRole role_from_string(const std::string& text);

struct TrajectorySpec {
  std::string name;
  std::vector<double> expected;  // one value per stage
  ParameterRole role = ParameterRole::kRhs;
};

// Realised on entering `stage` (so stage >= 1).
struct Branching {
  int stage = 1;
  std::vector<double> multipliers;
  std::vector<double> probabilities;
};

struct BranchSpec {
  std::vector<Branching> branchings;
};

struct UncertainParameter {
  TrajectorySpec trajectory;
  BranchSpec branches;
};

struct LongTermNode {
  int id = 0;
  std::optional<int> parent;
  int stage = 0;
  double probability = 1.0;
  std::vector<double> values;  // aligned with LongTermTree::parameters

  friend bool operator==(const LongTermNode&, const LongTermNode&) = default;
};

struct LongTermTree {
  std::vector<std::string> parameters;
  std::vector<ParameterRole> roles;
  std::vector<double> expected_first;  // stage-0 trajectory values, for reference
  std::vector<LongTermNode> nodes;     // parents precede children
  int stages = 0;

  std::vector<int> children(int node) const;
  std::vector<int> leaves() const;
  int parameter_index(const std::string& name) const;
};

// Multipliers compound along paths; parameters branching at the same stage
// are combined by cross product (independence). Rejects probabilities that
// do not sum to one, and biased branchings unless `allow_bias`.
LongTermTree build_long_term_tree(const std::vector<UncertainParameter>& parameters, int stages,
                                  bool allow_bias = false);

// Probability-weighted mean of each parameter at `stage`.
std::vector<double> stage_means(const LongTermTree& tree, int stage);

struct LongTermConfig {
  int stages = 1;
  std::vector<int> stage_years;
  std::vector<UncertainParameter> parameters;
  bool allow_bias = false;
};

LongTermConfig long_term_config_from_json(const Json& value);
Json long_term_tree_to_json(const LongTermTree& tree);

// Strategic data shared by every node of a stage.
struct StrategicTemplate {
  std::vector<double> x_lower;
  std::vector<double> x_upper;
  std::vector<std::string> labels;
  // Strategic cost = base + mixing' (parameter values); mixing has one row
  // per tree parameter (or zero rows).
  model::NodeCost cost;
  // Rows may refer to the parent node (depth 1) except at stage 0.
  std::vector<model::MasterRow> rows;
};

// b[row] = base b[row] * value for each listed row.
struct RhsTarget {
  std::string parameter;
  std::vector<int> rows;
};

struct OperationalTemplate {
  // id, owner, stage, probability and coefficients are filled in on
  // combination. C has one row per tree parameter (or zero rows).
  model::OperationalSubproblem data;
  std::vector<RhsTarget> rhs_targets;
};

struct InstanceTemplate {
  std::vector<std::string> parameters;
  std::vector<StrategicTemplate> strategic;                 // per stage
  std::vector<std::vector<OperationalTemplate>> operational;  // [stage][short scenario]
  std::vector<double> short_probabilities;                  // per short scenario
  // Investments at stage t are taken before the stage-t realisation, so a
  // strategic node owns every long-term child's operations.
  bool investment_precedes_reveal = false;
  model::Metadata metadata;
};

// Cross product of the long-term tree with the short-term scenarios. Throws
// ValidationError on a role/template mismatch.
model::MhspInstance combine_trees(const LongTermTree& tree, const InstanceTemplate& tmpl);

}  // namespace mhsp::scenario
