#include "mhsp/scenario/long_term.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mhsp/common/error.hpp"

namespace mhsp::scenario {

using lp::SparseMatrix;
using lp::Triplet;

std::string to_string(ParameterRole role) {
  switch (role) {
    case ParameterRole::kRhs: return "rhs";
    case ParameterRole::kCostCoefficient: return "cost";
    case ParameterRole::kMasterCost: return "master_cost";
  }
  return "rhs";
}

ParameterRole role_from_string(const std::string& text) {
  if (text == "rhs") return ParameterRole::kRhs;
  if (text == "cost") return ParameterRole::kCostCoefficient;
  if (text == "master_cost") return ParameterRole::kMasterCost;
  throw ConfigError("unknown parameter role '" + text + "' (expected rhs, cost or master_cost)");
}

std::vector<int> LongTermTree::children(int node) const {
  std::vector<int> out;
  for (const LongTermNode& n : nodes) {
    if (n.parent && *n.parent == node) out.push_back(n.id);
  }
  return out;
}

std::vector<int> LongTermTree::leaves() const {
  std::vector<int> out;
  for (const LongTermNode& n : nodes) {
    if (n.stage == stages - 1) out.push_back(n.id);
  }
  return out;
}

int LongTermTree::parameter_index(const std::string& name) const {
  const auto it = std::find(parameters.begin(), parameters.end(), name);
  if (it == parameters.end()) throw ValidationError("unknown long-term parameter '" + name + "'");
  return static_cast<int>(it - parameters.begin());
}

LongTermTree build_long_term_tree(const std::vector<UncertainParameter>& parameters, int stages, bool allow_bias) {
  if (stages < 1) throw ValidationError("a long-term tree needs at least one stage");
  const int P = static_cast<int>(parameters.size());
  // branch[stage][p] -> branching of parameter p entering that stage, if any.
  std::vector<std::vector<const Branching*>> branch(stages, std::vector<const Branching*>(P, nullptr));
  LongTermTree tree;
  tree.stages = stages;
  for (int p = 0; p < P; ++p) {
    const UncertainParameter& up = parameters[p];
    const std::string& name = up.trajectory.name;
    if (std::find(tree.parameters.begin(), tree.parameters.end(), name) != tree.parameters.end()) {
      throw ValidationError("parameter '" + name + "' listed twice");
    }
    tree.parameters.push_back(name);
    tree.roles.push_back(up.trajectory.role);
    if (static_cast<int>(up.trajectory.expected.size()) != stages) {
      throw ValidationError("parameter '" + name + "' has " + std::to_string(up.trajectory.expected.size()) +
                            " expected values for " + std::to_string(stages) + " stages");
    }
    tree.expected_first.push_back(up.trajectory.expected[0]);
    for (const Branching& b : up.branches.branchings) {
      const std::string where = "parameter '" + name + "' at stage " + std::to_string(b.stage);
      if (b.stage < 1 || b.stage >= stages) throw ValidationError(where + ": branching stage out of range");
      if (branch[b.stage][p]) throw ValidationError(where + ": branches twice");
      if (b.multipliers.empty() || b.multipliers.size() != b.probabilities.size()) {
        throw ValidationError(where + ": multipliers and probabilities differ in length");
      }
      double total = 0.0;
      double mean = 0.0;
      for (std::size_t k = 0; k < b.multipliers.size(); ++k) {
        if (!(b.probabilities[k] > 0.0)) throw ValidationError(where + ": probabilities must be positive");
        if (!(b.multipliers[k] > 0.0)) throw ValidationError(where + ": multipliers must be positive");
        total += b.probabilities[k];
        mean += b.probabilities[k] * b.multipliers[k];
      }
      if (std::abs(total - 1.0) > 1e-12) throw ValidationError(where + ": probabilities sum to " + std::to_string(total));
      if (std::abs(mean - 1.0) > 1e-12 && !allow_bias) {
        throw ValidationError(where + ": expected multiplier is " + std::to_string(mean) +
                              ", not 1 (the tree would be biased)");
      }
      branch[b.stage][p] = &b;
    }
  }

  // Multiplier products along each path, kept separately from the values so
  // that values are computed as expected * product in a single multiply.
  std::vector<std::vector<double>> product;
  LongTermNode root;
  for (int p = 0; p < P; ++p) root.values.push_back(parameters[p].trajectory.expected[0]);
  tree.nodes.push_back(root);
  product.emplace_back(P, 1.0);
  std::vector<int> frontier{0};
  for (int s = 1; s < stages; ++s) {
    // Cross product of this stage's branchings, in parameter order.
    std::vector<std::vector<int>> combos{{}};
    for (int p = 0; p < P; ++p) {
      const int count = branch[s][p] ? static_cast<int>(branch[s][p]->multipliers.size()) : 1;
      std::vector<std::vector<int>> next;
      for (const auto& c : combos) {
        for (int k = 0; k < count; ++k) {
          next.push_back(c);
          next.back().push_back(k);
        }
      }
      combos = std::move(next);
    }
    std::vector<int> next_frontier;
    for (int parent : frontier) {
      for (const auto& combo : combos) {
        LongTermNode n;
        n.id = static_cast<int>(tree.nodes.size());
        n.parent = parent;
        n.stage = s;
        n.probability = tree.nodes[parent].probability;
        std::vector<double> prod = product[parent];
        for (int p = 0; p < P; ++p) {
          if (const Branching* b = branch[s][p]) {
            n.probability *= b->probabilities[combo[p]];
            prod[p] *= b->multipliers[combo[p]];
          }
          n.values.push_back(parameters[p].trajectory.expected[s] * prod[p]);
        }
        tree.nodes.push_back(n);
        product.push_back(prod);
        next_frontier.push_back(n.id);
      }
    }
    frontier = std::move(next_frontier);
  }
  return tree;
}

std::vector<double> stage_means(const LongTermTree& tree, int stage) {
  std::vector<double> mean(tree.parameters.size(), 0.0);
  for (const LongTermNode& n : tree.nodes) {
    if (n.stage != stage) continue;
    for (std::size_t p = 0; p < mean.size(); ++p) mean[p] += n.probability * n.values[p];
  }
  return mean;
}

LongTermConfig long_term_config_from_json(const Json& value) {
  LongTermConfig cfg;
  try {
    cfg.stages = require(value, "stages").get<int>();
    cfg.stage_years = value.value("stage_years", std::vector<int>{});
    cfg.allow_bias = value.value("allow_bias", false);
    for (const Json& p : value.value("parameters", Json::array())) {
      UncertainParameter up;
      up.trajectory.name = require(p, "name").get<std::string>();
      up.trajectory.role = role_from_string(p.value("role", "rhs"));
      up.trajectory.expected = require(p, "expected").get<std::vector<double>>();
      for (const Json& b : p.value("branchings", Json::array())) {
        up.branches.branchings.push_back({require(b, "stage").get<int>(),
                                          require(b, "multipliers").get<std::vector<double>>(),
                                          require(b, "probabilities").get<std::vector<double>>()});
      }
      cfg.parameters.push_back(std::move(up));
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("long-term config: ") + e.what());
  }
  if (!cfg.stage_years.empty() && static_cast<int>(cfg.stage_years.size()) != cfg.stages) {
    throw ConfigError("stage_years must list one year per stage");
  }
  return cfg;
}

Json long_term_tree_to_json(const LongTermTree& tree) {
  Json roles = Json::array();
  for (ParameterRole r : tree.roles) roles.push_back(to_string(r));
  Json nodes = Json::array();
  for (const LongTermNode& n : tree.nodes) {
    nodes.push_back({{"id", n.id},
                     {"parent", n.parent ? Json(*n.parent) : Json()},
                     {"stage", n.stage},
                     {"probability", n.probability},
                     {"values", n.values}});
  }
  return {{"format", "mhsp-long-term-tree"}, {"version", 1},     {"parameters", tree.parameters},
          {"roles", roles},                  {"stages", tree.stages}, {"nodes", nodes}};
}

namespace {

void check_template(const LongTermTree& tree, const InstanceTemplate& tmpl) {
  if (tmpl.parameters != tree.parameters) throw ValidationError("template parameters differ from the tree parameters");
  const int P = static_cast<int>(tree.parameters.size());
  if (static_cast<int>(tmpl.strategic.size()) != tree.stages || static_cast<int>(tmpl.operational.size()) != tree.stages) {
    throw ValidationError("template must provide strategic and operational data for each of " +
                          std::to_string(tree.stages) + " stages");
  }
  double total = 0.0;
  for (double p : tmpl.short_probabilities) total += p;
  if (tmpl.short_probabilities.empty() || std::abs(total - 1.0) > 1e-12) {
    throw ValidationError("short-term scenario probabilities must sum to one");
  }
  for (int s = 0; s < tree.stages; ++s) {
    const StrategicTemplate& st = tmpl.strategic[s];
    const std::string where = "stage " + std::to_string(s);
    if (st.cost.mixing.rows() != 0) {
      if (st.cost.mixing.rows() != P) throw ValidationError(where + ": mixing needs one row per parameter");
      for (const Triplet& t : st.cost.mixing.entries()) {
        if (tree.roles[t.row] != ParameterRole::kMasterCost) {
          throw ValidationError(where + ": parameter '" + tree.parameters[t.row] +
                                "' is not a strategic cost but appears in the strategic cost mixing");
        }
      }
    }
    if (s == 0) {
      for (const model::MasterRow& r : st.rows) {
        for (const model::MasterTerm& t : r.terms) {
          if (t.depth != 0) throw ValidationError("stage 0 rows cannot refer to a parent");
        }
      }
    }
    if (tmpl.operational[s].size() != tmpl.short_probabilities.size()) {
      throw ValidationError(where + ": one operational template per short-term scenario required");
    }
    for (const OperationalTemplate& ot : tmpl.operational[s]) {
      if (ot.data.C.rows() != 0) {
        if (ot.data.C.rows() != P) throw ValidationError(where + ": C needs one row per parameter");
        for (const Triplet& t : ot.data.C.entries()) {
          if (tree.roles[t.row] != ParameterRole::kCostCoefficient) {
            throw ValidationError(where + ": parameter '" + tree.parameters[t.row] +
                                  "' is not an operational cost but appears in C");
          }
        }
      }
      for (const RhsTarget& target : ot.rhs_targets) {
        const int p = tree.parameter_index(target.parameter);
        if (tree.roles[p] != ParameterRole::kRhs) {
          throw ValidationError(where + ": parameter '" + target.parameter + "' is not a right-hand side");
        }
        for (int row : target.rows) {
          if (row < 0 || row >= ot.data.num_rows()) throw ValidationError(where + ": rhs target row out of range");
        }
      }
    }
  }
}

model::OperationalSubproblem realise(const OperationalTemplate& ot, const LongTermTree& tree, const LongTermNode& node) {
  model::OperationalSubproblem sp = ot.data;
  for (const RhsTarget& target : ot.rhs_targets) {
    const double v = node.values[tree.parameter_index(target.parameter)];
    for (int row : target.rows) sp.b[row] = ot.data.b[row] * v;
  }
  sp.coefficients = sp.C.rows() ? node.values : std::vector<double>{};
  return sp;
}

}  // namespace

model::MhspInstance combine_trees(const LongTermTree& tree, const InstanceTemplate& tmpl) {
  check_template(tree, tmpl);
  model::MhspInstance inst;
  inst.metadata = tmpl.metadata;
  if (inst.metadata.stage_labels.empty()) {
    for (const StrategicTemplate& st : tmpl.strategic) inst.metadata.stage_labels.push_back(st.labels);
  }

  // Strategic node: stage, parent, probability, parameter values, and the
  // long-term nodes whose operations it owns.
  struct Plan {
    int stage;
    std::optional<int> parent;
    double probability;
    std::vector<double> values;
    std::vector<int> operations;
  };
  std::vector<Plan> plan;
  if (!tmpl.investment_precedes_reveal) {
    for (const LongTermNode& n : tree.nodes) plan.push_back({n.stage, n.parent, n.probability, n.values, {n.id}});
  } else {
    // Node for (stage t, information node u at stage t-1); the root has u = -1.
    std::map<int, int> by_info;  // long-term info node -> strategic node of the next stage
    plan.push_back({0, std::nullopt, 1.0, tree.nodes[0].values, {0}});
    by_info[-1] = 0;
    for (const LongTermNode& u : tree.nodes) {
      if (u.stage + 1 >= tree.stages) continue;
      const int parent = by_info.at(u.parent ? *u.parent : -1);
      Plan p{u.stage + 1, parent, u.probability, std::vector<double>(tree.parameters.size(), 0.0), tree.children(u.id)};
      // Strategic costs use the conditional expectation over the reveal.
      for (int c : p.operations) {
        for (std::size_t k = 0; k < p.values.size(); ++k) {
          p.values[k] += tree.nodes[c].probability / u.probability * tree.nodes[c].values[k];
        }
      }
      by_info[u.id] = static_cast<int>(plan.size());
      plan.push_back(std::move(p));
    }
  }

  int x_next = 0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const Plan& p = plan[i];
    const StrategicTemplate& st = tmpl.strategic[p.stage];
    model::StrategicNode node;
    node.id = static_cast<int>(i);
    node.parent = p.parent;
    node.stage = p.stage;
    node.probability = p.probability;
    node.coefficients = p.values;
    for (std::size_t k = 0; k < tree.parameters.size(); ++k) node.parameters[tree.parameters[k]] = p.values[k];
    const int n_x = static_cast<int>(st.x_lower.size());
    node.x_range = {x_next, x_next + n_x};
    x_next += n_x;
    inst.nodes.push_back(node);
    inst.master.x_lower.insert(inst.master.x_lower.end(), st.x_lower.begin(), st.x_lower.end());
    inst.master.x_upper.insert(inst.master.x_upper.end(), st.x_upper.begin(), st.x_upper.end());
    inst.master.costs.push_back(st.cost);
    for (model::MasterRow row : st.rows) {
      row.owner = node.id;
      inst.master.rows.push_back(std::move(row));
    }
    for (int op : p.operations) {
      const LongTermNode& lt = tree.nodes[op];
      for (std::size_t w = 0; w < tmpl.short_probabilities.size(); ++w) {
        model::OperationalSubproblem sp = realise(tmpl.operational[lt.stage][w], tree, lt);
        sp.id = static_cast<int>(inst.subproblems.size());
        sp.owner = node.id;
        sp.stage = node.stage;
        sp.operational_node = op;
        sp.short_scenario = static_cast<int>(w);
        sp.probability = lt.probability * tmpl.short_probabilities[w];
        inst.subproblems.push_back(std::move(sp));
      }
    }
  }
  inst.validate();
  return inst;
}

}  // namespace mhsp::scenario
