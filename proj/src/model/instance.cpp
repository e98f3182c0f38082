#include "mhsp/model/instance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "mhsp/common/error.hpp"
#include "mhsp/common/json_io.hpp"
#include "mhsp/model/serialize.hpp"

namespace mhsp::model {

using lp::kInfinity;
using lp::RowSense;
using lp::SparseMatrix;
using lp::Triplet;

std::vector<double> OperationalSubproblem::effective_cost(
    const std::vector<double>& coeffs) const {
  std::vector<double> cost = c;
  if (C.rows() == 0) return cost;
  if (static_cast<int>(coeffs.size()) != C.rows()) {
    throw DimensionError("subproblem " + std::to_string(id) + ": " +
                         std::to_string(coeffs.size()) + " coefficients for a C with " +
                         std::to_string(C.rows()) + " rows");
  }
  for (const Triplet& t : C.entries()) cost[t.col] += t.value * coeffs[t.row];
  return cost;
}

int MhspInstance::num_stages() const {
  int stages = 0;
  for (const StrategicNode& n : nodes) stages = std::max(stages, n.stage + 1);
  return stages;
}

std::vector<int> MhspInstance::children(int node) const {
  std::vector<int> out;
  for (const StrategicNode& n : nodes) {
    if (n.parent && *n.parent == node) out.push_back(n.id);
  }
  return out;
}

std::vector<int> MhspInstance::leaves() const {
  std::vector<bool> has_child(nodes.size(), false);
  for (const StrategicNode& n : nodes) {
    if (n.parent) has_child[*n.parent] = true;
  }
  std::vector<int> out;
  for (const StrategicNode& n : nodes) {
    if (!has_child[n.id]) out.push_back(n.id);
  }
  return out;
}

std::vector<double> MhspInstance::node_cost(int node) const {
  const NodeCost& nc = master.costs.at(node);
  std::vector<double> cost = nc.base;
  for (const Triplet& t : nc.mixing.entries()) {
    cost[t.col] += t.value * nodes[node].coefficients[t.row];
  }
  return cost;
}

std::vector<double> MhspInstance::strategic_cost() const {
  std::vector<double> cost(num_x(), 0.0);
  for (const StrategicNode& n : nodes) {
    const std::vector<double> local = node_cost(n.id);
    for (int k = 0; k < n.x_range.size(); ++k) {
      cost[n.x_range.begin + k] = n.probability * local[k];
    }
  }
  return cost;
}

double MhspInstance::strategic_value(const std::vector<double>& x) const {
  const std::vector<double> cost = strategic_cost();
  double value = 0.0;
  for (int j = 0; j < num_x(); ++j) value += cost[j] * x[j];
  return value;
}

void MhspInstance::validate() const {
  if (nodes.empty()) throw ValidationError("instance has no strategic nodes");
  const int n_nodes = static_cast<int>(nodes.size());
  const int n = num_x();
  if (static_cast<int>(master.x_upper.size()) != n) {
    throw DimensionError("master bounds have different lengths");
  }
  if (static_cast<int>(master.costs.size()) != n_nodes) {
    throw DimensionError("master costs cover " + std::to_string(master.costs.size()) +
                         " nodes, instance has " + std::to_string(n_nodes));
  }
  std::vector<int> owner_of(n, -1);
  for (int k = 0; k < n_nodes; ++k) {
    const StrategicNode& node = nodes[k];
    const std::string where = "node " + std::to_string(k);
    if (node.id != k) throw ValidationError(where + " has id " + std::to_string(node.id));
    if (k == 0) {
      if (node.parent) throw ValidationError("node 0 must be the root");
      if (std::abs(node.probability - 1.0) > 1e-12) {
        throw ValidationError("root probability must be 1");
      }
    } else {
      if (!node.parent || *node.parent < 0 || *node.parent >= k) {
        throw ValidationError(where + " must have a parent with a smaller id");
      }
      if (node.stage != nodes[*node.parent].stage + 1) {
        throw ValidationError(where + " stage does not follow its parent");
      }
    }
    if (!(node.probability > 0.0) || node.probability > 1.0 + 1e-12) {
      throw ValidationError(where + " probability outside (0,1]");
    }
    if (node.x_range.begin < 0 || node.x_range.end > n || node.x_range.size() < 0) {
      throw DimensionError(where + " x range outside the strategic vector");
    }
    for (int j = node.x_range.begin; j < node.x_range.end; ++j) {
      if (owner_of[j] >= 0) throw ValidationError("x ranges of nodes overlap at " + std::to_string(j));
      owner_of[j] = k;
    }
    const NodeCost& cost = master.costs[k];
    if (static_cast<int>(cost.base.size()) != node.x_range.size()) {
      throw DimensionError(where + " cost length differs from its x range");
    }
    if (cost.mixing.rows() != 0 &&
        (cost.mixing.rows() != static_cast<int>(node.coefficients.size()) ||
         cost.mixing.cols() != node.x_range.size())) {
      throw DimensionError(where + " cost mixing matrix has the wrong shape");
    }
  }
  for (int j = 0; j < n; ++j) {
    if (owner_of[j] < 0) throw ValidationError("x entry " + std::to_string(j) + " has no node");
    if (!std::isfinite(master.x_lower[j]) || !std::isfinite(master.x_upper[j])) {
      throw ValidationError("strategic variable " + std::to_string(j) + " must be bounded");
    }
    if (master.x_lower[j] > master.x_upper[j]) {
      throw ValidationError("strategic variable " + std::to_string(j) + " has empty bounds");
    }
  }
  std::vector<double> child_mass(n_nodes, 0.0);
  std::vector<bool> has_child(n_nodes, false);
  for (const StrategicNode& node : nodes) {
    if (node.parent) {
      child_mass[*node.parent] += node.probability;
      has_child[*node.parent] = true;
    }
  }
  double leaf_mass = 0.0;
  for (int k = 0; k < n_nodes; ++k) {
    if (!has_child[k]) {
      leaf_mass += nodes[k].probability;
    } else if (std::abs(child_mass[k] - nodes[k].probability) > 1e-12) {
      throw ValidationError("children of node " + std::to_string(k) +
                            " do not carry its probability");
    }
  }
  if (std::abs(leaf_mass - 1.0) > 1e-12) {
    throw ValidationError("leaf probabilities sum to " + std::to_string(leaf_mass));
  }
  for (const MasterRow& row : master.rows) {
    if (row.owner < 0 || row.owner >= n_nodes) throw ValidationError("master row with unknown owner");
    for (const MasterTerm& term : row.terms) {
      int node = row.owner;
      if (term.depth == 1) {
        if (!nodes[node].parent) throw ValidationError("master row refers to the parent of the root");
        node = *nodes[node].parent;
      } else if (term.depth != 0) {
        throw ValidationError("master term depth must be 0 or 1");
      }
      if (term.local < 0 || term.local >= nodes[node].x_range.size()) {
        throw DimensionError("master term outside its node's x range");
      }
    }
  }
  for (int k = 0; k < static_cast<int>(subproblems.size()); ++k) {
    const OperationalSubproblem& sp = subproblems[k];
    const std::string where = "subproblem " + std::to_string(k);
    if (sp.id != k) throw ValidationError(where + " has id " + std::to_string(sp.id));
    if (sp.owner < 0 || sp.owner >= n_nodes) throw ValidationError(where + " has an unknown owner");
    const int m = sp.A.rows();
    const int q = sp.A.cols();
    const int nx = nodes[sp.owner].x_range.size();
    if (sp.B.rows() != m || sp.B.cols() != nx) {
      throw DimensionError(where + ": B is " + std::to_string(sp.B.rows()) + "x" +
                           std::to_string(sp.B.cols()) + ", expected " + std::to_string(m) +
                           "x" + std::to_string(nx));
    }
    if (sp.C.rows() != 0 &&
        (sp.C.cols() != q || sp.C.rows() != static_cast<int>(sp.coefficients.size()))) {
      throw DimensionError(where + ": C does not match the coefficients and columns");
    }
    if (static_cast<int>(sp.b.size()) != m || static_cast<int>(sp.c.size()) != q ||
        static_cast<int>(sp.y_lower.size()) != q || static_cast<int>(sp.y_upper.size()) != q ||
        (!sp.senses.empty() && static_cast<int>(sp.senses.size()) != m)) {
      throw DimensionError(where + ": vector lengths disagree with A");
    }
    if (!(sp.probability > 0.0) || sp.probability > 1.0 + 1e-12) {
      throw ValidationError(where + " probability outside (0,1]");
    }
  }
}

LinearProgramView build_deterministic_equivalent(const MhspInstance& instance) {
  instance.validate();
  const int n = instance.num_x();
  LinearProgramView view;
  int cols = n;
  for (const OperationalSubproblem& sp : instance.subproblems) {
    view.y_offset.push_back(cols);
    cols += sp.num_cols();
  }
  lp::StandardLp& lp = view.lp;
  lp.objective = instance.strategic_cost();
  lp.objective.resize(cols, 0.0);
  lp.lower = instance.master.x_lower;
  lp.upper = instance.master.x_upper;
  lp.lower.resize(cols);
  lp.upper.resize(cols);
  view.origins.resize(cols);
  for (const StrategicNode& node : instance.nodes) {
    for (int k = 0; k < node.x_range.size(); ++k) {
      view.origins[node.x_range.begin + k] = {VariableOrigin::Kind::kStrategic, node.id, k};
    }
  }

  std::vector<Triplet> entries;
  const lp::StandardLp master = master_lp(instance);
  entries = master.rows.entries();
  lp.rhs = master.rhs;
  lp.senses = master.senses;
  int row = master.num_rows();

  for (const OperationalSubproblem& sp : instance.subproblems) {
    const int off = view.y_offset[sp.id];
    const int x_begin = instance.nodes[sp.owner].x_range.begin;
    const std::vector<double> cost = sp.effective_cost(sp.coefficients);
    for (int j = 0; j < sp.num_cols(); ++j) {
      lp.objective[off + j] = sp.probability * cost[j];
      lp.lower[off + j] = sp.y_lower[j];
      lp.upper[off + j] = sp.y_upper[j];
      view.origins[off + j] = {VariableOrigin::Kind::kOperational, sp.id, j};
    }
    for (const Triplet& t : sp.A.entries()) entries.push_back({row + t.row, off + t.col, t.value});
    for (const Triplet& t : sp.B.entries()) entries.push_back({row + t.row, x_begin + t.col, -t.value});
    for (int i = 0; i < sp.num_rows(); ++i) {
      lp.rhs.push_back(sp.b[i]);
      lp.senses.push_back(sp.sense(i));
    }
    row += sp.num_rows();
  }
  lp.rows = SparseMatrix(row, cols, std::move(entries));
  return view;
}

lp::StandardLp master_lp(const MhspInstance& instance) {
  lp::StandardLp lp;
  const int n = instance.num_x();
  lp.objective = instance.strategic_cost();
  lp.lower = instance.master.x_lower;
  lp.upper = instance.master.x_upper;
  std::vector<Triplet> entries;
  int row = 0;
  for (const MasterRow& mr : instance.master.rows) {
    for (const MasterTerm& term : mr.terms) {
      const int node = term.depth == 0 ? mr.owner : *instance.nodes[mr.owner].parent;
      entries.push_back({row, instance.nodes[node].x_range.begin + term.local, term.coefficient});
    }
    lp.rhs.push_back(mr.rhs);
    lp.senses.push_back(mr.sense);
    ++row;
  }
  lp.rows = SparseMatrix(row, n, std::move(entries));
  return lp;
}

namespace {

// Weighted mean that reproduces a common value exactly.
double mean_of(const std::vector<double>& values, const std::vector<double>& weights) {
  bool same = true;
  for (double v : values) same = same && v == values.front();
  if (same) return values.front();
  double total = 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    sum += weights[k] * values[k];
    total += weights[k];
  }
  return sum / total;
}

std::vector<double> mean_vectors(const std::vector<const std::vector<double>*>& vectors,
                                 const std::vector<double>& weights, const std::string& what) {
  const std::size_t len = vectors.front()->size();
  std::vector<double> out(len);
  std::vector<double> column(vectors.size());
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t k = 0; k < vectors.size(); ++k) {
      if (vectors[k]->size() != len) throw ValidationError("cannot average " + what + ": lengths differ");
      column[k] = (*vectors[k])[i];
    }
    out[i] = mean_of(column, weights);
  }
  return out;
}

SparseMatrix mean_matrices(const std::vector<const SparseMatrix*>& matrices,
                           const std::vector<double>& weights, const std::string& what) {
  const SparseMatrix& first = *matrices.front();
  std::map<std::pair<int, int>, std::vector<double>> cells;
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    if (matrices[k]->rows() != first.rows() || matrices[k]->cols() != first.cols()) {
      throw ValidationError("cannot average " + what + ": shapes differ");
    }
    for (const Triplet& t : matrices[k]->entries()) {
      auto& slot = cells[{t.row, t.col}];
      slot.resize(matrices.size(), 0.0);
      slot[k] = t.value;
    }
  }
  std::vector<Triplet> entries;
  for (const auto& [key, values] : cells) {
    entries.push_back({key.first, key.second, mean_of(values, weights)});
  }
  return SparseMatrix(first.rows(), first.cols(), std::move(entries));
}

OperationalSubproblem merge_subproblems(const MhspInstance& instance, const std::vector<int>& group,
                                        double probability_scale) {
  const OperationalSubproblem& first = instance.subproblems[group.front()];
  OperationalSubproblem out = first;
  out.short_scenario = 0;
  double mass = 0.0;
  for (int k : group) mass += instance.subproblems[k].probability;
  out.probability = mass / probability_scale;
  if (group.size() == 1) return out;

  std::vector<double> weights;
  std::vector<const SparseMatrix*> as, bs, cs;
  std::vector<const std::vector<double>*> b, c, lo, hi, coeffs;
  for (int k : group) {
    const OperationalSubproblem& sp = instance.subproblems[k];
    if (sp.senses != first.senses) throw ValidationError("cannot average subproblems with different row senses");
    weights.push_back(sp.probability);
    as.push_back(&sp.A);
    bs.push_back(&sp.B);
    cs.push_back(&sp.C);
    b.push_back(&sp.b);
    c.push_back(&sp.c);
    lo.push_back(&sp.y_lower);
    hi.push_back(&sp.y_upper);
    coeffs.push_back(&sp.coefficients);
  }
  out.A = mean_matrices(as, weights, "A");
  out.B = mean_matrices(bs, weights, "B");
  out.C = mean_matrices(cs, weights, "C");
  out.b = mean_vectors(b, weights, "b");
  out.c = mean_vectors(c, weights, "c");
  out.y_lower = mean_vectors(lo, weights, "y bounds");
  out.y_upper = mean_vectors(hi, weights, "y bounds");
  out.coefficients = mean_vectors(coeffs, weights, "coefficients");
  return out;
}

MhspInstance collapse_operational(const MhspInstance& instance) {
  MhspInstance out = instance;
  out.subproblems.clear();
  std::map<std::pair<int, int>, std::vector<int>> groups;
  std::vector<std::pair<int, int>> order;
  for (const OperationalSubproblem& sp : instance.subproblems) {
    const std::pair<int, int> key{sp.owner, sp.operational_node};
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(sp.id);
  }
  for (const auto& key : order) {
    OperationalSubproblem merged = merge_subproblems(instance, groups[key], 1.0);
    merged.id = static_cast<int>(out.subproblems.size());
    out.subproblems.push_back(std::move(merged));
  }
  return out;
}

std::vector<int> subtree_of(const MhspInstance& instance, int root) {
  std::vector<bool> inside(instance.nodes.size(), false);
  inside[root] = true;
  std::vector<int> out{root};
  for (const StrategicNode& node : instance.nodes) {
    if (node.id != root && node.parent && inside[*node.parent]) {
      inside[node.id] = true;
      out.push_back(node.id);
    }
  }
  return out;
}

}  // namespace

MhspInstance conditional_expected_instance(const MhspInstance& instance, int node,
                                           const std::vector<double>& x_fixed) {
  instance.validate();
  if (node < 0 || node >= static_cast<int>(instance.nodes.size())) {
    throw ValidationError("unknown node id " + std::to_string(node));
  }
  std::vector<int> path;
  for (std::optional<int> p = instance.nodes[node].parent; p; p = instance.nodes[*p].parent) {
    path.push_back(*p);
  }
  std::reverse(path.begin(), path.end());
  if (!path.empty() && static_cast<int>(x_fixed.size()) != instance.num_x()) {
    throw DimensionError("fixed strategic vector has " + std::to_string(x_fixed.size()) +
                         " entries, expected " + std::to_string(instance.num_x()));
  }

  const std::vector<int> subtree = subtree_of(instance, node);
  const int last_stage = instance.num_stages() - 1;
  const double base_mass = instance.nodes[node].probability;
  std::vector<bool> is_leaf(instance.nodes.size(), true);
  for (const StrategicNode& n : instance.nodes) {
    if (n.parent) is_leaf[*n.parent] = false;
  }
  std::vector<std::vector<int>> by_stage(last_stage + 1);
  for (int k : subtree) {
    if (is_leaf[k] && instance.nodes[k].stage != last_stage) {
      throw ValidationError("expected-value collapse needs every leaf at the last stage");
    }
    by_stage[instance.nodes[k].stage].push_back(k);
  }

  // Groups of original nodes forming each new node, in stage order.
  std::vector<std::vector<int>> groups;
  for (int p : path) groups.push_back({p});
  for (int s = instance.nodes[node].stage; s <= last_stage; ++s) groups.push_back(by_stage[s]);

  MhspInstance out;
  out.metadata = instance.metadata;
  std::vector<int> new_id(instance.nodes.size(), -1);
  int x_cursor = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const std::vector<int>& group = groups[g];
    const StrategicNode& first = instance.nodes[group.front()];
    const bool fixed = g < path.size();
    std::vector<double> weights;
    for (int k : group) weights.push_back(instance.nodes[k].probability);

    StrategicNode merged;
    merged.id = static_cast<int>(g);
    if (g > 0) merged.parent = static_cast<int>(g) - 1;
    merged.stage = first.stage;
    merged.probability = 1.0;
    const int width = first.x_range.size();
    merged.x_range = {x_cursor, x_cursor + width};
    x_cursor += width;

    std::vector<const std::vector<double>*> coeffs, lo, hi, base;
    std::vector<const SparseMatrix*> mixing;
    std::vector<std::vector<double>> lo_store, hi_store;
    for (int k : group) {
      const StrategicNode& n = instance.nodes[k];
      if (n.x_range.size() != width) throw ValidationError("nodes of one stage differ in size");
      coeffs.push_back(&n.coefficients);
      lo_store.emplace_back(instance.master.x_lower.begin() + n.x_range.begin,
                            instance.master.x_lower.begin() + n.x_range.end);
      hi_store.emplace_back(instance.master.x_upper.begin() + n.x_range.begin,
                            instance.master.x_upper.begin() + n.x_range.end);
      base.push_back(&instance.master.costs[k].base);
      mixing.push_back(&instance.master.costs[k].mixing);
    }
    for (std::size_t k = 0; k < group.size(); ++k) {
      lo.push_back(&lo_store[k]);
      hi.push_back(&hi_store[k]);
    }
    merged.coefficients = mean_vectors(coeffs, weights, "node coefficients");
    for (const auto& [name, value] : first.parameters) {
      std::vector<double> values;
      for (int k : group) values.push_back(instance.nodes[k].parameters.at(name));
      merged.parameters[name] = mean_of(values, weights);
    }
    std::vector<double> x_lo = mean_vectors(lo, weights, "x bounds");
    std::vector<double> x_hi = mean_vectors(hi, weights, "x bounds");
    if (fixed) {
      for (int j = 0; j < width; ++j) {
        x_lo[j] = x_hi[j] = x_fixed[first.x_range.begin + j];
      }
    }
    out.master.x_lower.insert(out.master.x_lower.end(), x_lo.begin(), x_lo.end());
    out.master.x_upper.insert(out.master.x_upper.end(), x_hi.begin(), x_hi.end());
    NodeCost cost;
    cost.base = mean_vectors(base, weights, "node costs");
    cost.mixing = mean_matrices(mixing, weights, "cost mixing");
    out.master.costs.push_back(std::move(cost));

    // Master rows are matched by their position among each node's rows.
    std::vector<std::vector<const MasterRow*>> rows(group.size());
    for (const MasterRow& row : instance.master.rows) {
      for (std::size_t k = 0; k < group.size(); ++k) {
        if (row.owner == group[k]) rows[k].push_back(&row);
      }
    }
    for (std::size_t r = 0; r < rows.front().size(); ++r) {
      MasterRow mr = *rows.front()[r];
      mr.owner = merged.id;
      std::vector<double> rhs;
      for (std::size_t k = 0; k < group.size(); ++k) {
        if (rows[k].size() != rows.front().size()) throw ValidationError("nodes of one stage differ in master rows");
        const MasterRow& other = *rows[k][r];
        if (other.sense != mr.sense || other.terms.size() != mr.terms.size()) {
          throw ValidationError("nodes of one stage differ in master rows");
        }
        rhs.push_back(other.rhs);
      }
      mr.rhs = mean_of(rhs, weights);
      for (std::size_t t = 0; t < mr.terms.size(); ++t) {
        std::vector<double> coef;
        for (std::size_t k = 0; k < group.size(); ++k) {
          const MasterTerm& term = rows[k][r]->terms[t];
          if (term.depth != mr.terms[t].depth || term.local != mr.terms[t].local) {
            throw ValidationError("nodes of one stage differ in master rows");
          }
          coef.push_back(term.coefficient);
        }
        mr.terms[t].coefficient = mean_of(coef, weights);
      }
      out.master.rows.push_back(std::move(mr));
    }
    for (int k : group) new_id[k] = merged.id;
    out.nodes.push_back(std::move(merged));
  }

  // Subproblems: ancestors keep theirs, the subtree is merged per
  // (stage, short-term scenario).
  for (int p : path) {
    for (const OperationalSubproblem& sp : instance.subproblems) {
      if (sp.owner != p) continue;
      OperationalSubproblem copy = sp;
      copy.id = static_cast<int>(out.subproblems.size());
      copy.owner = new_id[p];
      copy.operational_node = copy.owner;
      copy.probability = sp.probability / instance.nodes[p].probability;
      out.subproblems.push_back(std::move(copy));
    }
  }
  std::vector<bool> in_subtree(instance.nodes.size(), false);
  for (int k : subtree) in_subtree[k] = true;
  std::map<std::pair<int, int>, std::vector<int>> merged_groups;
  for (const OperationalSubproblem& sp : instance.subproblems) {
    if (in_subtree[sp.owner]) merged_groups[{sp.stage, sp.short_scenario}].push_back(sp.id);
  }
  for (const auto& [key, group] : merged_groups) {
    OperationalSubproblem merged = merge_subproblems(instance, group, base_mass);
    merged.short_scenario = key.second;
    merged.id = static_cast<int>(out.subproblems.size());
    merged.owner = new_id[instance.subproblems[group.front()].owner];
    merged.operational_node = merged.owner;
    out.subproblems.push_back(std::move(merged));
  }
  out.validate();
  return out;
}

MhspInstance expected_value_instance(const MhspInstance& instance, Scope scope) {
  instance.validate();
  MhspInstance out = instance;
  if (scope == Scope::kStrategic || scope == Scope::kBoth) {
    out = conditional_expected_instance(out, 0, {});
  }
  if (scope == Scope::kOperational || scope == Scope::kBoth) {
    out = collapse_operational(out);
  }
  return out;
}

MhspInstance fix_strategic(const MhspInstance& instance, const std::vector<double>& x_fixed,
                           int up_to_stage) {
  instance.validate();
  if (static_cast<int>(x_fixed.size()) != instance.num_x()) {
    throw DimensionError("fixed strategic vector has " + std::to_string(x_fixed.size()) +
                         " entries, expected " + std::to_string(instance.num_x()));
  }
  if (up_to_stage >= instance.num_stages()) {
    throw ValidationError("cannot fix beyond the last stage");
  }
  MhspInstance out = instance;
  std::vector<bool> fixed(instance.num_x(), false);
  for (const StrategicNode& node : instance.nodes) {
    if (node.stage > up_to_stage) continue;
    for (int j = node.x_range.begin; j < node.x_range.end; ++j) {
      double v = x_fixed[j];
      const double lo = instance.master.x_lower[j];
      const double hi = instance.master.x_upper[j];
      const double tol = 1e-7 * (1.0 + std::abs(v));
      if (!std::isfinite(v) || v < lo - tol || v > hi + tol) {
        throw InfeasibleFixError("value " + std::to_string(v) + " for strategic variable " +
                                 std::to_string(j) + " lies outside [" + std::to_string(lo) +
                                 ", " + std::to_string(hi) + "]");
      }
      v = std::clamp(v, lo, hi);
      out.master.x_lower[j] = out.master.x_upper[j] = v;
      fixed[j] = true;
    }
  }
  const lp::StandardLp master = master_lp(out);
  std::vector<double> activity(master.num_rows(), 0.0);
  std::vector<bool> complete(master.num_rows(), true);
  for (const Triplet& t : master.rows.entries()) {
    if (!fixed[t.col]) complete[t.row] = false;
    activity[t.row] += t.value * out.master.x_lower[t.col];
  }
  for (int i = 0; i < master.num_rows(); ++i) {
    if (!complete[i]) continue;
    const double slack = master.rhs[i] - activity[i];
    const double tol = 1e-6 * (1.0 + std::abs(master.rhs[i]));
    const bool bad = (master.sense(i) == RowSense::kLessEqual && slack < -tol) ||
                     (master.sense(i) == RowSense::kGreaterEqual && slack > tol) ||
                     (master.sense(i) == RowSense::kEqual && std::abs(slack) > tol);
    if (bad) {
      throw InfeasibleFixError("fixed values violate master row " + std::to_string(i) +
                               " by " + std::to_string(std::abs(slack)));
    }
  }
  return out;
}

std::vector<double> extract_subvector(const MhspInstance& instance, int node,
                                      const std::vector<double>& x) {
  if (node < 0 || node >= static_cast<int>(instance.nodes.size())) {
    throw ValidationError("unknown node id " + std::to_string(node));
  }
  if (static_cast<int>(x.size()) != instance.num_x()) {
    throw DimensionError("strategic vector has " + std::to_string(x.size()) +
                         " entries, expected " + std::to_string(instance.num_x()));
  }
  const IndexRange r = instance.nodes[node].x_range;
  return std::vector<double>(x.begin() + r.begin, x.begin() + r.end);
}

std::vector<double> lift_by_stage(const MhspInstance& source, const std::vector<double>& x_source,
                                  const MhspInstance& target) {
  if (static_cast<int>(x_source.size()) != source.num_x()) {
    throw DimensionError("source solution does not match the source instance");
  }
  bool same_layout = source.nodes.size() == target.nodes.size();
  for (std::size_t k = 0; same_layout && k < source.nodes.size(); ++k) {
    same_layout = source.nodes[k].x_range == target.nodes[k].x_range &&
                  source.nodes[k].stage == target.nodes[k].stage;
  }
  if (same_layout) return x_source;
  std::vector<int> by_stage(source.num_stages(), -1);
  for (const StrategicNode& node : source.nodes) {
    if (by_stage[node.stage] >= 0) {
      throw ValidationError("lifting needs a source with one node per stage");
    }
    by_stage[node.stage] = node.id;
  }
  std::vector<double> x(target.num_x(), 0.0);
  for (const StrategicNode& node : target.nodes) {
    if (node.stage >= static_cast<int>(by_stage.size()) || by_stage[node.stage] < 0) {
      throw ValidationError("source has no node at stage " + std::to_string(node.stage));
    }
    const IndexRange from = source.nodes[by_stage[node.stage]].x_range;
    if (from.size() != node.x_range.size()) throw DimensionError("stage layouts differ");
    std::copy(x_source.begin() + from.begin, x_source.begin() + from.end,
              x.begin() + node.x_range.begin);
  }
  return x;
}

namespace {

Json senses_to_json(const std::vector<RowSense>& senses) {
  Json out = Json::array();
  for (RowSense s : senses) out.push_back(sense_to_string(s));
  return out;
}

std::vector<RowSense> senses_from_json(const Json& value) {
  std::vector<RowSense> out;
  for (const Json& s : value) out.push_back(sense_from_string(s.get<std::string>()));
  return out;
}

}  // namespace

Json subproblem_to_json(const OperationalSubproblem& sp) {
  return Json{{"id", sp.id},
              {"owner", sp.owner},
              {"stage", sp.stage},
              {"operational_node", sp.operational_node},
              {"short_scenario", sp.short_scenario},
              {"probability", sp.probability},
              {"A", matrix_to_json(sp.A)},
              {"B", matrix_to_json(sp.B)},
              {"C", matrix_to_json(sp.C)},
              {"b", numbers_to_json(sp.b)},
              {"c", numbers_to_json(sp.c)},
              {"y_lower", numbers_to_json(sp.y_lower)},
              {"y_upper", numbers_to_json(sp.y_upper)},
              {"senses", senses_to_json(sp.senses)},
              {"coefficients", numbers_to_json(sp.coefficients)}};
}

OperationalSubproblem subproblem_from_json(const Json& s) {
  OperationalSubproblem sp;
  try {
    sp.id = require(s, "id").get<int>();
    sp.owner = require(s, "owner").get<int>();
    sp.stage = s.value("stage", 0);
    sp.operational_node = s.value("operational_node", 0);
    sp.short_scenario = s.value("short_scenario", 0);
    sp.probability = require(s, "probability").get<double>();
    sp.A = matrix_from_json(require(s, "A"));
    sp.B = matrix_from_json(require(s, "B"));
    sp.C = matrix_from_json(require(s, "C"));
    sp.b = numbers_from_json(require(s, "b"));
    sp.c = numbers_from_json(require(s, "c"));
    sp.y_lower = numbers_from_json(require(s, "y_lower"));
    sp.y_upper = numbers_from_json(require(s, "y_upper"));
    sp.senses = senses_from_json(s.value("senses", Json::array()));
    sp.coefficients = numbers_from_json(require(s, "coefficients"));
  } catch (const Json::exception& e) {
    throw ParseError(std::string("subproblem: ") + e.what());
  }
  return sp;
}

std::string to_json(const MhspInstance& instance) {
  Json nodes = Json::array();
  for (const StrategicNode& n : instance.nodes) {
    Json node{{"id", n.id},
              {"parent", n.parent ? Json(*n.parent) : Json(nullptr)},
              {"stage", n.stage},
              {"probability", n.probability},
              {"coefficients", numbers_to_json(n.coefficients)},
              {"parameters", Json::object()},
              {"x_range", Json::array({n.x_range.begin, n.x_range.end})}};
    for (const auto& [name, value] : n.parameters) node["parameters"][name] = number_to_json(value);
    nodes.push_back(std::move(node));
  }
  Json subproblems = Json::array();
  for (const OperationalSubproblem& sp : instance.subproblems) subproblems.push_back(subproblem_to_json(sp));
  Json costs = Json::array();
  for (const NodeCost& c : instance.master.costs) {
    costs.push_back(Json{{"base", numbers_to_json(c.base)}, {"mixing", matrix_to_json(c.mixing)}});
  }
  Json rows = Json::array();
  for (const MasterRow& r : instance.master.rows) {
    Json terms = Json::array();
    for (const MasterTerm& t : r.terms) terms.push_back(Json::array({t.depth, t.local, t.coefficient}));
    rows.push_back(Json{{"owner", r.owner},
                        {"terms", terms},
                        {"sense", sense_to_string(r.sense)},
                        {"rhs", number_to_json(r.rhs)}});
  }
  Json doc{{"format", "mhsp-instance"},
           {"version", 1},
           {"metadata",
            {{"name", instance.metadata.name},
             {"stage_years", instance.metadata.stage_years},
             {"stage_labels", instance.metadata.stage_labels}}},
           {"nodes", nodes},
           {"subproblems", subproblems},
           {"master",
            {{"x_lower", numbers_to_json(instance.master.x_lower)},
             {"x_upper", numbers_to_json(instance.master.x_upper)},
             {"costs", costs},
             {"rows", rows}}}};
  return doc.dump(1);
}

MhspInstance instance_from_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("instance: ") + e.what());
  }
  if (doc.value("format", "") != "mhsp-instance") throw ParseError("not an mhsp-instance document");
  MhspInstance inst;
  try {
    const Json& meta = require(doc, "metadata");
    inst.metadata.name = meta.value("name", "");
    inst.metadata.stage_years = meta.value("stage_years", std::vector<int>{});
    inst.metadata.stage_labels = meta.value("stage_labels", std::vector<std::vector<std::string>>{});
    for (const Json& n : require(doc, "nodes")) {
      StrategicNode node;
      node.id = require(n, "id").get<int>();
      if (!require(n, "parent").is_null()) node.parent = n["parent"].get<int>();
      node.stage = require(n, "stage").get<int>();
      node.probability = require(n, "probability").get<double>();
      node.coefficients = numbers_from_json(require(n, "coefficients"));
      const Json params = n.value("parameters", Json::object());
      for (const auto& [name, value] : params.items()) {
        node.parameters[name] = number_from_json(value);
      }
      const Json& range = require(n, "x_range");
      node.x_range = {range.at(0).get<int>(), range.at(1).get<int>()};
      inst.nodes.push_back(std::move(node));
    }
    for (const Json& s : require(doc, "subproblems")) inst.subproblems.push_back(subproblem_from_json(s));
    const Json& master = require(doc, "master");
    inst.master.x_lower = numbers_from_json(require(master, "x_lower"));
    inst.master.x_upper = numbers_from_json(require(master, "x_upper"));
    for (const Json& c : require(master, "costs")) {
      inst.master.costs.push_back({numbers_from_json(require(c, "base")), matrix_from_json(require(c, "mixing"))});
    }
    for (const Json& r : require(master, "rows")) {
      MasterRow row;
      row.owner = require(r, "owner").get<int>();
      for (const Json& t : require(r, "terms")) {
        row.terms.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<double>()});
      }
      row.sense = sense_from_string(require(r, "sense").get<std::string>());
      row.rhs = number_from_json(require(r, "rhs"));
      inst.master.rows.push_back(std::move(row));
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("instance: ") + e.what());
  }
  inst.validate();
  return inst;
}

void write_instance(const MhspInstance& instance, const std::string& path) {
  write_text_file(path, to_json(instance));
}

MhspInstance read_instance(const std::string& path) {
  return instance_from_json(read_text_file(path));
}

}  // namespace mhsp::model
