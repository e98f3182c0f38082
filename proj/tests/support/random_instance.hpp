#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mhsp/model/instance.hpp"

namespace toy {

struct RandomShape {
  int stages = 2;
  int branching = 2;
  int short_scenarios = 2;
  int technologies = 3;
  int periods = 4;
};

// Capacity-expansion flavoured random instance: per node, capacities carried
// to children, per subproblem a dispatch over `periods` with load shedding
// (complete recourse) and a fuel-price coefficient.
inline mhsp::model::MhspInstance random_instance(std::uint64_t seed, const RandomShape& shape) {
  using namespace mhsp;
  using lp::RowSense;
  using lp::SparseMatrix;
  using lp::Triplet;
  std::mt19937_64 rng(seed);
  auto uni = [&](double a, double b) { return a + (b - a) * std::generate_canonical<double, 53>(rng); };

  const int n_tech = shape.technologies;
  model::MhspInstance inst;
  inst.metadata.name = "random-" + std::to_string(seed);

  // Tree, breadth first.
  std::vector<int> frontier{0};
  model::StrategicNode root;
  root.x_range = {0, n_tech};
  inst.nodes.push_back(root);
  for (int s = 1; s < shape.stages; ++s) {
    std::vector<int> next;
    for (int parent : frontier) {
      std::vector<double> w(shape.branching);
      double total = 0.0;
      for (double& v : w) total += (v = uni(0.5, 1.5));
      for (int k = 0; k < shape.branching; ++k) {
        model::StrategicNode n;
        n.id = static_cast<int>(inst.nodes.size());
        n.parent = parent;
        n.stage = s;
        n.probability = inst.nodes[parent].probability * w[k] / total;
        n.x_range = {n.id * n_tech, (n.id + 1) * n_tech};
        inst.nodes.push_back(n);
        next.push_back(n.id);
      }
    }
    frontier = next;
  }

  const double cap_hi = 3.0;
  std::vector<double> base_cost(n_tech), fuel(n_tech);
  for (int g = 0; g < n_tech; ++g) {
    base_cost[g] = uni(0.2, 1.0);
    fuel[g] = uni(0.1, 2.0);
  }
  for (const auto& node : inst.nodes) {
    model::NodeCost cost;
    // Investment-style cost: a node-specific cost multiplier as coefficient.
    for (int g = 0; g < n_tech; ++g) cost.base.push_back(base_cost[g] * uni(0.8, 1.2));
    inst.master.costs.push_back(cost);
    for (int g = 0; g < n_tech; ++g) {
      inst.master.x_lower.push_back(0.0);
      inst.master.x_upper.push_back(cap_hi);
      if (node.parent) {
        // Capacity never shrinks along a path.
        inst.master.rows.push_back({node.id, {{0, g, 1.0}, {1, g, -1.0}}, RowSense::kGreaterEqual, 0.0});
      }
    }
    inst.master.rows.push_back({node.id, {}, RowSense::kLessEqual, cap_hi * n_tech * 0.7});
    for (int g = 0; g < n_tech; ++g) inst.master.rows.back().terms.push_back({0, g, 1.0});
  }

  // Dispatch subproblems: y[t][g], shed[t].
  const int T = shape.periods;
  const int ny = T * (n_tech + 1);
  for (const auto& node : inst.nodes) {
    for (int k = 0; k < shape.short_scenarios; ++k) {
      model::OperationalSubproblem sp;
      sp.id = static_cast<int>(inst.subproblems.size());
      sp.owner = node.id;
      sp.stage = node.stage;
      sp.operational_node = node.id;
      sp.short_scenario = k;
      sp.probability = node.probability / shape.short_scenarios;
      std::vector<Triplet> a, b, c;
      int row = 0;
      for (int t = 0; t < T; ++t) {
        for (int g = 0; g < n_tech; ++g) {
          a.push_back({row, t * (n_tech + 1) + g, 1.0});
          b.push_back({row, g, uni(0.3, 1.0)});
          sp.b.push_back(0.0);
          sp.senses.push_back(RowSense::kLessEqual);
          ++row;
        }
        for (int g = 0; g <= n_tech; ++g) a.push_back({row, t * (n_tech + 1) + g, 1.0});
        sp.b.push_back(uni(0.5, 2.5) * (1.0 + 0.2 * node.stage));
        sp.senses.push_back(RowSense::kGreaterEqual);
        ++row;
      }
      sp.A = SparseMatrix(row, ny, a);
      sp.B = SparseMatrix(row, n_tech, b);
      sp.c.assign(ny, 0.0);
      for (int t = 0; t < T; ++t) {
        sp.c[t * (n_tech + 1) + n_tech] = 10.0 / T;
        for (int g = 0; g < n_tech; ++g) c.push_back({0, t * (n_tech + 1) + g, fuel[g] / T});
      }
      sp.C = SparseMatrix(1, ny, c);
      sp.coefficients = {uni(0.7, 1.3)};
      sp.y_lower.assign(ny, 0.0);
      sp.y_upper.assign(ny, lp::kInfinity);
      inst.subproblems.push_back(sp);
    }
  }
  inst.validate();
  return inst;
}

// A corpus spread over the allowed shapes.
inline std::vector<RandomShape> corpus_shapes() {
  std::vector<RandomShape> shapes;
  for (int stages = 1; stages <= 3; ++stages) {
    for (int branching : {2, 3}) {
      if (stages == 3 && branching == 3) continue;  // 9 leaves
      for (int scen : {1, 2, 4}) {
        shapes.push_back({stages, branching, scen, 2 + (stages + scen) % 3, 3 + (branching * scen) % 6});
      }
    }
  }
  return shapes;
}

}  // namespace toy
