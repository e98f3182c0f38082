#pragma once

#include <algorithm>
#include <vector>

#include "mhsp/model/instance.hpp"

namespace toy {

using mhsp::lp::SparseMatrix;
using mhsp::model::MhspInstance;
using mhsp::model::NodeCost;
using mhsp::model::OperationalSubproblem;
using mhsp::model::StrategicNode;

// min y  s.t.  y >= d - x,  y >= 0, written as  -y <= -d + x.
inline OperationalSubproblem sp0(double d, double probability = 1.0, int owner = 0) {
  OperationalSubproblem sp;
  sp.owner = owner;
  sp.probability = probability;
  sp.A = SparseMatrix(1, 1, {{0, 0, -1.0}});
  sp.B = SparseMatrix(1, 1, {{0, 0, 1.0}});
  sp.C = SparseMatrix(0, 1);
  sp.b = {-d};
  sp.c = {1.0};
  sp.y_lower = {0.0};
  sp.y_upper = {mhsp::lp::kInfinity};
  return sp;
}

// One strategic node with a single x in [lo, hi] costing `cost` per unit.
inline MhspInstance single_node(std::vector<OperationalSubproblem> subs, double lo = 0.0,
                                double hi = 1.0, double cost = 1.0) {
  MhspInstance inst;
  StrategicNode root;
  root.x_range = {0, 1};
  inst.nodes.push_back(root);
  inst.master.x_lower = {lo};
  inst.master.x_upper = {hi};
  inst.master.costs.push_back({{cost}, SparseMatrix()});
  for (std::size_t k = 0; k < subs.size(); ++k) {
    subs[k].id = static_cast<int>(k);
    subs[k].operational_node = 0;
    subs[k].short_scenario = static_cast<int>(k);
    inst.subproblems.push_back(subs[k]);
  }
  return inst;
}

// Closed-form value of sum_k p_k max(0, d_k - x) + x for the SP0 family.
inline double sp0_value(double x, const std::vector<double>& d, const std::vector<double>& p,
                        double cost = 1.0) {
  double v = cost * x;
  for (std::size_t k = 0; k < d.size(); ++k) v += p[k] * std::max(0.0, d[k] - x);
  return v;
}

}  // namespace toy
