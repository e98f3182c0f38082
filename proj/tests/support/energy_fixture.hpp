#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mhsp/energy/energy.hpp"
#include "mhsp/lp/solver.hpp"
#include "mhsp/model/instance.hpp"

namespace toy {

using mhsp::energy::EnergyConfig;
using mhsp::energy::SeriesLayout;
using mhsp::energy::Technology;
using mhsp::scenario::ScenarioBlock;
using mhsp::scenario::ShortTermScenario;

// Series kinds load, wind, solar; regions listed by name.
inline SeriesLayout series_layout(std::vector<std::string> regions, int hours_per_year = 8760) {
  return {{"load", "wind", "solar"}, std::move(regions), hours_per_year};
}

// One block of `hours` with load and wind given per hour; solar is zero.
inline ScenarioBlock block(int regions, int hours, const std::function<double(int, int)>& load,
                           const std::function<double(int, int)>& wind = [](int, int) { return 0.0; }) {
  ScenarioBlock b;
  b.length = hours;
  b.values.assign(3, std::vector<std::vector<double>>(regions, std::vector<double>(hours, 0.0)));
  for (int n = 0; n < regions; ++n) {
    for (int h = 0; h < hours; ++h) {
      b.values[0][n][h] = load(n, h);
      b.values[1][n][h] = wind(n, h);
    }
  }
  return b;
}

inline ShortTermScenario scenario_of(std::vector<ScenarioBlock> blocks, double probability = 1.0) {
  ShortTermScenario s;
  s.probability = probability;
  s.blocks = std::move(blocks);
  return s;
}

inline Technology thermal(const std::string& name, double capex, double fuel, double emission,
                          const std::string& group = "fossil") {
  Technology t;
  t.name = name;
  t.group = group;
  t.capex = {capex};
  t.fuel_cost = fuel;
  t.emission = emission;
  return t;
}

inline EnergyConfig single_region(std::vector<Technology> techs) {
  EnergyConfig c;
  c.name = "fixture";
  c.stages = 1;
  c.regions = {{"north", "north", 1.0}};
  c.technologies = std::move(techs);
  return c;
}

// Largest |A y - B x - b| over balance rows, and the largest emission-row
// excess, over every subproblem of a solved instance.
struct EnergyChecks {
  double balance_residual = 0.0;
  double emission_excess = 0.0;
};

inline EnergyChecks check_solution(const mhsp::model::MhspInstance& inst, const mhsp::energy::SubproblemLayout& layout,
                                   const std::vector<double>& x, const std::vector<std::vector<double>>& ys) {
  EnergyChecks out;
  for (std::size_t s = 0; s < inst.subproblems.size(); ++s) {
    const auto& sp = inst.subproblems[s];
    const std::vector<double> xo = mhsp::model::extract_subvector(inst, sp.owner, x);
    std::vector<double> lhs = sp.A.multiply(ys[s]);
    const std::vector<double> bx = sp.B.multiply(xo);
    for (int r = 0; r < sp.num_rows(); ++r) lhs[r] -= bx[r];
    for (int r : layout.balance_rows) out.balance_residual = std::max(out.balance_residual, std::abs(lhs[r] - sp.b[r]));
    if (layout.emission_row >= 0) {
      out.emission_excess = std::max(out.emission_excess, lhs[layout.emission_row] - sp.b[layout.emission_row]);
    }
  }
  return out;
}

struct DeSolution {
  double objective = 0.0;
  std::vector<double> x;
  std::vector<std::vector<double>> ys;
};

inline DeSolution solve_extensive(const mhsp::model::MhspInstance& inst) {
  const auto view = mhsp::model::build_deterministic_equivalent(inst);
  const auto sol = mhsp::lp::default_solver().solve(view.lp, nullptr);
  if (sol.status != mhsp::lp::LpStatus::kOptimal) throw std::runtime_error("extensive form not optimal");
  DeSolution out;
  out.objective = sol.objective;
  out.x.assign(sol.primal.begin(), sol.primal.begin() + inst.num_x());
  for (std::size_t s = 0; s < inst.subproblems.size(); ++s) {
    const auto begin = sol.primal.begin() + view.y_offset[s];
    out.ys.emplace_back(begin, begin + inst.subproblems[s].num_cols());
  }
  return out;
}

}  // namespace toy
