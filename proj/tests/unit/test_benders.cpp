#include <cmath>
#include <random>

#include "../support/toy.hpp"
#include "doctest.h"
#include "mhsp/benders/engine.hpp"
#include "mhsp/common/error.hpp"
#include "mhsp/model/evaluate.hpp"

using namespace mhsp;
using namespace mhsp::benders;

namespace {

double de_objective(const model::MhspInstance& inst) {
  const auto view = model::build_deterministic_equivalent(inst);
  const auto sol = lp::solve_lp(view.lp);
  REQUIRE(sol.status == lp::LpStatus::kOptimal);
  return sol.objective;
}

BendersResult run(const model::MhspInstance& inst, bool stabilise) {
  runtime::LocalEvaluator ev(inst, 1);
  BendersConfig cfg;
  cfg.stabilise = stabilise;
  return run_benders(inst, cfg, ev);
}

}  // namespace

TEST_CASE("relaxed master without cuts sits at the cheapest point") {
  const auto inst = toy::single_node({toy::sp0(1.0)});
  const CutPool pool(1, 0.0);
  const RmpSolution r = solve_rmp(inst, pool);
  CHECK(r.x[0] == doctest::Approx(0.0));
  CHECK(r.objective == doctest::Approx(0.0));
}

TEST_CASE("relaxed master with one cut has lower bound two") {
  const auto inst = toy::single_node({toy::sp0(2.0)});
  CutPool pool(1, 0.0);
  pool.add({0, {0.0}, 2.0, {-1.0}, 1});  // beta >= 2 - x
  const RmpSolution a = solve_rmp(inst, pool);
  const RmpSolution b = solve_rmp(inst, pool);
  CHECK(a.objective == doctest::Approx(2.0));
  CHECK(a.x == b.x);
  CHECK(a.x[0] + a.beta[0] == doctest::Approx(2.0));
}

TEST_CASE("relaxed master weights the beta variables by probability") {
  auto inst = toy::single_node({toy::sp0(1.0, 0.5), toy::sp0(3.0, 0.5)}, 0.0, 1.0, 0.0);
  CutPool pool(2, 0.0);
  pool.add({0, {0.0}, 1.0, {0.0}, 1});
  pool.add({1, {0.0}, 3.0, {0.0}, 1});
  CHECK(solve_rmp(inst, pool).objective == doctest::Approx(2.0));
}

TEST_CASE("level lies between the bounds") {
  CHECK(compute_level(10, 20, 0.3) == doctest::Approx(13.0));
  CHECK(compute_level(5, 5, 0.5) == 5.0);
  CHECK(compute_level(10, 20, 0.999999) == doctest::Approx(20.0).epsilon(1e-5));
}

TEST_CASE("centre point of an interval is its midpoint") {
  const auto inst = toy::single_node({}, 0.0, 10.0, 0.0);
  const CentrePoint cp = solve_centre_point(inst, CutPool(0, 0.0), 1.0, {0.0});
  CHECK_FALSE(cp.fallback);
  CHECK(cp.x[0] == doctest::Approx(5.0));
}

TEST_CASE("centre point respects the level row") {
  const auto inst = toy::single_node({}, 0.0, 10.0, 1.0);
  const CentrePoint cp = solve_centre_point(inst, CutPool(0, 0.0), 4.0, {0.0});
  CHECK(cp.x[0] == doctest::Approx(2.0));
  CHECK(cp.sigma == doctest::Approx(2.0));
}

TEST_CASE("centre point of a singleton level set") {
  const auto inst = toy::single_node({}, 0.0, 10.0, 1.0);
  const CentrePoint cp = solve_centre_point(inst, CutPool(0, 0.0), 0.0, {0.0});
  CHECK(cp.x[0] == doctest::Approx(0.0));
  CHECK(cp.sigma == doctest::Approx(0.0));
}

TEST_CASE("upper bound update and tie rule") {
  CHECK(update_bounds(1e9, 5.0).upper == 5.0);
  CHECK(update_bounds(1e9, 5.0).improved);
  CHECK(update_bounds(5.0, 6.0).upper == 5.0);
  CHECK_FALSE(update_bounds(5.0, 5.0 - 1e-13).improved);
}

TEST_CASE("cut pool keeps canonical order") {
  CutPool pool(2, 0.0);
  pool.add({1, {0.0}, 1.0, {0.0}, 1});
  pool.add({0, {0.0}, 2.0, {0.0}, 2});
  pool.add({0, {0.0}, 3.0, {0.0}, 1});
  const auto all = pool.canonical();
  REQUIRE(all.size() == 3);
  CHECK(all[0].theta == 3.0);
  CHECK(all[1].theta == 2.0);
  CHECK(all[2].subproblem == 1);
  CHECK_THROWS_AS(pool.add({5, {}, 0.0, {}, 1}), ValidationError);
}

TEST_CASE("single-node demand family matches the extensive form") {
  const std::vector<double> d{0.2, 0.7, 1.4, 0.9};
  const std::vector<double> p{0.1, 0.4, 0.3, 0.2};
  std::vector<model::OperationalSubproblem> subs;
  for (std::size_t k = 0; k < d.size(); ++k) subs.push_back(toy::sp0(d[k], p[k]));
  const auto inst = toy::single_node(subs, 0.0, 2.0, 0.45);
  const double oracle = de_objective(inst);
  double grid = 1e300;
  for (int k = 0; k <= 2000; ++k) grid = std::min(grid, toy::sp0_value(k * 0.001, d, p, 0.45));
  CHECK(oracle == doctest::Approx(grid).epsilon(1e-9));
  for (bool stab : {false, true}) {
    const BendersResult r = run(inst, stab);
    CHECK(r.converged);
    CHECK(r.objective == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(toy::sp0_value(r.x[0], d, p, 0.45) == doctest::Approx(r.objective).epsilon(1e-9));
    for (std::size_t k = 0; k < r.log.size(); ++k) {
      CHECK(r.log[k].lower <= oracle + 1e-9);
      CHECK(r.log[k].upper >= oracle - 1e-9);
      if (k > 0) {
        CHECK(r.log[k].lower >= r.log[k - 1].lower - 1e-9);
        CHECK(r.log[k].upper <= r.log[k - 1].upper);
      }
      if (!stab) CHECK(r.log[k].x_eva == r.log[k].x_rmp);
    }
  }
}

TEST_CASE("subproblems without variables converge in one iteration") {
  model::OperationalSubproblem empty;
  empty.A = lp::SparseMatrix(0, 0);
  empty.B = lp::SparseMatrix(0, 1);
  empty.C = lp::SparseMatrix(0, 0);
  const auto inst = toy::single_node({empty}, 1.0, 3.0, 2.0);
  const BendersResult r = run(inst, true);
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.objective == doctest::Approx(2.0));
  CHECK(r.lower == doctest::Approx(2.0));
}

TEST_CASE("cuts are valid subgradient inequalities") {
  std::vector<model::OperationalSubproblem> subs;
  for (int k = 0; k < 3; ++k) subs.push_back(toy::sp0(0.5 * (k + 1), 1.0 / 3));
  const auto inst = toy::single_node(subs, 0.0, 2.0, 0.3);
  const BendersResult r = run(inst, true);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (const Cut& cut : r.pool.canonical()) {
    for (int t = 0; t < 20; ++t) {
      const double z = u(rng);
      const double g = model::evaluate_subproblem(inst.subproblems[cut.subproblem], {z}, {}).theta;
      CHECK(g >= cut.value_at({z}) - 1e-8);
    }
  }
}

TEST_CASE("iteration limit returns a non-converged result") {
  std::vector<model::OperationalSubproblem> subs;
  for (int k = 0; k < 6; ++k) subs.push_back(toy::sp0(0.15 * (k + 1), 1.0 / 6));
  const auto inst = toy::single_node(subs, 0.0, 2.0, 0.1);
  runtime::LocalEvaluator ev(inst, 1);
  BendersConfig cfg;
  cfg.max_iterations = 1;
  const BendersResult r = run_benders(inst, cfg, ev);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.lower <= r.objective);
}

TEST_CASE("configuration is validated") {
  const auto inst = toy::single_node({toy::sp0(1.0)});
  runtime::LocalEvaluator ev(inst, 1);
  BendersConfig cfg;
  cfg.gamma = 1.0;
  CHECK_THROWS_AS(run_benders(inst, cfg, ev), ConfigError);
}

TEST_CASE("empty strategic set is a configuration error") {
  auto inst = toy::single_node({toy::sp0(1.0)});
  inst.master.rows.push_back({0, {{0, 0, 1.0}}, lp::RowSense::kGreaterEqual, 5.0});
  CHECK_THROWS_AS(solve_rmp(inst, CutPool(1, 0.0)), ConfigError);
}

TEST_CASE("iteration log is one JSON object per line") {
  const auto inst = toy::single_node({toy::sp0(0.5)});
  const BendersResult r = run(inst, true);
  const std::string text = iteration_log_jsonl(r.log);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(r.log.size()));
  CHECK(text.find("\"L\"") != std::string::npos);
}
