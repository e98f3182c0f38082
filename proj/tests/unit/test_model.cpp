#include <cmath>
#include <filesystem>

#include "../support/toy.hpp"
#include "doctest.h"
#include "mhsp/common/error.hpp"
#include "mhsp/lp/simplex.hpp"
#include "mhsp/model/evaluate.hpp"
#include "mhsp/model/instance.hpp"

using namespace mhsp;
using namespace mhsp::model;

namespace {

double solve_de(const MhspInstance& inst) {
  const LinearProgramView view = build_deterministic_equivalent(inst);
  const lp::LpSolution sol = lp::solve_lp(view.lp);
  REQUIRE(sol.status == lp::LpStatus::kOptimal);
  return sol.objective;
}

double grid_minimum(const std::vector<double>& d, const std::vector<double>& p) {
  double best = 1e300;
  for (int k = 0; k <= 1000; ++k) best = std::min(best, toy::sp0_value(k / 1000.0, d, p));
  return best;
}

// Root with one x, two children with one x each; the child's coefficient
// scales its unit cost and a row keeps x_child >= x_root.
MhspInstance two_stage_tree(double c_low, double c_high, double p_low) {
  MhspInstance inst;
  StrategicNode root;
  root.x_range = {0, 1};
  root.coefficients = {1.0};
  root.parameters = {{"price", 1.0}};
  inst.nodes.push_back(root);
  const double coef[2] = {c_low, c_high};
  const double prob[2] = {p_low, 1.0 - p_low};
  for (int k = 0; k < 2; ++k) {
    StrategicNode child;
    child.id = k + 1;
    child.parent = 0;
    child.stage = 1;
    child.probability = prob[k];
    child.coefficients = {coef[k]};
    child.parameters = {{"price", coef[k]}};
    child.x_range = {k + 1, k + 2};
    inst.nodes.push_back(child);
  }
  inst.master.x_lower = {0.0, 0.0, 0.0};
  inst.master.x_upper = {4.0, 4.0, 4.0};
  for (int k = 0; k < 3; ++k) {
    inst.master.costs.push_back({{0.1}, lp::SparseMatrix(1, 1, {{0, 0, 0.5}})});
  }
  for (int k = 1; k <= 2; ++k) {
    inst.master.rows.push_back({k, {{0, 0, -1.0}, {1, 0, 1.0}}, lp::RowSense::kLessEqual, 0.0});
  }
  int id = 0;
  for (int owner = 0; owner < 3; ++owner) {
    OperationalSubproblem sp = toy::sp0(owner == 0 ? 1.0 : 3.0, inst.nodes[owner].probability, owner);
    sp.id = id++;
    sp.stage = inst.nodes[owner].stage;
    sp.operational_node = owner;
    inst.subproblems.push_back(sp);
  }
  return inst;
}

}  // namespace

TEST_CASE("deterministic equivalent without recourse") {
  OperationalSubproblem empty;
  empty.A = lp::SparseMatrix(0, 0);
  empty.B = lp::SparseMatrix(0, 1);
  empty.C = lp::SparseMatrix(0, 0);
  const MhspInstance inst = toy::single_node({empty});
  const LinearProgramView view = build_deterministic_equivalent(inst);
  const lp::LpSolution sol = lp::solve_lp(view.lp);
  REQUIRE(sol.status == lp::LpStatus::kOptimal);
  CHECK(sol.objective == 0.0);
  CHECK(sol.primal[0] == 0.0);
}

TEST_CASE("deterministic equivalent matches the grid oracle") {
  SUBCASE("single subproblem") {
    const MhspInstance inst = toy::single_node({toy::sp0(2.0)});
    CHECK(std::abs(solve_de(inst) - grid_minimum({2.0}, {1.0})) <= 1e-9);
    CHECK(std::abs(solve_de(inst) - 2.0) <= 1e-9);
  }
  SUBCASE("two equally likely subproblems") {
    const MhspInstance inst = toy::single_node({toy::sp0(1.0, 0.5), toy::sp0(3.0, 0.5)});
    CHECK(std::abs(solve_de(inst) - grid_minimum({1.0, 3.0}, {0.5, 0.5})) <= 1e-9);
  }
  SUBCASE("asymmetric probabilities") {
    const MhspInstance inst = toy::single_node({toy::sp0(0.5, 0.8), toy::sp0(3.0, 0.2)});
    CHECK(std::abs(solve_de(inst) - grid_minimum({0.5, 3.0}, {0.8, 0.2})) <= 1e-9);
  }
}

TEST_CASE("variable origins form a bijection") {
  const MhspInstance inst = two_stage_tree(0.8, 1.2, 0.5);
  const LinearProgramView view = build_deterministic_equivalent(inst);
  CHECK(view.origins.size() == 6);
  for (std::size_t a = 0; a < view.origins.size(); ++a) {
    for (std::size_t b = a + 1; b < view.origins.size(); ++b) CHECK(!(view.origins[a] == view.origins[b]));
  }
}

TEST_CASE("dimension errors name the subproblem") {
  MhspInstance inst = toy::single_node({toy::sp0(2.0), toy::sp0(1.0)});
  inst.subproblems[1].b = {1.0, 2.0};
  try {
    build_deterministic_equivalent(inst);
    FAIL("expected a dimension error");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("subproblem 1") != std::string::npos);
  }
}

TEST_CASE("expected value collapses strategic coefficients") {
  const MhspInstance inst = two_stage_tree(0.8, 1.2, 0.5);
  const MhspInstance ev = expected_value_instance(inst, Scope::kStrategic);
  REQUIRE(ev.nodes.size() == 2);
  CHECK(ev.nodes[1].coefficients[0] == doctest::Approx(1.0));
  CHECK(ev.nodes[1].probability == 1.0);
  CHECK(ev.nodes[1].parameters.at("price") == doctest::Approx(1.0));
  CHECK(ev.subproblems.size() == 2);
  CHECK(ev.subproblems[1].probability == doctest::Approx(1.0));
}

TEST_CASE("expected value averages right-hand sides") {
  const MhspInstance inst = toy::single_node({toy::sp0(100.0, 0.25), toy::sp0(60.0, 0.75)});
  const MhspInstance ev = expected_value_instance(inst, Scope::kOperational);
  REQUIRE(ev.subproblems.size() == 1);
  CHECK(ev.subproblems[0].b[0] == doctest::Approx(-70.0));
  CHECK(ev.subproblems[0].probability == doctest::Approx(1.0));
}

TEST_CASE("operational collapse of hourly load") {
  // Three scenarios of a 4-hour load block stored in b.
  const std::vector<std::vector<double>> load = {{3, 4, 5, 6}, {1, 2, 9, 2}, {7, 7, 1, 4}};
  const std::vector<double> prob = {0.2, 0.3, 0.5};
  std::vector<OperationalSubproblem> subs;
  for (int s = 0; s < 3; ++s) {
    OperationalSubproblem sp;
    sp.probability = prob[s];
    std::vector<lp::Triplet> a, b;
    for (int h = 0; h < 4; ++h) {
      a.push_back({h, h, -1.0});
      b.push_back({h, 0, 1.0});
      sp.b.push_back(-load[s][h]);
    }
    sp.A = lp::SparseMatrix(4, 4, a);
    sp.B = lp::SparseMatrix(4, 1, b);
    sp.C = lp::SparseMatrix(0, 4);
    sp.c.assign(4, 1.0);
    sp.y_lower.assign(4, 0.0);
    sp.y_upper.assign(4, lp::kInfinity);
    subs.push_back(sp);
  }
  const MhspInstance ev = expected_value_instance(toy::single_node(subs), Scope::kOperational);
  REQUIRE(ev.subproblems.size() == 1);
  for (int h = 0; h < 4; ++h) {
    double mean = 0.0;
    for (int s = 0; s < 3; ++s) mean += prob[s] * load[s][h];
    CHECK(std::abs(-ev.subproblems[0].b[h] - mean) <= 1e-12);
  }
}

TEST_CASE("expected value transform is idempotent") {
  const MhspInstance inst = two_stage_tree(0.7, 1.4, 0.3);
  for (Scope scope : {Scope::kStrategic, Scope::kOperational, Scope::kBoth}) {
    const MhspInstance once = expected_value_instance(inst, scope);
    const MhspInstance twice = expected_value_instance(once, scope);
    CHECK(once == twice);
    double leaf = 0.0;
    for (int k : once.leaves()) leaf += once.nodes[k].probability;
    CHECK(std::abs(leaf - 1.0) <= 1e-12);
  }
}

TEST_CASE("fixing strategic variables") {
  const MhspInstance inst = two_stage_tree(0.8, 1.2, 0.5);
  const LinearProgramView view = build_deterministic_equivalent(inst);
  const lp::LpSolution sol = lp::solve_lp(view.lp);
  REQUIRE(sol.status == lp::LpStatus::kOptimal);
  const std::vector<double> x(sol.primal.begin(), sol.primal.begin() + inst.num_x());

  const MhspInstance all = fix_strategic(inst, x, 1);
  CHECK(std::abs(solve_de(all) - sol.objective) <= 1e-9);

  const std::vector<double> other = {2.5, 3.0, 3.0};
  const MhspInstance stage0 = fix_strategic(inst, other, 0);
  CHECK(solve_de(stage0) >= sol.objective - 1e-9);

  CHECK_THROWS_AS(fix_strategic(inst, {5.0, 5.0, 5.0}, 0), InfeasibleFixError);
  // x_child >= x_root is violated once both are fixed.
  CHECK_THROWS_AS(fix_strategic(inst, {3.0, 1.0, 1.0}, 1), InfeasibleFixError);
}

TEST_CASE("expected value first stage evaluated on the tree") {
  const MhspInstance sp = toy::single_node({toy::sp0(1.0, 0.5), toy::sp0(3.0, 0.5)});
  const MhspInstance ev = expected_value_instance(sp, Scope::kOperational);
  CHECK(ev.subproblems[0].b[0] == doctest::Approx(-2.0));
  const MhspInstance eev = fix_strategic(sp, {1.0}, 0);
  const double eev_value = solve_de(eev);
  CHECK(std::abs(eev_value - 2.0) <= 1e-9);
  CHECK(eev_value >= grid_minimum({1.0, 3.0}, {0.5, 0.5}) - 1e-9);
}

TEST_CASE("extracting node subvectors") {
  MhspInstance inst = two_stage_tree(1.0, 1.0, 0.5);
  const std::vector<double> x = {1.0, 2.0, 3.0};
  CHECK(extract_subvector(inst, 1, x) == std::vector<double>{2.0});
  std::vector<double> joined;
  for (const StrategicNode& n : inst.nodes) {
    const std::vector<double> part = extract_subvector(inst, n.id, x);
    joined.insert(joined.end(), part.begin(), part.end());
  }
  std::sort(joined.begin(), joined.end());
  CHECK(joined == x);
  CHECK_THROWS_AS(extract_subvector(inst, 7, x), ValidationError);

  const MhspInstance whole = toy::single_node({toy::sp0(1.0)});
  CHECK(extract_subvector(whole, 0, {0.25}) == std::vector<double>{0.25});
}

TEST_CASE("lifting a single-path solution onto a tree") {
  const MhspInstance inst = two_stage_tree(0.8, 1.2, 0.5);
  const MhspInstance ev = expected_value_instance(inst, Scope::kStrategic);
  const std::vector<double> lifted = lift_by_stage(ev, {1.5, 2.5}, inst);
  CHECK(lifted == std::vector<double>{1.5, 2.5, 2.5});
}

TEST_CASE("conditional expectation at an inner node") {
  const MhspInstance inst = two_stage_tree(0.8, 1.2, 0.25);
  const MhspInstance cond = conditional_expected_instance(inst, 2, {1.0, 0.0, 0.0});
  REQUIRE(cond.nodes.size() == 2);
  CHECK(cond.master.x_lower[0] == 1.0);
  CHECK(cond.master.x_upper[0] == 1.0);
  CHECK(cond.nodes[1].coefficients[0] == 1.2);
  CHECK(cond.subproblems[1].probability == doctest::Approx(1.0));
}

TEST_CASE("instance serialisation round trip") {
  MhspInstance inst = two_stage_tree(0.8, 1.2, 0.5);
  inst.metadata.name = "tree";
  inst.metadata.stage_years = {2020, 2025};
  inst.metadata.stage_labels = {{"cap"}, {"cap"}};
  inst.subproblems[0].senses = {lp::RowSense::kGreaterEqual};
  inst.subproblems[0].A = lp::SparseMatrix(1, 1, {{0, 0, 1.0}});
  inst.subproblems[0].B = lp::SparseMatrix(1, 1, {{0, 0, -1.0}});
  inst.subproblems[0].b = {1.0 / 3.0};
  const MhspInstance back = instance_from_json(to_json(inst));
  CHECK(back == inst);

  const std::string path = (std::filesystem::temp_directory_path() / "mhsp_roundtrip.json").string();
  write_instance(inst, path);
  CHECK(read_instance(path) == inst);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(instance_from_json("{\"format\": \"other\"}"), ParseError);
}

TEST_CASE("subproblem value and subgradient") {
  const OperationalSubproblem sp = toy::sp0(2.0);
  SUBCASE("active demand") {
    const SubproblemValue v = evaluate_subproblem(sp, {0.0}, {});
    CHECK(v.theta == doctest::Approx(2.0));
    REQUIRE(v.lambda.size() == 1);
    CHECK(v.lambda[0] == doctest::Approx(-1.0));
  }
  SUBCASE("inactive demand") {
    const SubproblemValue v = evaluate_subproblem(sp, {3.0}, {});
    CHECK(v.theta == 0.0);
    CHECK(v.lambda[0] == 0.0);
  }
  SUBCASE("cost mixing scales value and subgradient") {
    OperationalSubproblem mixed = sp;
    mixed.C = lp::SparseMatrix(1, 1, {{0, 0, 1.0}});
    mixed.c = {0.0};
    const SubproblemValue v = evaluate_subproblem(mixed, {0.0}, {2.0});
    CHECK(v.theta == doctest::Approx(4.0));
    CHECK(v.lambda[0] == doctest::Approx(-2.0));
  }
  SUBCASE("infeasible recourse is an error") {
    OperationalSubproblem capped = sp;
    capped.y_upper = {0.5};
    CHECK_THROWS_AS(evaluate_subproblem(capped, {0.0}, {}), RecourseError);
  }
}
