#include <cstdio>
#include <fstream>

#include "../support/energy_fixture.hpp"
#include "doctest.h"
#include "mhsp/assessment/metrics.hpp"
#include "mhsp/common/error.hpp"
#include "mhsp/scenario/short_term.hpp"

using namespace mhsp;
using energy::build_instance;
using energy::energy_long_term_tree;
using energy::energy_template;
using energy::Technology;

namespace {

constexpr double kHoursPerYear = 8760.0;

model::MhspInstance instance_of(const energy::EnergyConfig& cfg, const std::vector<scenario::ShortTermScenario>& shorts,
                                energy::SubproblemLayout* layout = nullptr) {
  const auto series = toy::series_layout({"north", "south"});
  if (layout) *layout = energy_template(cfg, shorts, series).layout;
  return build_instance(cfg, shorts, series, energy_long_term_tree(cfg));
}

double shed_total(const model::MhspInstance& inst, const energy::SubproblemLayout& layout, const toy::DeSolution& s) {
  double total = 0.0;
  for (std::size_t k = 0; k < inst.subproblems.size(); ++k) {
    for (int col : layout.shed_columns) total += s.ys[k][col];
  }
  return total;
}

}  // namespace

TEST_CASE("flat demand with one thermal plant builds exactly the demand") {
  const double d = 5.0;
  auto cfg = toy::single_region({toy::thermal("gas", 100.0, 10.0, 0.0)});
  const std::vector shorts{toy::scenario_of({toy::block(2, 4, [&](int, int) { return d; })})};
  energy::SubproblemLayout layout;
  const auto inst = instance_of(cfg, shorts, &layout);
  inst.validate();

  const auto de = toy::solve_extensive(inst);
  const double weight = cfg.years_per_stage * kHoursPerYear / 4.0;
  CHECK(de.x[0] == doctest::Approx(d));
  CHECK(de.objective == doctest::Approx(100.0 * d + weight * 10.0 * d * 4.0).epsilon(1e-10));
  CHECK(shed_total(inst, layout, de) == doctest::Approx(0.0));
  CHECK(toy::check_solution(inst, layout, de.x, de.ys).balance_residual <= 1e-6);

  const auto bd = assessment::benders_solver()(inst);
  CHECK(bd.objective == doctest::Approx(de.objective).epsilon(1e-6));
}

TEST_CASE("a zero emission cap with only fossil supply sheds all demand") {
  auto cfg = toy::single_region({toy::thermal("coal", 100.0, 10.0, 1.0)});
  cfg.emission_cap = {0.0};
  const auto demand = [](int, int h) { return 2.0 + h; };
  const std::vector shorts{toy::scenario_of({toy::block(2, 4, demand)})};
  energy::SubproblemLayout layout;
  const auto inst = instance_of(cfg, shorts, &layout);
  const auto de = toy::solve_extensive(inst);

  double total = 0.0;
  for (int h = 0; h < 4; ++h) total += demand(0, h);
  const double weight = cfg.years_per_stage * kHoursPerYear / 4.0;
  CHECK(de.objective == doctest::Approx(cfg.shed_penalty * weight * total).epsilon(1e-10));
  CHECK(shed_total(inst, layout, de) == doctest::Approx(total));
  CHECK(de.x[0] == doctest::Approx(0.0));
}

TEST_CASE("wind with storage covers a windless night") {
  Technology wind;
  wind.name = "wind";
  wind.group = "renewable";
  wind.capex = {100.0};
  wind.availability = "wind";
  Technology battery;
  battery.name = "battery";
  battery.group = "storage";
  battery.capex = {50.0};
  battery.storage = true;
  battery.efficiency = 0.9;
  battery.duration = 12.0;
  auto cfg = toy::single_region({wind, battery});
  const auto day = [](int, int h) { return h >= 6 && h < 18 ? 1.0 : 0.0; };
  const std::vector shorts{toy::scenario_of({toy::block(2, 24, [](int, int) { return 1.0; }, day)})};
  energy::SubproblemLayout layout;
  const auto inst = instance_of(cfg, shorts, &layout);
  const auto de = toy::solve_extensive(inst);

  // Twelve night hours of unit demand; charging is limited to twelve day
  // hours at the storage power rating, which loses 10% on the way in.
  const double storage = 12.0 / (0.9 * 12.0);
  const double turbines = 1.0 + storage;
  CHECK(de.x[0] == doctest::Approx(turbines).epsilon(1e-9));
  CHECK(de.x[1] == doctest::Approx(storage).epsilon(1e-9));
  CHECK(de.objective == doctest::Approx(100.0 * turbines + 50.0 * storage).epsilon(1e-9));
  CHECK(shed_total(inst, layout, de) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(toy::check_solution(inst, layout, de.x, de.ys).balance_residual <= 1e-6);
}

TEST_CASE("tightening the emission cap never lowers the objective") {
  Technology wind;
  wind.name = "wind";
  wind.group = "renewable";
  wind.capex = {400.0};
  wind.availability = "wind";
  wind.fixed_om = 5.0;
  auto cfg = toy::single_region({toy::thermal("coal", 50.0, 0.02, 1.0), toy::thermal("gas", 80.0, 0.04, 0.4), wind});
  cfg.regions.push_back({"south", "south", 0.8});
  cfg.lines.push_back({"north", "south", 30.0, 0.03, 100.0, 0.0});
  const auto load = [](int n, int h) { return 4.0 + 2.0 * n + (h % 3); };
  const auto gusts = [](int n, int h) { return 0.2 + 0.1 * ((h + n) % 4); };
  const std::vector shorts{toy::scenario_of({toy::block(2, 6, load, gusts)}, 0.5),
                           toy::scenario_of({toy::block(2, 6, [&](int n, int h) { return load(n, h) + 1.0; }, gusts)}, 0.5)};

  double previous = -1.0;
  for (double cap : {1e6, 60000.0, 40000.0, 25000.0, 10000.0, 0.0}) {
    cfg.emission_cap = {cap};
    energy::SubproblemLayout layout;
    const auto inst = instance_of(cfg, shorts, &layout);
    const auto de = toy::solve_extensive(inst);
    const auto checks = toy::check_solution(inst, layout, de.x, de.ys);
    CAPTURE(cap);
    CHECK(checks.balance_residual <= 1e-6);
    CHECK(checks.emission_excess <= 1e-6);
    CHECK(de.objective >= previous - 1e-9 * std::abs(previous));
    previous = de.objective;
  }
}

TEST_CASE("multi-stage multi-region instance solves identically by decomposition") {
  Technology wind;
  wind.name = "wind";
  wind.group = "renewable";
  wind.capex = {300.0, 250.0, 200.0};
  wind.availability = "wind";
  wind.capex_uncertain = true;
  Technology battery;
  battery.name = "battery";
  battery.group = "storage";
  battery.capex = {60.0};
  battery.storage = true;
  battery.efficiency = 0.85;
  battery.duration = 2.0;
  auto cfg = toy::single_region({toy::thermal("coal", 50.0, 0.02, 1.0), toy::thermal("gas", 80.0, 0.04, 0.4), wind, battery});
  cfg.name = "three-stage";
  cfg.stages = 3;
  cfg.stage_years = {2020, 2025, 2030};
  cfg.regions.push_back({"south", "south", 0.8});
  cfg.lines.push_back({"north", "south", 30.0, 0.03, 100.0, 0.0});
  cfg.emission_cap = {80000.0, 50000.0, 30000.0};
  cfg.growth = {{{"load", 1.1}}, {{"load", 1.2}}};
  scenario::UncertainParameter co2;
  co2.trajectory.name = "co2_cap";
  co2.branches.branchings = {{1, {1.2, 0.8}, {0.5, 0.5}}};
  scenario::UncertainParameter fuel;
  fuel.trajectory.name = "fuel_price";
  fuel.branches.branchings = {{2, {1.5, 0.75}, {1.0 / 3.0, 2.0 / 3.0}}};
  scenario::UncertainParameter capex;
  capex.trajectory.name = "capex";
  capex.branches.branchings = {{2, {0.8, 1.2}, {0.5, 0.5}}};
  cfg.uncertainty = {co2, fuel, capex};
  const auto load = [](int n, int h) { return 4.0 + 2.0 * n + (h % 3); };
  const auto gusts = [](int n, int h) { return 0.1 + 0.3 * ((h + n) % 3); };
  const std::vector shorts{toy::scenario_of({toy::block(2, 4, load, gusts)}, 0.5),
                           toy::scenario_of({toy::block(2, 4, [&](int n, int h) { return load(n, h) + 1.5; }, gusts)}, 0.5)};

  energy::SubproblemLayout layout;
  const auto inst = instance_of(cfg, shorts, &layout);
  inst.validate();
  CHECK(inst.nodes.size() == 1 + 2 + 2 * 4);
  CHECK(inst.subproblems.size() == 2 * inst.nodes.size());
  CHECK(inst.metadata.stage_labels.size() == 3);

  const auto de = toy::solve_extensive(inst);
  const auto checks = toy::check_solution(inst, layout, de.x, de.ys);
  CHECK(checks.balance_residual <= 1e-6);
  CHECK(checks.emission_excess <= 1e-6);

  benders::BendersConfig bc;
  bc.relative_eps = 1e-7;
  const auto bd = assessment::benders_solver(bc)(inst);
  CHECK(bd.converged);
  CHECK(bd.objective == doctest::Approx(de.objective).epsilon(1e-6));

  // Capacity is cumulative along every path.
  for (const auto& node : inst.nodes) {
    if (!node.parent) continue;
    const auto here = energy::group_capacity(cfg, inst, de.x, node.id);
    const auto before = energy::group_capacity(cfg, inst, de.x, *node.parent);
    for (std::size_t g = 0; g < here.size(); ++g) CHECK(here[g] >= before[g] - 1e-9);
  }

  cfg.investment_precedes_reveal = true;
  const auto lagged = instance_of(cfg, shorts);
  lagged.validate();
  CHECK(lagged.subproblems.size() == inst.subproblems.size());
}

TEST_CASE("invalid energy configurations are rejected") {
  const std::vector shorts{toy::scenario_of({toy::block(2, 4, [](int, int) { return 1.0; })})};
  auto base = toy::single_region({toy::thermal("gas", 100.0, 10.0, 0.0)});

  auto unbound = base;
  scenario::UncertainParameter hydrogen;
  hydrogen.trajectory.name = "hydrogen_demand";
  unbound.uncertainty = {hydrogen};
  CHECK_THROWS_AS(unbound.validate(), ConfigError);

  auto island = base;
  island.regions.push_back({"south", "south", 1.0});
  CHECK_THROWS_AS(island.validate(), ConfigError);

  auto lossy = base;
  lossy.technologies[0].storage = true;
  lossy.technologies[0].efficiency = 0.0;
  CHECK_THROWS_AS(lossy.validate(), ConfigError);

  auto negative = base;
  negative.technologies[0].fuel_cost = -1.0;
  CHECK_THROWS_AS(negative.validate(), ConfigError);

  auto unknown_kind = base;
  unknown_kind.technologies[0].availability = "hydro";
  CHECK_THROWS_AS(energy_template(unknown_kind, shorts, toy::series_layout({"north"})), ConfigError);

  auto capless = base;
  scenario::UncertainParameter co2;
  co2.trajectory.name = "co2_cap";
  capless.uncertainty = {co2};
  CHECK_THROWS_AS(capless.validate(), ConfigError);
}

TEST_CASE("energy config parsing") {
  const auto cfg = energy::energy_config_from_json(Json::parse(R"({
    "name": "parsed", "stages": 2, "stage_years": [2020, 2030],
    "regions": [{"name": "a"}, {"name": "b", "series_region": "a", "demand_scale": 0.5}],
    "technologies": [
      {"name": "coal", "group": "fossil", "capex": 50, "fuel_cost": 0.02, "emission": 1.0},
      {"name": "wind", "group": "renewable", "capex": [300, 200], "availability": "wind"}],
    "lines": [{"from": "a", "to": "b", "capex": 10, "loss": 0.02}],
    "emission_cap": [100, 50],
    "uncertainty": [{"name": "demand", "branchings": [{"stage": 1, "multipliers": [1.1, 0.9], "probabilities": [0.5, 0.5]}]}],
    "season": {"regular_length": 6, "peak_count": 1, "peak_length": 3},
    "sgr": "moment", "short_scenarios": 3, "candidates": 5
  })"));
  CHECK(cfg.regions[1].series_region == "a");
  CHECK(cfg.technologies[1].capex_at(1) == 200.0);
  CHECK(cfg.technologies[1].capex_uncertain);
  CHECK_FALSE(cfg.technologies[0].capex_uncertain);
  CHECK(cfg.shed_penalty == 1e4);
  CHECK(cfg.season.peak_count == 1);
  CHECK(cfg.uncertainty[0].branches.branchings[0].multipliers[0] == 1.1);
  CHECK_THROWS_AS(energy::energy_config_from_json(Json::parse(R"({"regions": []})")), ParseError);
}

TEST_CASE("archive files are checked for completeness") {
  const std::string path = "energy_archive_test.csv";
  auto write = [&](const std::vector<int>& years, int skip_hour) {
    std::ofstream out(path);
    out << "year,hour,region,series_kind,value\n";
    for (int y : years)
      for (int h = 1; h <= 24; ++h)
        if (h != skip_hour) out << y << "," << h << ",north,load," << 1.0 + h << "\n";
  };
  write({2015}, 17);
  try {
    scenario::load_archive_csv(path, 4);
    FAIL("expected a completeness error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("load/north/2015") != std::string::npos);
    CHECK(msg.find("hour 17") != std::string::npos);
  }
  write({2015}, 0);
  CHECK(scenario::load_archive_csv(path, 4).hours() == 24);
  write({2015, 2016}, 0);
  const auto two = scenario::load_archive_csv(path, 4);
  CHECK(two.years() == std::vector<int>{2015, 2016});
  std::remove(path.c_str());
}

TEST_CASE("instances build end to end from an archive") {
  scenario::SyntheticArchiveSpec spec;
  spec.hours = 96;
  const auto archive = scenario::synthetic_archive(spec);
  Technology wind;
  wind.name = "wind";
  wind.group = "renewable";
  wind.capex = {300.0};
  wind.availability = "wind";
  auto cfg = toy::single_region({toy::thermal("gas", 80.0, 0.04, 0.4), wind});
  cfg.season.regular_length = 4;
  cfg.season.peak_count = 1;
  cfg.season.peak_length = 1;
  cfg.short_scenarios = 2;
  for (const std::string sgr : {"random", "moment"}) {
    cfg.sgr = sgr;
    const auto a = build_instance(cfg, archive, 11);
    const auto b = build_instance(cfg, archive, 11);
    CHECK(a == b);
    CHECK(a.subproblems.size() == 2);
    // Gas, wind and shedding in four regular hours per season plus one peak hour.
    CHECK(a.subproblems[0].num_cols() == 3 * (4 * 4 + 1));
  }
}
