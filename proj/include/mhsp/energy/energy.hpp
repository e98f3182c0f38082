#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mhsp/common/json_io.hpp"
#include "mhsp/model/instance.hpp"
#include "mhsp/scenario/long_term.hpp"
#include "mhsp/scenario/short_term.hpp"

namespace mhsp::energy {

// Technology groups in reporting order.
const std::vector<std::string>& technology_groups();

struct Technology {
  std::string name;
  std::string group = "fossil";
  std::vector<double> capex;  // per stage, cost per unit of capacity; one value applies to all stages
  double fixed_om = 0.0;      // per unit of capacity per year
  double variable_cost = 0.0; // per unit of energy
  double fuel_cost = 0.0;     // per unit of energy, scaled by the fuel_price parameter
  double emission = 0.0;      // per unit of energy
  std::string availability = "none";  // series kind, or "none" for dispatchable
  bool storage = false;
  double efficiency = 1.0;  // round trip, storage only
  double duration = 4.0;    // energy / power, storage only
  double max_capacity = 100.0;
  double initial_capacity = 0.0;
  bool capex_uncertain = false;  // scaled by the capex parameter

  double capex_at(int stage) const;
};

struct Region {
  std::string name;
  std::string series_region;  // archive region supplying the series
  double demand_scale = 1.0;
};

struct Line {
  std::string from;
  std::string to;
  double capex = 0.0;
  double loss = 0.0;
  double max_capacity = 100.0;
  double initial_capacity = 0.0;
};

// Names of the long-term parameters and the role each is bound to.
inline const std::map<std::string, scenario::ParameterRole>& parameter_bindings() {
  static const std::map<std::string, scenario::ParameterRole> b{
      {"co2_cap", scenario::ParameterRole::kRhs},
      {"demand", scenario::ParameterRole::kRhs},
      {"fuel_price", scenario::ParameterRole::kCostCoefficient},
      {"capex", scenario::ParameterRole::kMasterCost}};
  return b;
}

struct EnergyConfig {
  std::string name = "energy";
  int stages = 1;
  std::vector<int> stage_years;
  double years_per_stage = 5.0;
  double discount_rate = 0.05;
  double shed_penalty = 1e4;
  std::vector<Region> regions;
  std::vector<Technology> technologies;
  std::vector<Line> lines;
  std::vector<double> emission_cap;  // per stage; empty means uncapped
  // Branchings (and optional expected overrides) per bound parameter.
  std::vector<scenario::UncertainParameter> uncertainty;
  bool allow_bias = false;
  bool investment_precedes_reveal = false;
  // growth[t - 1]: per series kind factor at stage t.
  std::vector<std::map<std::string, double>> growth;
  scenario::SeasonSpec season;
  std::string sgr = "random";
  int short_scenarios = 2;
  int candidates = 10;

  void validate() const;
};

EnergyConfig energy_config_from_json(const Json& value);
EnergyConfig load_energy_config(const std::string& path);

struct SeriesLayout {
  std::vector<std::string> kinds;
  std::vector<std::string> regions;
  int hours_per_year = 8760;

  static SeriesLayout of(const scenario::TimeSeriesArchive& archive) {
    return {archive.kinds(), archive.regions(), archive.hours()};
  }
};

// Row and column indices shared by every operational subproblem.
struct SubproblemLayout {
  std::vector<int> balance_rows;
  int emission_row = -1;
  std::vector<int> shed_columns;
  // (column, annualised emission per unit) for emitting generation.
  std::vector<std::pair<int, double>> emitting;
};

struct EnergyModel {
  scenario::InstanceTemplate tmpl;
  SubproblemLayout layout;
};

scenario::LongTermTree energy_long_term_tree(const EnergyConfig& config);

std::vector<scenario::ShortTermScenario> generate_short_scenarios(const EnergyConfig& config,
                                                                  const scenario::TimeSeriesArchive& archive,
                                                                  std::uint64_t seed);

EnergyModel energy_template(const EnergyConfig& config, const std::vector<scenario::ShortTermScenario>& shorts,
                            const SeriesLayout& series);

model::MhspInstance build_instance(const EnergyConfig& config, const std::vector<scenario::ShortTermScenario>& shorts,
                                   const SeriesLayout& series, const scenario::LongTermTree& tree);

// Convenience: tree, short scenarios and instance from a config and archive.
model::MhspInstance build_instance(const EnergyConfig& config, const scenario::TimeSeriesArchive& archive,
                                   std::uint64_t seed);

// Cumulative capacity of `node` summed by technology group (transmission
// counts line capacity).
std::vector<double> group_capacity(const EnergyConfig& config, const model::MhspInstance& instance,
                                   const std::vector<double>& x, int node);

}  // namespace mhsp::energy
