#include "mhsp/energy/energy.hpp"

#include <algorithm>
#include <cmath>

#include "mhsp/common/error.hpp"

namespace mhsp::energy {

using lp::RowSense;
using lp::SparseMatrix;
using lp::Triplet;
using scenario::ParameterRole;

const std::vector<std::string>& technology_groups() {
  static const std::vector<std::string> groups{"fossil", "ccs", "renewable", "alternative",
                                               "storage", "transmission", "hydrogen"};
  return groups;
}

double Technology::capex_at(int stage) const {
  if (capex.empty()) return 0.0;
  return capex.size() == 1 ? capex[0] : capex.at(stage);
}

void EnergyConfig::validate() const {
  if (stages < 1) throw ConfigError("at least one stage is required");
  if (!stage_years.empty() && static_cast<int>(stage_years.size()) != stages) {
    throw ConfigError("stage_years must list one year per stage");
  }
  if (regions.empty()) throw ConfigError("at least one region is required");
  if (technologies.empty()) throw ConfigError("at least one technology is required");
  if (!(shed_penalty > 0.0)) throw ConfigError("shed_penalty must be positive");
  if (years_per_stage <= 0.0 || discount_rate < 0.0) throw ConfigError("invalid discounting");
  const auto& groups = technology_groups();
  for (const Technology& t : technologies) {
    const std::string where = "technology '" + t.name + "'";
    if (std::find(groups.begin(), groups.end(), t.group) == groups.end()) {
      throw ConfigError(where + ": unknown group '" + t.group + "'");
    }
    if (t.capex.size() > 1 && static_cast<int>(t.capex.size()) != stages) {
      throw ConfigError(where + ": capex needs one value or one per stage");
    }
    for (double c : t.capex) {
      if (c < 0.0) throw ConfigError(where + ": negative capex");
    }
    if (t.fixed_om < 0.0 || t.variable_cost < 0.0 || t.fuel_cost < 0.0 || t.emission < 0.0) {
      throw ConfigError(where + ": costs and emissions must be nonnegative");
    }
    if (t.storage && !(t.efficiency > 0.0 && t.efficiency <= 1.0)) throw ConfigError(where + ": efficiency must lie in (0, 1]");
    if (t.storage && !(t.duration > 0.0)) throw ConfigError(where + ": duration must be positive");
    if (!(t.max_capacity >= t.initial_capacity && t.initial_capacity >= 0.0)) {
      throw ConfigError(where + ": capacity bounds are inconsistent");
    }
  }
  auto has_region = [&](const std::string& n) {
    return std::any_of(regions.begin(), regions.end(), [&](const Region& r) { return r.name == n; });
  };
  for (const Line& l : lines) {
    if (!has_region(l.from) || !has_region(l.to) || l.from == l.to) {
      throw ConfigError("line " + l.from + "-" + l.to + " joins unknown or identical regions");
    }
    if (!(l.loss >= 0.0 && l.loss < 1.0)) throw ConfigError("line loss must lie in [0, 1)");
  }
  // Candidate lines must connect every region.
  std::vector<int> reached(regions.size(), 0);
  reached[0] = 1;
  for (bool grew = true; grew;) {
    grew = false;
    for (const Line& l : lines) {
      int a = 0;
      int z = 0;
      for (std::size_t r = 0; r < regions.size(); ++r) {
        if (regions[r].name == l.from) a = static_cast<int>(r);
        if (regions[r].name == l.to) z = static_cast<int>(r);
      }
      if (reached[a] != reached[z]) {
        reached[a] = reached[z] = 1;
        grew = true;
      }
    }
  }
  if (std::find(reached.begin(), reached.end(), 0) != reached.end()) {
    throw ConfigError("candidate lines leave some region disconnected");
  }
  if (!emission_cap.empty() && static_cast<int>(emission_cap.size()) != stages) {
    throw ConfigError("emission_cap needs one value per stage");
  }
  for (const auto& up : uncertainty) {
    const auto& name = up.trajectory.name;
    if (!parameter_bindings().count(name)) {
      throw ConfigError("uncertain parameter '" + name + "' is not bound to a role (co2_cap, demand, fuel_price, capex)");
    }
    if (name == "co2_cap" && emission_cap.empty()) throw ConfigError("co2_cap uncertainty needs an emission_cap");
  }
  if (short_scenarios < 1) throw ConfigError("short_scenarios must be positive");
  if (sgr != "random" && sgr != "moment") throw ConfigError("sgr must be 'random' or 'moment'");
  if (static_cast<int>(growth.size()) > stages - 1) throw ConfigError("growth lists more stages than exist");
}

EnergyConfig energy_config_from_json(const Json& v) {
  EnergyConfig c;
  try {
    c.name = v.value("name", c.name);
    c.stages = require(v, "stages").get<int>();
    c.stage_years = v.value("stage_years", std::vector<int>{});
    c.years_per_stage = v.value("years_per_stage", c.years_per_stage);
    c.discount_rate = v.value("discount_rate", c.discount_rate);
    c.shed_penalty = v.value("shed_penalty", c.shed_penalty);
    for (const Json& r : require(v, "regions")) {
      Region reg;
      reg.name = require(r, "name").get<std::string>();
      reg.series_region = r.value("series_region", reg.name);
      reg.demand_scale = r.value("demand_scale", 1.0);
      c.regions.push_back(reg);
    }
    for (const Json& t : require(v, "technologies")) {
      Technology tech;
      tech.name = require(t, "name").get<std::string>();
      tech.group = t.value("group", tech.group);
      const Json& capex = require(t, "capex");
      tech.capex = capex.is_array() ? capex.get<std::vector<double>>() : std::vector<double>{capex.get<double>()};
      tech.fixed_om = t.value("fixed_om", 0.0);
      tech.variable_cost = t.value("variable_cost", 0.0);
      tech.fuel_cost = t.value("fuel_cost", 0.0);
      tech.emission = t.value("emission", 0.0);
      tech.availability = t.value("availability", tech.availability);
      tech.storage = t.value("storage", false);
      tech.efficiency = t.value("efficiency", tech.efficiency);
      tech.duration = t.value("duration", tech.duration);
      tech.max_capacity = t.value("max_capacity", tech.max_capacity);
      tech.initial_capacity = t.value("initial_capacity", 0.0);
      tech.capex_uncertain = t.value("capex_uncertain", tech.group == "renewable");
      c.technologies.push_back(tech);
    }
    for (const Json& l : v.value("lines", Json::array())) {
      Line line;
      line.from = require(l, "from").get<std::string>();
      line.to = require(l, "to").get<std::string>();
      line.capex = l.value("capex", 0.0);
      line.loss = l.value("loss", 0.0);
      line.max_capacity = l.value("max_capacity", line.max_capacity);
      line.initial_capacity = l.value("initial_capacity", 0.0);
      c.lines.push_back(line);
    }
    if (v.contains("emission_cap")) c.emission_cap = v["emission_cap"].get<std::vector<double>>();
    c.allow_bias = v.value("allow_bias", false);
    c.investment_precedes_reveal = v.value("investment_precedes_reveal", false);
    for (const Json& p : v.value("uncertainty", Json::array())) {
      scenario::UncertainParameter up;
      up.trajectory.name = require(p, "name").get<std::string>();
      up.trajectory.expected = p.value("expected", std::vector<double>{});
      for (const Json& b : p.value("branchings", Json::array())) {
        up.branches.branchings.push_back({require(b, "stage").get<int>(),
                                          require(b, "multipliers").get<std::vector<double>>(),
                                          require(b, "probabilities").get<std::vector<double>>()});
      }
      c.uncertainty.push_back(std::move(up));
    }
    c.growth = v.value("growth", std::vector<std::map<std::string, double>>{});
    if (v.contains("season")) {
      const Json& s = v["season"];
      c.season.regular_length = s.value("regular_length", c.season.regular_length);
      c.season.peak_count = s.value("peak_count", c.season.peak_count);
      c.season.peak_length = s.value("peak_length", c.season.peak_length);
      c.season.load_kind = s.value("load_kind", c.season.load_kind);
    }
    c.sgr = v.value("sgr", c.sgr);
    c.short_scenarios = v.value("short_scenarios", c.short_scenarios);
    c.candidates = v.value("candidates", c.candidates);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("energy config: ") + e.what());
  }
  c.validate();
  return c;
}

EnergyConfig load_energy_config(const std::string& path) { return energy_config_from_json(read_json_file(path)); }

namespace {

// Tree parameters in a fixed order; co2_cap only when emissions are capped.
std::vector<scenario::UncertainParameter> tree_parameters(const EnergyConfig& cfg) {
  std::vector<scenario::UncertainParameter> out;
  for (const std::string name : {"co2_cap", "demand", "fuel_price", "capex"}) {
    if (std::string(name) == "co2_cap" && cfg.emission_cap.empty()) continue;
    scenario::UncertainParameter up;
    up.trajectory.name = name;
    up.trajectory.role = parameter_bindings().at(name);
    up.trajectory.expected = name == std::string("co2_cap") ? cfg.emission_cap : std::vector<double>(cfg.stages, 1.0);
    for (const auto& u : cfg.uncertainty) {
      if (u.trajectory.name != name) continue;
      if (!u.trajectory.expected.empty()) up.trajectory.expected = u.trajectory.expected;
      up.branches = u.branches;
    }
    out.push_back(std::move(up));
  }
  return out;
}

std::vector<std::string> parameter_names(const EnergyConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& p : tree_parameters(cfg)) names.push_back(p.trajectory.name);
  return names;
}

int find_name(const std::vector<std::string>& names, const std::string& name, const std::string& what) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ConfigError(what + " '" + name + "' is not in the time-series data");
  return static_cast<int>(it - names.begin());
}

struct XLayout {
  int R = 0;
  int G = 0;
  int L = 0;
  int cap(int r, int g) const { return r * G + g; }
  int inv(int r, int g) const { return R * G + r * G + g; }
  int line_cap(int l) const { return 2 * R * G + l; }
  int line_inv(int l) const { return 2 * R * G + L + l; }
  int size() const { return 2 * R * G + 2 * L; }
};

scenario::StrategicTemplate strategic_stage(const EnergyConfig& cfg, const XLayout& xl, int stage, int n_params,
                                            int capex_param) {
  scenario::StrategicTemplate st;
  const double disc = std::pow(1.0 + cfg.discount_rate, -cfg.years_per_stage * stage);
  st.x_lower.assign(xl.size(), 0.0);
  st.x_upper.assign(xl.size(), 0.0);
  st.labels.resize(xl.size());
  st.cost.base.assign(xl.size(), 0.0);
  std::vector<Triplet> mixing;
  for (int r = 0; r < xl.R; ++r) {
    for (int g = 0; g < xl.G; ++g) {
      const Technology& t = cfg.technologies[g];
      const std::string tag = cfg.regions[r].name + ":" + t.name;
      st.labels[xl.cap(r, g)] = "cap:" + tag;
      st.labels[xl.inv(r, g)] = "inv:" + tag;
      st.x_upper[xl.cap(r, g)] = t.max_capacity;
      st.x_upper[xl.inv(r, g)] = t.max_capacity;
      st.cost.base[xl.cap(r, g)] = disc * cfg.years_per_stage * t.fixed_om;
      const double capex = disc * t.capex_at(stage);
      if (t.capex_uncertain && capex != 0.0) {
        mixing.push_back({capex_param, xl.inv(r, g), capex});
      } else {
        st.cost.base[xl.inv(r, g)] = capex;
      }
      model::MasterRow row{0, {{0, xl.cap(r, g), 1.0}, {0, xl.inv(r, g), -1.0}}, RowSense::kEqual, 0.0};
      if (stage == 0) {
        row.rhs = t.initial_capacity;
      } else {
        row.terms.push_back({1, xl.cap(r, g), -1.0});
      }
      st.rows.push_back(row);
    }
  }
  for (int l = 0; l < xl.L; ++l) {
    const Line& line = cfg.lines[l];
    const std::string tag = line.from + "-" + line.to;
    st.labels[xl.line_cap(l)] = "linecap:" + tag;
    st.labels[xl.line_inv(l)] = "lineinv:" + tag;
    st.x_upper[xl.line_cap(l)] = line.max_capacity;
    st.x_upper[xl.line_inv(l)] = line.max_capacity;
    st.cost.base[xl.line_inv(l)] = disc * line.capex;
    model::MasterRow row{0, {{0, xl.line_cap(l), 1.0}, {0, xl.line_inv(l), -1.0}}, RowSense::kEqual, 0.0};
    if (stage == 0) {
      row.rhs = line.initial_capacity;
    } else {
      row.terms.push_back({1, xl.line_cap(l), -1.0});
    }
    st.rows.push_back(row);
  }
  if (!mixing.empty()) st.cost.mixing = SparseMatrix(n_params, xl.size(), mixing);
  return st;
}

// Incrementally assembled operational LP.
struct OpBuilder {
  std::vector<double> c;
  std::vector<Triplet> C;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Triplet> A;
  std::vector<Triplet> B;
  std::vector<double> b;
  std::vector<RowSense> senses;

  int var(double cost, double lo = 0.0, double hi = lp::kInfinity) {
    c.push_back(cost);
    lower.push_back(lo);
    upper.push_back(hi);
    return static_cast<int>(c.size()) - 1;
  }
  int row(RowSense sense, double rhs) {
    senses.push_back(sense);
    b.push_back(rhs);
    return static_cast<int>(b.size()) - 1;
  }
};

}  // namespace

scenario::LongTermTree energy_long_term_tree(const EnergyConfig& config) {
  config.validate();
  return scenario::build_long_term_tree(tree_parameters(config), config.stages, config.allow_bias);
}

std::vector<scenario::ShortTermScenario> generate_short_scenarios(const EnergyConfig& config,
                                                                  const scenario::TimeSeriesArchive& archive,
                                                                  std::uint64_t seed) {
  Rng rng(seed);
  if (config.sgr == "moment") {
    return scenario::generate_moment_matched(archive, config.season, config.candidates, config.short_scenarios, rng).tree;
  }
  return scenario::generate_random_scenarios(archive, config.season, config.short_scenarios, rng);
}

EnergyModel energy_template(const EnergyConfig& cfg, const std::vector<scenario::ShortTermScenario>& shorts,
                            const SeriesLayout& series) {
  cfg.validate();
  if (shorts.empty()) throw ConfigError("no short-term scenarios");
  const std::vector<std::string> params = parameter_names(cfg);
  const int P = static_cast<int>(params.size());
  const auto param = [&](const std::string& n) {
    return static_cast<int>(std::find(params.begin(), params.end(), n) - params.begin());
  };
  const XLayout xl{static_cast<int>(cfg.regions.size()), static_cast<int>(cfg.technologies.size()),
                   static_cast<int>(cfg.lines.size())};
  const int load_kind = find_name(series.kinds, cfg.season.load_kind, "series kind");
  std::vector<int> series_region;
  for (const Region& r : cfg.regions) series_region.push_back(find_name(series.regions, r.series_region, "region"));
  std::vector<int> avail_kind;
  for (const Technology& t : cfg.technologies) {
    avail_kind.push_back(t.availability == "none" ? -1 : find_name(series.kinds, t.availability, "series kind"));
  }
  auto region_index = [&](const std::string& n) {
    for (std::size_t r = 0; r < cfg.regions.size(); ++r) {
      if (cfg.regions[r].name == n) return static_cast<int>(r);
    }
    return -1;
  };

  EnergyModel out;
  scenario::InstanceTemplate& tmpl = out.tmpl;
  tmpl.parameters = params;
  tmpl.investment_precedes_reveal = cfg.investment_precedes_reveal;
  tmpl.metadata.name = cfg.name;
  tmpl.metadata.stage_years = cfg.stage_years;
  double total_p = 0.0;
  for (const auto& s : shorts) total_p += s.probability;
  for (const auto& s : shorts) tmpl.short_probabilities.push_back(s.probability / total_p);

  std::vector<std::vector<scenario::ShortTermScenario>> staged;  // [omega][stage]
  for (const auto& s : shorts) {
    std::vector<std::map<std::string, double>> growth = cfg.growth;
    growth.resize(cfg.stages - 1);
    scenario::TimeSeriesArchive names(series.kinds, series.regions, {0}, 1, 1);
    staged.push_back(scenario::scale_future_periods(s, names, growth));
  }

  for (int stage = 0; stage < cfg.stages; ++stage) {
    tmpl.strategic.push_back(strategic_stage(cfg, xl, stage, P, param("capex")));
    const double disc = std::pow(1.0 + cfg.discount_rate, -cfg.years_per_stage * stage);
    std::vector<scenario::OperationalTemplate> ops;
    for (std::size_t w = 0; w < shorts.size(); ++w) {
      const scenario::ShortTermScenario& sc = staged[w][stage];
      int hours = 0;
      for (const auto& blk : sc.blocks) hours += blk.length;
      if (hours == 0) throw ConfigError("short-term scenario without hours");
      const double annual = static_cast<double>(series.hours_per_year) / hours;
      const double weight = disc * cfg.years_per_stage * annual;

      OpBuilder ob;
      SubproblemLayout layout;
      std::vector<Triplet> emission_terms;
      for (const auto& blk : sc.blocks) {
        // Storage state of the previous hour within this block, per (r, g).
        std::vector<int> first_soc(xl.R * xl.G, -1);
        std::vector<int> prev_soc(xl.R * xl.G, -1);
        std::vector<int> first_balance(xl.R * xl.G, -1);
        for (int h = 0; h < blk.length; ++h) {
          std::vector<int> balance(xl.R);
          for (int r = 0; r < xl.R; ++r) {
            const double demand = blk.values[load_kind][series_region[r]][h] * cfg.regions[r].demand_scale;
            balance[r] = ob.row(RowSense::kEqual, demand);
            layout.balance_rows.push_back(balance[r]);
          }
          for (int r = 0; r < xl.R; ++r) {
            for (int g = 0; g < xl.G; ++g) {
              const Technology& t = cfg.technologies[g];
              const int cap = xl.cap(r, g);
              if (!t.storage) {
                const int gen = ob.var(weight * t.variable_cost);
                if (t.fuel_cost > 0.0) ob.C.push_back({param("fuel_price"), gen, weight * t.fuel_cost});
                const double avail = avail_kind[g] < 0 ? 1.0 : blk.values[avail_kind[g]][series_region[r]][h];
                const int lim = ob.row(RowSense::kLessEqual, 0.0);
                ob.A.push_back({lim, gen, 1.0});
                if (avail != 0.0) ob.B.push_back({lim, cap, avail});
                ob.A.push_back({balance[r], gen, 1.0});
                if (t.emission > 0.0) {
                  emission_terms.push_back({0, gen, annual * t.emission});
                  layout.emitting.emplace_back(gen, annual * t.emission);
                }
                continue;
              }
              const int ch = ob.var(0.0);
              const int dis = ob.var(weight * t.variable_cost);
              const int soc = ob.var(0.0);
              for (int v : {ch, dis}) {
                const int lim = ob.row(RowSense::kLessEqual, 0.0);
                ob.A.push_back({lim, v, 1.0});
                ob.B.push_back({lim, cap, 1.0});
              }
              const int elim = ob.row(RowSense::kLessEqual, 0.0);
              ob.A.push_back({elim, soc, 1.0});
              ob.B.push_back({elim, cap, t.duration});
              ob.A.push_back({balance[r], dis, 1.0});
              ob.A.push_back({balance[r], ch, -1.0});
              // soc[h] - soc[h-1] - eff ch + dis = 0, cyclic within the block.
              const int dyn = ob.row(RowSense::kEqual, 0.0);
              ob.A.push_back({dyn, soc, 1.0});
              ob.A.push_back({dyn, ch, -t.efficiency});
              ob.A.push_back({dyn, dis, 1.0});
              const int slot = r * xl.G + g;
              if (prev_soc[slot] >= 0) {
                ob.A.push_back({dyn, prev_soc[slot], -1.0});
              } else {
                first_soc[slot] = soc;
                first_balance[slot] = dyn;
              }
              prev_soc[slot] = soc;
            }
            const int shed = ob.var(weight * cfg.shed_penalty);
            ob.A.push_back({balance[r], shed, 1.0});
            layout.shed_columns.push_back(shed);
          }
          for (int l = 0; l < xl.L; ++l) {
            const Line& line = cfg.lines[l];
            const int a = region_index(line.from);
            const int z = region_index(line.to);
            for (int dir = 0; dir < 2; ++dir) {
              const int src = dir == 0 ? a : z;
              const int dst = dir == 0 ? z : a;
              const int flow = ob.var(0.0);
              const int lim = ob.row(RowSense::kLessEqual, 0.0);
              ob.A.push_back({lim, flow, 1.0});
              ob.B.push_back({lim, xl.line_cap(l), 1.0});
              ob.A.push_back({balance[src], flow, -1.0});
              ob.A.push_back({balance[dst], flow, 1.0 - line.loss});
            }
          }
        }
        // Close each storage cycle: the first hour follows the last.
        for (std::size_t slot = 0; slot < first_soc.size(); ++slot) {
          if (first_soc[slot] >= 0) ob.A.push_back({first_balance[slot], prev_soc[slot], -1.0});
        }
      }

      scenario::OperationalTemplate ot;
      std::vector<int> demand_rows = layout.balance_rows;
      if (!cfg.emission_cap.empty()) {
        layout.emission_row = ob.row(RowSense::kLessEqual, 1.0);
        for (const Triplet& t : emission_terms) ob.A.push_back({layout.emission_row, t.col, t.value});
        ot.rhs_targets.push_back({"co2_cap", {layout.emission_row}});
      }
      ot.rhs_targets.push_back({"demand", demand_rows});
      const int rows = static_cast<int>(ob.b.size());
      const int cols = static_cast<int>(ob.c.size());
      ot.data.A = SparseMatrix(rows, cols, std::move(ob.A));
      ot.data.B = SparseMatrix(rows, xl.size(), std::move(ob.B));
      ot.data.C = ob.C.empty() ? SparseMatrix(0, cols) : SparseMatrix(P, cols, std::move(ob.C));
      ot.data.b = std::move(ob.b);
      ot.data.c = std::move(ob.c);
      ot.data.y_lower = std::move(ob.lower);
      ot.data.y_upper = std::move(ob.upper);
      ot.data.senses = std::move(ob.senses);
      ops.push_back(std::move(ot));
      out.layout = layout;
    }
    tmpl.operational.push_back(std::move(ops));
  }
  for (const auto& st : tmpl.strategic) tmpl.metadata.stage_labels.push_back(st.labels);
  return out;
}

model::MhspInstance build_instance(const EnergyConfig& config, const std::vector<scenario::ShortTermScenario>& shorts,
                                   const SeriesLayout& series, const scenario::LongTermTree& tree) {
  const EnergyModel em = energy_template(config, shorts, series);
  return scenario::combine_trees(tree, em.tmpl);
}

model::MhspInstance build_instance(const EnergyConfig& config, const scenario::TimeSeriesArchive& archive,
                                   std::uint64_t seed) {
  return build_instance(config, generate_short_scenarios(config, archive, seed), SeriesLayout::of(archive),
                        energy_long_term_tree(config));
}

std::vector<double> group_capacity(const EnergyConfig& config, const model::MhspInstance& instance,
                                   const std::vector<double>& x, int node) {
  const auto& groups = technology_groups();
  const XLayout xl{static_cast<int>(config.regions.size()), static_cast<int>(config.technologies.size()),
                   static_cast<int>(config.lines.size())};
  const std::vector<double> local = model::extract_subvector(instance, node, x);
  if (static_cast<int>(local.size()) != xl.size()) throw DimensionError("node layout does not match the config");
  std::vector<double> out(groups.size(), 0.0);
  for (int r = 0; r < xl.R; ++r) {
    for (int g = 0; g < xl.G; ++g) {
      const auto k = std::find(groups.begin(), groups.end(), config.technologies[g].group) - groups.begin();
      out[k] += local[xl.cap(r, g)];
    }
  }
  const auto tr = std::find(groups.begin(), groups.end(), "transmission") - groups.begin();
  for (int l = 0; l < xl.L; ++l) out[tr] += local[xl.line_cap(l)];
  return out;
}

}  // namespace mhsp::energy
