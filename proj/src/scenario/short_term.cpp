#include "mhsp/scenario/short_term.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <set>
#include <sstream>

#include "mhsp/common/error.hpp"

namespace mhsp::scenario {

namespace {

int index_of(const std::vector<std::string>& names, const std::string& name, const char* what) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError(std::string("unknown ") + what + " '" + name + "'");
  return static_cast<int>(it - names.begin());
}

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

template <typename T>
T parse_field(const std::string& field, int line, const char* what) {
  T value{};
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("line " + std::to_string(line) + ": bad " + what + " '" + field + "'");
  }
  return value;
}

}  // namespace

TimeSeriesArchive::TimeSeriesArchive(std::vector<std::string> kinds, std::vector<std::string> regions,
                                     std::vector<int> years, int hours, int seasons)
    : kinds_(std::move(kinds)), regions_(std::move(regions)), years_(std::move(years)), hours_(hours), seasons_(seasons) {
  if (seasons_ < 1) throw ValidationError("season count must be positive");
  if (hours_ < seasons_ || hours_ % seasons_ != 0) {
    throw ValidationError("hours per year (" + std::to_string(hours_) + ") must be a multiple of the season count (" +
                          std::to_string(seasons_) + ")");
  }
  if (kinds_.empty() || regions_.empty() || years_.empty()) throw ValidationError("archive needs kinds, regions and years");
  data_.assign(kinds_.size() * regions_.size() * years_.size() * static_cast<std::size_t>(hours_), 0.0);
}

int TimeSeriesArchive::kind_index(const std::string& kind) const { return index_of(kinds_, kind, "series kind"); }
int TimeSeriesArchive::region_index(const std::string& region) const { return index_of(regions_, region, "region"); }

double* TimeSeriesArchive::series(int kind, int region, int year) {
  const std::size_t slot = (static_cast<std::size_t>(kind) * regions_.size() + region) * years_.size() + year;
  return data_.data() + slot * hours_;
}

const double* TimeSeriesArchive::series(int kind, int region, int year) const {
  return const_cast<TimeSeriesArchive*>(this)->series(kind, region, year);
}

TimeSeriesArchive read_archive_csv(const std::string& text, int seasons) {
  struct Record {
    int year;
    int hour;
    std::string region;
    std::string kind;
    double value;
    int line;
  };
  std::vector<Record> records;
  std::vector<std::string> kinds;
  std::vector<std::string> regions;
  std::set<int> years;
  int hours = 0;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string row = trim(raw);
    if (row.empty() || row[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(row);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    if (fields.size() != 5) {
      throw ParseError("line " + std::to_string(line) + ": expected 5 columns, found " + std::to_string(fields.size()));
    }
    if (records.empty() && fields[0] == "year") continue;
    Record r{parse_field<int>(fields[0], line, "year"), parse_field<int>(fields[1], line, "hour"), fields[2], fields[3],
             parse_field<double>(fields[4], line, "value"), line};
    if (r.hour < 1) throw ParseError("line " + std::to_string(line) + ": hours start at 1");
    if (!std::isfinite(r.value)) throw ParseError("line " + std::to_string(line) + ": value is not finite");
    if (std::find(kinds.begin(), kinds.end(), r.kind) == kinds.end()) kinds.push_back(r.kind);
    if (std::find(regions.begin(), regions.end(), r.region) == regions.end()) regions.push_back(r.region);
    years.insert(r.year);
    hours = std::max(hours, r.hour);
    records.push_back(std::move(r));
  }
  if (records.empty()) throw ParseError("archive has no data rows");

  TimeSeriesArchive archive(kinds, regions, std::vector<int>(years.begin(), years.end()), hours, seasons);
  std::vector<int> seen_line(kinds.size() * regions.size() * years.size() * hours, 0);
  const std::vector<int> year_list(years.begin(), years.end());
  for (const Record& r : records) {
    const int k = archive.kind_index(r.kind);
    const int n = archive.region_index(r.region);
    const int y = static_cast<int>(std::lower_bound(year_list.begin(), year_list.end(), r.year) - year_list.begin());
    const std::size_t slot = ((static_cast<std::size_t>(k) * regions.size() + n) * years.size() + y) * hours + r.hour - 1;
    if (seen_line[slot]) {
      throw ParseError("line " + std::to_string(r.line) + ": duplicate entry (first on line " +
                       std::to_string(seen_line[slot]) + ")");
    }
    seen_line[slot] = r.line;
    archive.series(k, n, y)[r.hour - 1] = r.value;
  }
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    for (std::size_t n = 0; n < regions.size(); ++n) {
      for (std::size_t y = 0; y < years.size(); ++y) {
        for (int h = 0; h < hours; ++h) {
          const std::size_t slot = ((k * regions.size() + n) * years.size() + y) * hours + h;
          if (!seen_line[slot]) {
            throw ValidationError("archive incomplete: " + kinds[k] + "/" + regions[n] + "/" +
                                  std::to_string(year_list[y]) + " lacks hour " + std::to_string(h + 1));
          }
        }
      }
    }
  }
  return archive;
}

TimeSeriesArchive load_archive_csv(const std::string& path, int seasons) {
  return read_archive_csv(read_text_file(path), seasons);
}

std::string write_archive_csv(const TimeSeriesArchive& archive) {
  std::ostringstream out;
  out.precision(17);
  out << "year,hour,region,series_kind,value\n";
  for (std::size_t y = 0; y < archive.years().size(); ++y) {
    for (std::size_t n = 0; n < archive.regions().size(); ++n) {
      for (std::size_t k = 0; k < archive.kinds().size(); ++k) {
        const double* s = archive.series(static_cast<int>(k), static_cast<int>(n), static_cast<int>(y));
        for (int h = 0; h < archive.hours(); ++h) {
          out << archive.years()[y] << ',' << h + 1 << ',' << archive.regions()[n] << ',' << archive.kinds()[k]
              << ',' << s[h] << '\n';
        }
      }
    }
  }
  return out.str();
}

TimeSeriesArchive synthetic_archive(const SyntheticArchiveSpec& spec) {
  TimeSeriesArchive archive({"load", "wind", "solar"}, spec.regions, spec.years, spec.hours);
  Rng rng(spec.seed);
  const double two_pi = 2.0 * 3.14159265358979323846;
  const int H = spec.hours;
  for (std::size_t n = 0; n < spec.regions.size(); ++n) {
    const double base = 10.0 + 4.0 * static_cast<double>(n);
    const double phase = 0.3 * static_cast<double>(n);
    for (std::size_t y = 0; y < spec.years.size(); ++y) {
      double* load = archive.series(0, static_cast<int>(n), static_cast<int>(y));
      double* wind = archive.series(1, static_cast<int>(n), static_cast<int>(y));
      double* solar = archive.series(2, static_cast<int>(n), static_cast<int>(y));
      double noise = 0.0;
      double gust = 0.0;
      double cloud = 0.0;
      for (int h = 0; h < H; ++h) {
        const double season = std::cos(two_pi * h / H);  // winter high
        const double day = std::sin(two_pi * (h % 24 - 6) / 24.0);
        noise = 0.9 * noise + 0.05 * rng.normal();
        gust = 0.95 * gust + 0.25 * rng.normal();
        cloud = 0.8 * cloud + 0.2 * rng.normal();
        load[h] = base * (1.0 + 0.2 * season + 0.12 * day + noise);
        load[h] = std::max(load[h], 0.2 * base);
        wind[h] = 1.0 / (1.0 + std::exp(-(gust + 0.4 * season - 0.3 + phase)));
        const double sun = std::max(0.0, day) * (0.7 - 0.3 * season);
        solar[h] = std::clamp(sun * (1.0 - 0.4 / (1.0 + std::exp(-2.0 * cloud))), 0.0, 1.0);
      }
    }
  }
  return archive;
}

void SeasonSpec::validate(const TimeSeriesArchive& archive) const {
  const int season = archive.season_length();
  if (regular_length < 1) throw ValidationError("regular season length must be positive");
  if (regular_length > season - 2) {
    throw ValidationError("regular season length " + std::to_string(regular_length) +
                          " leaves no valid offset in a season of " + std::to_string(season) + " hours");
  }
  if (peak_count < 0) throw ValidationError("peak count must be nonnegative");
  if (peak_count > 0) {
    if (peak_length < 1 || peak_length % 2 == 0) throw ValidationError("peak length must be odd");
    if (peak_length >= regular_length) throw ValidationError("peak length must be shorter than the regular length");
    if (peak_count > static_cast<int>(archive.regions().size()) + 1) {
      throw ValidationError("at most " + std::to_string(archive.regions().size() + 1) + " peak seasons for " +
                            std::to_string(archive.regions().size()) + " regions");
    }
  }
  archive.kind_index(load_kind);
}

int max_regular_offset(const TimeSeriesArchive& archive, const SeasonSpec& spec) {
  return archive.season_length() - spec.regular_length - 1;
}

ScenarioBlock cut_block(const TimeSeriesArchive& archive, int year_index, int start, int length) {
  if (start < 0 || start + length > archive.hours()) throw ValidationError("block outside the year");
  ScenarioBlock block;
  block.start = start;
  block.length = length;
  block.values.resize(archive.kinds().size());
  for (std::size_t k = 0; k < archive.kinds().size(); ++k) {
    block.values[k].resize(archive.regions().size());
    for (std::size_t n = 0; n < archive.regions().size(); ++n) {
      const double* s = archive.series(static_cast<int>(k), static_cast<int>(n), year_index);
      block.values[k][n].assign(s + start, s + start + length);
    }
  }
  return block;
}

ShortTermScenario sample_regular_seasons(const TimeSeriesArchive& archive, const SeasonSpec& spec, Rng& rng) {
  spec.validate(archive);
  ShortTermScenario scenario;
  const int y = static_cast<int>(rng.integer(0, static_cast<std::int64_t>(archive.years().size()) - 1));
  scenario.year = archive.years()[y];
  const int hi = max_regular_offset(archive, spec);
  for (int s = 0; s < archive.seasons(); ++s) {
    const int h = static_cast<int>(rng.integer(1, hi));
    ScenarioBlock block = cut_block(archive, y, s * archive.season_length() + h - 1, spec.regular_length);
    block.season = s;
    scenario.blocks.push_back(std::move(block));
  }
  return scenario;
}

ShortTermScenario add_peak_seasons(const TimeSeriesArchive& archive, const SeasonSpec& spec,
                                   ShortTermScenario scenario) {
  spec.validate(archive);
  if (spec.peak_count == 0) return scenario;
  const auto yit = std::find(archive.years().begin(), archive.years().end(), scenario.year);
  if (yit == archive.years().end()) throw ValidationError("scenario year " + std::to_string(scenario.year) + " not in archive");
  const int y = static_cast<int>(yit - archive.years().begin());
  const int load = archive.kind_index(spec.load_kind);
  const int H = archive.hours();
  const int R = static_cast<int>(archive.regions().size());

  auto window = [&](int centre, int index) {
    const int half = (spec.peak_length - 1) / 2;
    const int start = std::clamp(centre - half, 0, H - spec.peak_length);
    ScenarioBlock block = cut_block(archive, y, start, spec.peak_length);
    block.peak = true;
    block.season = archive.seasons() + index;
    block.centre = centre;
    return block;
  };

  // Aggregate peak first.
  int best_h = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int h = 0; h < H; ++h) {
    double total = 0.0;
    for (int n = 0; n < R; ++n) total += archive.value(load, n, y, h);
    if (total > best) {
      best = total;
      best_h = h;
    }
  }
  scenario.blocks.push_back(window(best_h, 0));

  // Then regional peaks, retiring each region once its peak is used.
  std::vector<bool> remaining(R, true);
  for (int k = 1; k < spec.peak_count; ++k) {
    int arg_h = -1;
    int arg_n = -1;
    double top = -std::numeric_limits<double>::infinity();
    for (int h = 0; h < H; ++h) {
      for (int n = 0; n < R; ++n) {
        if (!remaining[n]) continue;
        const double v = archive.value(load, n, y, h);
        if (v > top) {
          top = v;
          arg_h = h;
          arg_n = n;
        }
      }
    }
    remaining[arg_n] = false;
    scenario.blocks.push_back(window(arg_h, k));
  }
  return scenario;
}

std::vector<ShortTermScenario> generate_random_scenarios(const TimeSeriesArchive& archive, const SeasonSpec& spec,
                                                         int count, Rng& rng) {
  if (count < 1) throw ValidationError("scenario count must be positive");
  std::vector<ShortTermScenario> out;
  for (int w = 0; w < count; ++w) {
    ShortTermScenario s = add_peak_seasons(archive, spec, sample_regular_seasons(archive, spec, rng));
    s.probability = 1.0 / count;
    out.push_back(std::move(s));
  }
  return out;
}

Moments compute_moments(const std::vector<double>& values) {
  if (values.size() < 2) throw ValidationError("moments need at least two values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 == 0.0) return {mean, 0.0, 0.0, 0.0};
  return {mean, m2, m3 / (m2 * std::sqrt(m2)), m4 / (m2 * m2)};
}

MomentTable reference_moments(const TimeSeriesArchive& archive, const SeasonSpec& spec) {
  const int load = archive.kind_index(spec.load_kind);
  const int R = static_cast<int>(archive.regions().size());
  const int S = archive.seasons();
  const int L = archive.season_length();
  MomentTable table{R, S, {}};
  for (int n = 0; n < R; ++n) {
    for (int s = 0; s < S; ++s) {
      std::vector<double> values;
      for (std::size_t y = 0; y < archive.years().size(); ++y) {
        const double* series = archive.series(load, n, static_cast<int>(y));
        values.insert(values.end(), series + s * L, series + (s + 1) * L);
      }
      table.entries.push_back(compute_moments(values));
    }
  }
  return table;
}

MomentTable tree_moments(const TimeSeriesArchive& archive, const SeasonSpec& spec,
                         const std::vector<ShortTermScenario>& tree) {
  const int load = archive.kind_index(spec.load_kind);
  const int R = static_cast<int>(archive.regions().size());
  const int S = archive.seasons();
  MomentTable table{R, S, {}};
  for (int n = 0; n < R; ++n) {
    for (int s = 0; s < S; ++s) {
      std::vector<double> values;
      for (const ShortTermScenario& sc : tree) {
        for (const ScenarioBlock& b : sc.blocks) {
          if (!b.peak && b.season == s) values.insert(values.end(), b.values[load][n].begin(), b.values[load][n].end());
        }
      }
      table.entries.push_back(compute_moments(values));
    }
  }
  return table;
}

double moment_distance(const MomentTable& candidate, const MomentTable& reference, const std::array<double, 4>& alpha) {
  if (candidate.regions != reference.regions || candidate.seasons != reference.seasons) {
    throw DimensionError("moment tables cover different regions or seasons");
  }
  static const char* names[4] = {"mean", "variance", "skewness", "kurtosis"};
  double total = 0.0;
  for (int s = 0; s < reference.seasons; ++s) {
    double mean_sum = 0.0;
    for (int n = 0; n < reference.regions; ++n) mean_sum += reference.at(n, s)[0];
    for (int n = 0; n < reference.regions; ++n) {
      const Moments& M = reference.at(n, s);
      const Moments& m = candidate.at(n, s);
      double inner = 0.0;
      for (int i = 0; i < 4; ++i) {
        if (M[i] == 0.0) {
          throw ValidationError(std::string("reference ") + names[i] + " is zero (moment " + std::to_string(i + 1) +
                                ", region " + std::to_string(n) + ", season " + std::to_string(s) + ")");
        }
        inner += alpha[i] * std::abs((m[i] - M[i]) / M[i]);
      }
      total += M[0] / mean_sum * inner;
    }
  }
  return total;
}

MomentMatchResult generate_moment_matched(const TimeSeriesArchive& archive, const SeasonSpec& spec, int n_candidates,
                                          int scenarios_per_tree, Rng& rng, const std::array<double, 4>& alpha) {
  if (n_candidates < 1) throw ValidationError("need at least one candidate tree");
  if (scenarios_per_tree < 1) throw ValidationError("need at least one scenario per tree");
  const MomentTable reference = reference_moments(archive, spec);
  MomentMatchResult result;
  std::vector<std::vector<ShortTermScenario>> candidates;
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < n_candidates; ++t) {
    std::vector<ShortTermScenario> tree;
    for (int w = 0; w < scenarios_per_tree; ++w) {
      tree.push_back(sample_regular_seasons(archive, spec, rng));
      tree.back().probability = 1.0 / scenarios_per_tree;
    }
    const double d = moment_distance(tree_moments(archive, spec, tree), reference, alpha);
    result.distances.push_back(d);
    if (d < best) {
      best = d;
      result.winner = t;
    }
    candidates.push_back(std::move(tree));
  }
  result.tree = std::move(candidates[result.winner]);
  for (ShortTermScenario& s : result.tree) s = add_peak_seasons(archive, spec, std::move(s));
  return result;
}

std::vector<ShortTermScenario> scale_future_periods(const ShortTermScenario& scenario, const TimeSeriesArchive& archive,
                                                    const std::vector<std::map<std::string, double>>& growth) {
  std::vector<ShortTermScenario> stages{scenario};
  for (std::size_t t = 0; t < growth.size(); ++t) {
    std::vector<double> factor(archive.kinds().size(), 1.0);
    for (const auto& [kind, f] : growth[t]) {
      if (!(f > 0.0)) {
        throw ValidationError("growth factor for '" + kind + "' at stage " + std::to_string(t + 1) + " must be positive");
      }
      factor[archive.kind_index(kind)] = f;
    }
    ShortTermScenario scaled = scenario;
    for (ScenarioBlock& b : scaled.blocks) {
      for (std::size_t k = 0; k < b.values.size(); ++k) {
        for (auto& series : b.values[k]) {
          for (double& v : series) v *= factor[k];
        }
      }
    }
    stages.push_back(std::move(scaled));
  }
  return stages;
}

Json scenarios_to_json(const TimeSeriesArchive& archive, const std::vector<ShortTermScenario>& tree) {
  Json out{{"format", "mhsp-short-scenarios"}, {"version", 1}, {"kinds", archive.kinds()}, {"regions", archive.regions()}};
  Json list = Json::array();
  for (const ShortTermScenario& s : tree) {
    Json blocks = Json::array();
    for (const ScenarioBlock& b : s.blocks) {
      blocks.push_back({{"peak", b.peak}, {"season", b.season}, {"start", b.start}, {"length", b.length},
                        {"centre", b.centre}, {"values", b.values}});
    }
    list.push_back({{"year", s.year}, {"probability", s.probability}, {"blocks", blocks}});
  }
  out["scenarios"] = list;
  return out;
}

std::vector<ShortTermScenario> scenarios_from_json(const Json& value) {
  if (value.value("format", "") != "mhsp-short-scenarios") throw ParseError("not a short-term scenario document");
  std::vector<ShortTermScenario> tree;
  try {
    for (const Json& s : require(value, "scenarios")) {
      ShortTermScenario sc;
      sc.year = require(s, "year").get<int>();
      sc.probability = require(s, "probability").get<double>();
      for (const Json& b : require(s, "blocks")) {
        ScenarioBlock block;
        block.peak = require(b, "peak").get<bool>();
        block.season = require(b, "season").get<int>();
        block.start = require(b, "start").get<int>();
        block.length = require(b, "length").get<int>();
        block.centre = require(b, "centre").get<int>();
        block.values = require(b, "values").get<std::vector<std::vector<std::vector<double>>>>();
        sc.blocks.push_back(std::move(block));
      }
      tree.push_back(std::move(sc));
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("short-term scenarios: ") + e.what());
  }
  return tree;
}

}  // namespace mhsp::scenario
