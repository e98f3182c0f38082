#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mhsp/common/json_io.hpp"
#include "mhsp/common/random.hpp"

namespace mhsp::scenario {

// Hourly series by (kind, region, year). Hours are 0-based internally; the
// year is split into `seasons` contiguous blocks of equal length.
class TimeSeriesArchive {
 public:
  TimeSeriesArchive() = default;
  TimeSeriesArchive(std::vector<std::string> kinds, std::vector<std::string> regions,
                    std::vector<int> years, int hours, int seasons = 4);

  const std::vector<std::string>& kinds() const { return kinds_; }
  const std::vector<std::string>& regions() const { return regions_; }
  const std::vector<int>& years() const { return years_; }
  int hours() const { return hours_; }
  int seasons() const { return seasons_; }
  int season_length() const { return hours_ / seasons_; }

  int kind_index(const std::string& kind) const;
  int region_index(const std::string& region) const;

  double* series(int kind, int region, int year);
  const double* series(int kind, int region, int year) const;
  double value(int kind, int region, int year, int hour) const { return series(kind, region, year)[hour]; }

 private:
  std::vector<std::string> kinds_;
  std::vector<std::string> regions_;
  std::vector<int> years_;
  int hours_ = 0;
  int seasons_ = 4;
  std::vector<double> data_;
};

// Delimited text with columns year,hour,region,series_kind,value (hour is
// 1-based). A header row is optional. Every (kind, region, year) must cover
// hours 1..H exactly once. Errors carry the offending line number.
TimeSeriesArchive read_archive_csv(const std::string& text, int seasons = 4);
TimeSeriesArchive load_archive_csv(const std::string& path, int seasons = 4);
std::string write_archive_csv(const TimeSeriesArchive& archive);

struct SyntheticArchiveSpec {
  std::vector<std::string> regions{"north", "south"};
  std::vector<int> years{2015, 2016, 2017};
  int hours = 8760;
  std::uint64_t seed = 1;
};

// Load, wind and solar series with daily and seasonal shape plus noise.
TimeSeriesArchive synthetic_archive(const SyntheticArchiveSpec& spec);

struct SeasonSpec {
  int regular_length = 24;  // l
  int peak_count = 0;       // |S^P|
  int peak_length = 1;      // l-hat, odd
  std::string load_kind = "load";

  void validate(const TimeSeriesArchive& archive) const;
};

struct ScenarioBlock {
  bool peak = false;
  int season = 0;  // regular seasons first, then peaks
  int start = 0;   // 0-based hour in the year
  int length = 0;
  int centre = -1;  // generating peak hour, -1 for regular blocks
  // values[kind][region][h]
  std::vector<std::vector<std::vector<double>>> values;

  friend bool operator==(const ScenarioBlock&, const ScenarioBlock&) = default;
};

struct ShortTermScenario {
  int year = 0;  // calendar year of the source
  double probability = 1.0;
  std::vector<ScenarioBlock> blocks;

  friend bool operator==(const ShortTermScenario&, const ShortTermScenario&) = default;
};

// Valid 1-based offsets within a season are [1, season_length - l - 1].
int max_regular_offset(const TimeSeriesArchive& archive, const SeasonSpec& spec);

ScenarioBlock cut_block(const TimeSeriesArchive& archive, int year_index, int start, int length);

ShortTermScenario sample_regular_seasons(const TimeSeriesArchive& archive, const SeasonSpec& spec, Rng& rng);
ShortTermScenario add_peak_seasons(const TimeSeriesArchive& archive, const SeasonSpec& spec,
                                   ShortTermScenario scenario);
std::vector<ShortTermScenario> generate_random_scenarios(const TimeSeriesArchive& archive,
                                                         const SeasonSpec& spec, int count, Rng& rng);

using Moments = std::array<double, 4>;  // mean, variance, skewness, kurtosis

Moments compute_moments(const std::vector<double>& values);

// Moments per (region n, season s), stored at [n * seasons + s].
struct MomentTable {
  int regions = 0;
  int seasons = 0;
  std::vector<Moments> entries;

  const Moments& at(int n, int s) const { return entries[n * seasons + s]; }
};

inline constexpr std::array<double, 4> kDefaultMomentWeights{10.0, 5.0, 1.0, 0.5};

// Moments of every load value in each season, over all archive years.
MomentTable reference_moments(const TimeSeriesArchive& archive, const SeasonSpec& spec);
// Moments of the empirical load distribution of a candidate tree (its regular
// blocks only).
MomentTable tree_moments(const TimeSeriesArchive& archive, const SeasonSpec& spec,
                         const std::vector<ShortTermScenario>& tree);

// sum_n sum_s (M_1ns / sum_n' M_1n's) sum_i alpha_i |(m_ins - M_ins) / M_ins|.
// A zero reference moment raises ValidationError naming (i, n, s).
double moment_distance(const MomentTable& candidate, const MomentTable& reference,
                       const std::array<double, 4>& alpha = kDefaultMomentWeights);

struct MomentMatchResult {
  std::vector<ShortTermScenario> tree;
  int winner = 0;
  std::vector<double> distances;
};

MomentMatchResult generate_moment_matched(const TimeSeriesArchive& archive, const SeasonSpec& spec,
                                          int n_candidates, int scenarios_per_tree, Rng& rng,
                                          const std::array<double, 4>& alpha = kDefaultMomentWeights);

// growth[t - 1] maps a series kind to its factor at stage t; unlisted kinds
// keep factor 1. Returns one scenario per stage, stage 0 unchanged.
std::vector<ShortTermScenario> scale_future_periods(const ShortTermScenario& scenario,
                                                    const TimeSeriesArchive& archive,
                                                    const std::vector<std::map<std::string, double>>& growth);

Json scenarios_to_json(const TimeSeriesArchive& archive, const std::vector<ShortTermScenario>& tree);
std::vector<ShortTermScenario> scenarios_from_json(const Json& value);

}  // namespace mhsp::scenario
