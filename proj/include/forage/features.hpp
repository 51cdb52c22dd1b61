#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "forage/cohort.hpp"
#include "forage/feature_matrix.hpp"
#include "forage/geo.hpp"

namespace forage {

enum class Problem { Eating = 0, Purchasing };

std::string_view to_string(Problem p);
std::optional<Problem> parse_problem(std::string_view text);

/// One prediction task: label minute t with the event status of minute t + offset.
struct TaskSpec {
  Problem problem = Problem::Eating;
  int offset_minutes = 0;  // 0..4

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

inline constexpr int kMaxOffset = 4;

/// Three meal-time clock intervals; the feature is the distance to the
/// nearest interval midpoint.
struct TimePatternSpec {
  struct Interval {
    int start;  // minutes past midnight
    int end;
    double midpoint() const { return 0.5 * (start + end); }
  };
  std::array<Interval, 3> intervals{{{6 * 60, 9 * 60}, {11 * 60, 14 * 60}, {17 * 60, 20 * 60}}};

  /// Throws ConfigError when intervals overlap or are empty.
  void validate() const;
};

struct FeatureOptions {
  TimePatternSpec time_pattern;
  int time_since_cap = 1440;
};

/// Indicators for [0,6), [6,10), [10,14), [14,17), [17,20), [20,24) hours.
std::array<double, 6> time_range_onehot(Minute m);

/// Minutes between the clock time and the nearest interval midpoint.
double time_pattern(Minute m, const TimePatternSpec& spec = {});

/// Hour of day plus minute/60.
double numeric_time(Minute m);

/// Per-minute counter: 0 on event minutes; otherwise minutes since the most
/// recent earlier event, or since the first timestamp when there is none;
/// always capped at `cap`. `timestamps` must be strictly increasing and
/// `events` sorted.
std::vector<double> time_since(std::span<const Minute> timestamps, std::span<const Minute> events,
                               int cap);

/// Task-independent feature rows for a whole cohort: every surviving minute,
/// plus per-row eating/purchasing flags from which task labels are derived.
struct BaseFeatures {
  FeatureMatrix matrix;  // labels unused (all zero)
  std::vector<std::uint8_t> eating;
  std::vector<std::uint8_t> purchasing;
  std::vector<std::size_t> participant_begin;  // row range per participant, size P+1
};

BaseFeatures compute_base_features(const Cohort& cohort, std::span<const Outlet> outlets,
                                   const HomeTable& homes, const FeatureOptions& options = {},
                                   std::size_t threads = 1);

/// Rows of `base` whose target minute t + offset exists for the same
/// participant, labeled by the task's event at that minute.
FeatureMatrix task_matrix(const BaseFeatures& base, const TaskSpec& task);

/// compute_base_features followed by task_matrix.
FeatureMatrix build_matrix(const Cohort& cohort, std::span<const Outlet> outlets,
                           const HomeTable& homes, const TaskSpec& task,
                           const FeatureOptions& options = {});

}  // namespace forage
