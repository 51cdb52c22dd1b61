#include "forage/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forage/error.hpp"
#include "forage/parallel.hpp"

namespace forage {

std::string_view to_string(Problem p) {
  return p == Problem::Eating ? "eating" : "purchasing";
}

std::optional<Problem> parse_problem(std::string_view text) {
  if (text == "eating") return Problem::Eating;
  if (text == "purchasing") return Problem::Purchasing;
  return std::nullopt;
}

void TimePatternSpec::validate() const {
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto& iv = intervals[i];
    if (iv.start < 0 || iv.end > kMinutesPerDay || iv.start >= iv.end) {
      throw ConfigError("time_pattern", "time-pattern interval " + std::to_string(i) + " is empty or out of range");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const auto& other = intervals[j];
      if (iv.start < other.end && other.start < iv.end) {
        throw ConfigError("time_pattern", "time-pattern intervals overlap");
      }
    }
  }
}

std::array<double, 6> time_range_onehot(Minute m) {
  static constexpr int upper[] = {6 * 60, 10 * 60, 14 * 60, 17 * 60, 20 * 60, 24 * 60};
  const int mod = minute_of_day(m);
  std::array<double, 6> out{};
  for (std::size_t i = 0; i < 6; ++i) {
    if (mod < upper[i]) {
      out[i] = 1.0;
      break;
    }
  }
  return out;
}

double time_pattern(Minute m, const TimePatternSpec& spec) {
  const double mod = minute_of_day(m);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& iv : spec.intervals) best = std::min(best, std::abs(mod - iv.midpoint()));
  return best;
}

double numeric_time(Minute m) {
  const int mod = minute_of_day(m);
  return mod / 60 + (mod % 60) / 60.0;
}

std::vector<double> time_since(std::span<const Minute> timestamps, std::span<const Minute> events,
                               int cap) {
  std::vector<double> out(timestamps.size());
  if (timestamps.empty()) return out;
  const Minute first = timestamps.front();
  std::size_t e = 0;
  std::optional<Minute> last_event;
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    const Minute t = timestamps[i];
    while (e < events.size() && events[e] <= t) last_event = events[e++];
    std::int64_t elapsed;
    if (last_event) {
      elapsed = t - *last_event;  // 0 when t itself is an event minute
    } else {
      elapsed = t - first;
    }
    out[i] = static_cast<double>(std::min<std::int64_t>(elapsed, cap));
  }
  return out;
}

BaseFeatures compute_base_features(const Cohort& cohort, std::span<const Outlet> outlets,
                                   const HomeTable& homes, const FeatureOptions& options,
                                   std::size_t threads) {
  options.time_pattern.validate();
  BaseFeatures base;
  const std::size_t n = cohort.record_count();
  const std::size_t participants = cohort.participants.size();
  base.participant_begin.resize(participants + 1, 0);
  for (std::size_t p = 0; p < participants; ++p) {
    base.participant_begin[p + 1] = base.participant_begin[p] + cohort.participants[p].records.size();
  }
  auto& m = base.matrix;
  m.values = Matrix(n, kFeatureCount);
  m.labels.assign(n, 0);
  m.groups.resize(n);
  m.timestamps.resize(n);
  m.participants = cohort.participant_ids();
  base.eating.assign(n, 0);
  base.purchasing.assign(n, 0);

  const OutletIndex index(outlets);

  parallel_for(participants, threads, [&](std::size_t p) {
    const Participant& part = cohort.participants[p];
    const std::size_t offset = base.participant_begin[p];
    std::vector<Minute> ts;
    ts.reserve(part.records.size());
    for (const auto& r : part.records) ts.push_back(r.timestamp);

    const auto since = [&](EventType type) {
      return time_since(ts, part.events.minutes(type), options.time_since_cap);
    };
    const auto since_eating = since(EventType::Eating);
    const auto since_purchasing = since(EventType::Purchasing);
    const auto since_sedentary = since(EventType::SedentaryBout);
    const auto since_pa = since(EventType::PaBout);
    const auto since_mvpa = since(EventType::MvpaBout);

    auto home_it = homes.find(part.id);
    const HomeLocation* home = home_it == homes.end() ? nullptr : &home_it->second;

    for (std::size_t k = 0; k < part.records.size(); ++k) {
      const auto& r = part.records[k];
      const std::size_t i = offset + k;
      auto row = m.values.row(i);
      row[col::kBias] = 1.0;
      row[col::kSinceEating] = since_eating[k];
      row[col::kSincePurchasing] = since_purchasing[k];
      const auto dist = index.nearest(r.position);
      for (std::size_t c = 0; c < kOutletCategoryCount; ++c) row[col::kDistFoodBeverage + c] = dist[c];
      row[col::kSinceSedentary] = since_sedentary[k];
      row[col::kSincePa] = since_pa[k];
      row[col::kSinceMvpa] = since_mvpa[k];
      row[col::kActivity] = r.activity;
      row[col::kAxis2] = r.axis2;
      row[col::kAxis3] = r.axis3;
      row[col::kGpsDistance] = r.gps_distance;
      row[col::kGpsSpeed] = r.gps_speed;
      row[col::kVectorMag] = r.vector_mag;
      row[col::kLux] = r.lux;
      row[col::kWearing] = r.wearing ? 1.0 : 0.0;
      row[col::kInHome] = in_home(r, home);
      row[col::kTimePattern] = time_pattern(r.timestamp, options.time_pattern);
      row[col::kMonday + static_cast<std::size_t>(r.day_of_week)] = 1.0;
      const auto ranges = time_range_onehot(r.timestamp);
      std::copy(ranges.begin(), ranges.end(), row.begin() + col::kTimeRange0);
      row[col::kNumericTime] = numeric_time(r.timestamp);

      m.groups[i] = static_cast<std::uint32_t>(p);
      m.timestamps[i] = r.timestamp;
      base.eating[i] = part.events.contains(EventType::Eating, r.timestamp) ? 1 : 0;
      base.purchasing[i] = part.events.contains(EventType::Purchasing, r.timestamp) ? 1 : 0;
    }
  });
  return base;
}

FeatureMatrix task_matrix(const BaseFeatures& base, const TaskSpec& task) {
  if (task.offset_minutes < 0 || task.offset_minutes > kMaxOffset) {
    throw ConfigError("offsets", "offset must be in 0..4, got " + std::to_string(task.offset_minutes));
  }
  const auto& src = base.matrix;
  const auto& events = task.problem == Problem::Eating ? base.eating : base.purchasing;
  FeatureMatrix out;
  out.participants = src.participants;

  std::vector<std::size_t> keep;
  std::vector<std::uint8_t> labels;
  keep.reserve(src.rows());
  labels.reserve(src.rows());
  const std::size_t participants = base.participant_begin.size() - 1;
  for (std::size_t p = 0; p < participants; ++p) {
    const std::size_t begin = base.participant_begin[p];
    const std::size_t end = base.participant_begin[p + 1];
    for (std::size_t i = begin; i < end; ++i) {
      const Minute target = src.timestamps[i] + task.offset_minutes;
      // Timestamps are strictly increasing, so the target row, if any, lies
      // within the next `offset` rows.
      std::optional<std::size_t> hit;
      for (std::size_t j = i; j < end && j <= i + static_cast<std::size_t>(task.offset_minutes); ++j) {
        if (src.timestamps[j] == target) {
          hit = j;
          break;
        }
        if (src.timestamps[j] > target) break;
      }
      if (!hit) continue;
      keep.push_back(i);
      labels.push_back(events[*hit]);
    }
  }
  out.values = src.values.select_rows(keep);
  out.labels = std::move(labels);
  out.groups.reserve(keep.size());
  out.timestamps.reserve(keep.size());
  for (auto i : keep) {
    out.groups.push_back(src.groups[i]);
    out.timestamps.push_back(src.timestamps[i]);
  }
  for (double v : out.values.data()) {
    if (!std::isfinite(v)) throw DataError("non-finite value produced by featurization");
  }
  return out;
}

FeatureMatrix build_matrix(const Cohort& cohort, std::span<const Outlet> outlets,
                           const HomeTable& homes, const TaskSpec& task,
                           const FeatureOptions& options) {
  return task_matrix(compute_base_features(cohort, outlets, homes, options), task);
}

}  // namespace forage
