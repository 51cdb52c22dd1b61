#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "forage/cohort.hpp"
#include "forage/feature_matrix.hpp"
#include "forage/geo.hpp"
#include "forage/matrix.hpp"
#include "forage/rng.hpp"
#include "forage/time.hpp"

namespace forage::testing {

inline LatLon offset_meters(const LatLon& p, double east, double north) {
  const double k = kEarthRadiusMeters * std::numbers::pi / 180.0;
  return {p.lat + north / k, p.lon + east / (k * std::cos(p.lat * std::numbers::pi / 180.0))};
}

inline MinuteRecord record_at(Minute t, LatLon where, double activity = 0.0) {
  MinuteRecord r;
  r.timestamp = t;
  r.position = where;
  r.activity = activity;
  r.axis2 = activity / 2;
  r.axis3 = activity / 3;
  r.vector_mag = activity;
  r.lux = 10.0;
  r.wearing = true;
  r.day_of_week = weekday_index(t);
  return r;
}

struct RandomCohortSpec {
  std::size_t participants = 4;
  std::size_t minutes = 200;
  double event_rate = 0.05;
  bool gaps = true;
  bool sleep_window = true;  // start at 02:50 so 03:00-04:00 is covered
};

/// Participants wander near a fixed center with occasional clock gaps and
/// random events of every type.
inline Cohort random_cohort(Rng& rng, const RandomCohortSpec& spec = {}) {
  Cohort c;
  const LatLon center{32.8, -117.0};
  for (std::size_t p = 0; p < spec.participants; ++p) {
    Participant part;
    part.id = "R" + std::to_string(100 + p);
    const LatLon home = offset_meters(center, rng.uniform(-3000, 3000), rng.uniform(-3000, 3000));
    Minute t = make_minute(2023, 3, 6 + static_cast<unsigned>(rng.below(7)), spec.sleep_window ? 2 : 9, 50);
    for (std::size_t i = 0; i < spec.minutes; ++i) {
      const LatLon at = rng.bernoulli(0.7) ? offset_meters(home, rng.uniform(-10, 10), rng.uniform(-10, 10))
                                            : offset_meters(home, rng.uniform(-2000, 2000), rng.uniform(-2000, 2000));
      part.records.push_back(record_at(t, at, static_cast<double>(rng.below(3000))));
      for (std::size_t e = 0; e < kEventTypeCount; ++e) {
        if (rng.bernoulli(spec.event_rate)) part.events.add(static_cast<EventType>(e), t);
      }
      t = t + ((spec.gaps && rng.bernoulli(0.05)) ? static_cast<std::int64_t>(2 + rng.below(30)) : 1);
    }
    part.events.normalize();
    c.participants.push_back(std::move(part));
  }
  return c;
}

inline std::vector<Outlet> random_outlets(Rng& rng, std::size_t per_category) {
  std::vector<Outlet> out;
  const LatLon center{32.8, -117.0};
  for (std::size_t c = 0; c < kOutletCategoryCount; ++c) {
    for (std::size_t k = 0; k < per_category; ++k) {
      out.push_back({static_cast<OutletCategory>(c),
                     offset_meters(center, rng.uniform(-4000, 4000), rng.uniform(-4000, 4000))});
    }
  }
  return out;
}

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("forage_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace forage::testing
