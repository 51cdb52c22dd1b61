#include "forage/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>

#include "forage/error.hpp"
#include "forage/feature_matrix.hpp"
#include "forage/geo.hpp"
#include "forage/rng.hpp"

namespace forage {

bool planted_rule(const SynthRule& rule, Problem problem, std::span<const double> row) {
  if (problem == Problem::Eating) {
    return row[col::kDistEating] <= rule.outlet_radius_m && row[col::kTimePattern] <= rule.meal_time_pattern_max;
  }
  return row[col::kDistFoodBeverage] <= rule.outlet_radius_m;
}

void SynthConfig::validate() const {
  const auto positive = [](std::size_t v, const char* field) {
    if (v < 1) throw ConfigError(field, std::string(field) + " must be >= 1");
  };
  const auto probability = [](double p, const char* field) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(field, std::string(field) + " must be in [0, 1]");
  };
  positive(n_participants, "n_participants");
  positive(days, "days");
  if (n_participants > 99999) throw ConfigError("n_participants", "n_participants must be <= 99999");
  if (minutes_per_day < 61 || minutes_per_day > 1080) {
    throw ConfigError("minutes_per_day", "minutes_per_day must be in [61, 1080]");
  }
  try {
    (void)parse_timestamp(start_date + "T00:00");
  } catch (const DataError&) {
    throw ConfigError("start_date", "start_date must be YYYY-MM-DD");
  }
  if (!(bbox.min_lat < bbox.max_lat && bbox.min_lon < bbox.max_lon) || bbox.min_lat < -89.0 ||
      bbox.max_lat > 89.0 || bbox.min_lon < -180.0 || bbox.max_lon > 180.0) {
    throw ConfigError("synth_bbox", "synthetic bbox must have min < max inside valid coordinates");
  }
  if (bbox.max_lat - bbox.min_lat < 0.05 || bbox.max_lon - bbox.min_lon < 0.05) {
    throw ConfigError("synth_bbox", "synthetic bbox must span at least 0.05 degrees on each axis");
  }
  for (std::size_t c = 0; c < kOutletCategoryCount; ++c) {
    if (outlet_counts[c] < 1) throw ConfigError("outlet_counts", "every outlet category needs at least one outlet");
  }
  probability(meal_probability, "meal_probability");
  probability(confuser_probability, "confuser_probability");
  probability(purchase_probability, "purchase_probability");
  probability(away_night_probability, "away_night_probability");
  probability(missing_gps_fraction, "missing_gps_fraction");
  probability(outlier_fraction, "outlier_fraction");
  if (missing_gps_fraction + outlier_fraction > 1.0) {
    throw ConfigError("outlier_fraction", "missing_gps_fraction + outlier_fraction must be <= 1");
  }
  if (!(gps_noise_m >= 0.0 && gps_noise_m <= 100.0)) throw ConfigError("gps_noise_m", "gps_noise_m must be in [0, 100]");
  if (!(home_jitter_m >= 0.0 && home_jitter_m <= 25.0)) {
    throw ConfigError("home_jitter_m", "home_jitter_m must be in [0, 25]");
  }
}

namespace {

constexpr double kMetersPerDegree = kEarthRadiusMeters * std::numbers::pi / 180.0;
constexpr double kTravelMetersPerMinute = 500.0;  // 30 km/h
constexpr int kWakeStart = 7 * 60;
constexpr double kMarginDegrees = 0.01;
constexpr double kMinOutletClearance = 300.0;
constexpr std::array<int, 3> kMealMidpoints = {450, 750, 1110};
constexpr int kMealSpread = 40;
constexpr std::size_t kOutletChoices = 5;
constexpr int kMaxAwayNights = 2;

LatLon shift(const LatLon& p, double east_m, double north_m) {
  const double lat = p.lat + north_m / kMetersPerDegree;
  const double lon = p.lon + east_m / (kMetersPerDegree * std::cos(p.lat * std::numbers::pi / 180.0));
  return {lat, lon};
}

/// Uniform point in a disk of `radius` meters around p.
LatLon jitter(const LatLon& p, double radius, Rng& rng) {
  const double r = radius * std::sqrt(rng.uniform());
  const double theta = 2.0 * std::numbers::pi * rng.uniform();
  return shift(p, r * std::cos(theta), r * std::sin(theta));
}

LatLon random_point(const BoundingBox& b, Rng& rng) {
  return {rng.uniform(b.min_lat + kMarginDegrees, b.max_lat - kMarginDegrees),
          rng.uniform(b.min_lon + kMarginDegrees, b.max_lon - kMarginDegrees)};
}

bool inside_margin(const BoundingBox& b, const LatLon& p) {
  return p.lat >= b.min_lat + kMarginDegrees && p.lat <= b.max_lat - kMarginDegrees &&
         p.lon >= b.min_lon + kMarginDegrees && p.lon <= b.max_lon - kMarginDegrees;
}

double clearance(const LatLon& p, std::span<const Outlet> outlets) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : outlets) best = std::min(best, haversine(p, o.position));
  return best;
}

/// A point inside the bbox at least 300 m from every outlet.
LatLon clear_point(const BoundingBox& b, std::span<const Outlet> outlets, Rng& rng) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const LatLon p = random_point(b, rng);
    if (clearance(p, outlets) >= kMinOutletClearance) return p;
  }
  throw ConfigError("outlet_counts", "outlets are too dense to place homes 300 m away from them");
}

std::vector<LatLon> nearest(const LatLon& from, std::span<const Outlet> outlets, OutletCategory cat, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < outlets.size(); ++i) {
    if (outlets[i].category == cat) d.emplace_back(haversine(from, outlets[i].position), i);
  }
  std::sort(d.begin(), d.end());
  std::vector<LatLon> out;
  for (std::size_t i = 0; i < std::min(k, d.size()); ++i) out.push_back(outlets[d[i].second].position);
  return out;
}

int travel_minutes(const LatLon& a, const LatLon& b) {
  return static_cast<int>(std::ceil(haversine(a, b) / kTravelMetersPerMinute));
}

enum class Place { Home, Work, Outlet };

struct Stay {
  LatLon where;
  int arrive;  // minute of day, inclusive
  int leave;   // exclusive
  Place place;
};

/// An excursion with the event minutes it carries.
struct Excursion {
  Stay stay;
  EventType event = EventType::Eating;
  int event_begin = 0;
  int event_end = 0;  // exclusive; equal to begin when no event
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Counts {
  std::size_t rows = 0;
  std::size_t missing = 0;
  std::size_t outliers = 0;
  std::size_t meal_windows = 0;
  std::size_t meals = 0;
  std::size_t confuser_slots = 0;
  std::size_t confuser_visits = 0;
  std::size_t shopping_days = 0;
  std::size_t shopping_trips = 0;
  std::size_t away_nights = 0;
  std::array<std::size_t, kEventTypeCount> event_minutes{};
};

/// Minutes of every run of `flag` at least `min_len` long.
void mark_runs(const std::vector<bool>& flag, int min_len, std::vector<bool>& out) {
  std::size_t i = 0;
  while (i < flag.size()) {
    if (!flag[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < flag.size() && flag[j]) ++j;
    if (static_cast<int>(j - i) >= min_len) {
      for (std::size_t k = i; k < j; ++k) out[k] = true;
    }
    i = j;
  }
}

}  // namespace

SynthData generate(const SynthConfig& config) {
  config.validate();
  SynthData data;
  const BoundingBox& bbox = config.bbox;
  const int wake_end = kWakeStart + static_cast<int>(config.minutes_per_day) - 60;
  const Minute day0 = parse_timestamp(config.start_date + "T00:00");

  // Outlets.
  std::vector<Outlet> outlets;
  {
    Rng rng(derive_seed(config.seed, "outlets"));
    for (std::size_t c = 0; c < kOutletCategoryCount; ++c) {
      for (std::size_t k = 0; k < config.outlet_counts[c]; ++k) {
        outlets.push_back({static_cast<OutletCategory>(c), random_point(bbox, rng)});
      }
    }
  }
  {
    std::string out(kOutletsHeader);
    out += '\n';
    for (const auto& o : outlets) {
      out += std::to_string(naics_code(o.category)) + ',' + fixed(o.position.lat, 7) + ',' +
             fixed(o.position.lon, 7) + '\n';
    }
    data.outlets_csv = std::move(out);
  }

  std::string records(kRecordsHeader);
  records += '\n';
  std::string events(kEventsHeader);
  events += '\n';
  nlohmann::ordered_json homes = nlohmann::ordered_json::array();
  nlohmann::ordered_json outlier_rows = nlohmann::ordered_json::array();
  nlohmann::ordered_json missing_rows = nlohmann::ordered_json::array();
  Counts counts;

  for (std::size_t p = 0; p < config.n_participants; ++p) {
    char id_buf[16];
    std::snprintf(id_buf, sizeof id_buf, "P%03zu", p + 1);
    const std::string id = id_buf;
    Rng rng(derive_seed(config.seed, "participant", p));

    const LatLon home = clear_point(bbox, outlets, rng);
    LatLon work = clear_point(bbox, outlets, rng);
    const bool employed = rng.bernoulli(0.7);
    LatLon away = home;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const double r = rng.uniform(1000.0, 5000.0);
      const double theta = 2.0 * std::numbers::pi * rng.uniform();
      away = shift(home, r * std::cos(theta), r * std::sin(theta));
      if (inside_margin(bbox, away)) break;
      away = home;
    }
    const auto eat_choices = nearest(home, outlets, OutletCategory::Eating, kOutletChoices);
    const auto store_choices = nearest(home, outlets, OutletCategory::FoodBeverage, kOutletChoices);
    homes.push_back({{"participant_id", id}, {"lat", home.lat}, {"lon", home.lon}});

    int away_nights = 0;
    LatLon prev_pos = home;
    bool have_prev = false;
    Minute prev_time{};

    for (std::size_t d = 0; d < config.days; ++d) {
      const Minute midnight = day0 + static_cast<std::int64_t>(d) * kMinutesPerDay;
      const int weekday = weekday_index(midnight);
      const bool away_night = away_nights < kMaxAwayNights && rng.bernoulli(config.away_night_probability);
      if (away_night) {
        ++away_nights;
        ++counts.away_nights;
      }
      const bool working = employed && weekday < 5;

      // Excursions from fixed, non-overlapping slots.
      std::vector<Excursion> excursions;
      const auto pick = [&](const std::vector<LatLon>& options) { return options[rng.below(options.size())]; };
      for (std::size_t meal = 0; meal < kMealMidpoints.size(); ++meal) {
        ++counts.meal_windows;
        if (!rng.bernoulli(config.meal_probability)) continue;
        const LatLon where = pick(eat_choices);
        const int mid = kMealMidpoints[meal];
        int start = static_cast<int>(std::lround(rng.normal(mid, 15.0)));
        start = std::clamp(start, mid - kMealSpread, mid + kMealSpread);
        const int pre = static_cast<int>(rng.between(5, 10));
        const int length = static_cast<int>(rng.between(4, 10));
        const int post = static_cast<int>(rng.between(3, 10));
        start = std::max(start, kWakeStart + travel_minutes(home, where) + pre);
        const int leave = start + length + post;
        if (leave + travel_minutes(where, home) > wake_end) continue;
        ++counts.meals;
        excursions.push_back({{where, start - pre, leave, Place::Outlet}, EventType::Eating, start, start + length});
      }
      for (const auto& [lo, hi] : {std::pair{570, 615}, std::pair{910, 960}}) {
        ++counts.confuser_slots;
        if (!rng.bernoulli(config.confuser_probability)) continue;
        const LatLon where = pick(eat_choices);
        const int arrive = static_cast<int>(rng.between(lo, hi));
        const int leave = arrive + static_cast<int>(rng.between(20, 40));
        if (leave + travel_minutes(where, home) > wake_end) continue;
        ++counts.confuser_visits;
        excursions.push_back({{where, arrive, leave, Place::Outlet}, EventType::Eating, arrive, arrive});
      }
      ++counts.shopping_days;
      if (rng.bernoulli(config.purchase_probability)) {
        const LatLon where = pick(store_choices);
        const int arrive = static_cast<int>(rng.between(840, 870));
        const int leave = arrive + static_cast<int>(rng.between(10, 20));
        const int length = static_cast<int>(rng.between(2, 4));
        const int end = leave - static_cast<int>(rng.between(1, 3));
        if (leave + travel_minutes(where, home) <= wake_end) {
          ++counts.shopping_trips;
          excursions.push_back({{where, arrive, leave, Place::Outlet}, EventType::Purchasing, end - length, end});
        }
      }
      std::sort(excursions.begin(), excursions.end(),
                [](const Excursion& a, const Excursion& b) { return a.stay.arrive < b.stay.arrive; });

      // Default locations, then excursions carved out of them with travel time.
      std::vector<Stay> soft;
      if (working) {
        const int ws = static_cast<int>(rng.between(510, 540));
        const int we = std::min(wake_end, static_cast<int>(rng.between(1020, 1050)));
        const int commute = travel_minutes(home, work);
        soft.push_back({home, kWakeStart, ws - commute, Place::Home});
        soft.push_back({work, ws, we, Place::Work});
        soft.push_back({home, we + commute, wake_end, Place::Home});
      } else {
        soft.push_back({home, kWakeStart, wake_end, Place::Home});
      }
      const auto soft_at = [&](int minute) {
        for (const auto& s : soft) {
          if (minute < s.leave) return s.where;
        }
        return soft.back().where;
      };
      std::vector<Stay> stays;
      for (const auto& s : soft) {
        std::vector<Stay> pieces{s};
        for (const auto& e : excursions) {
          const int lo = e.stay.arrive - travel_minutes(soft_at(e.stay.arrive), e.stay.where);
          const int hi = e.stay.leave + travel_minutes(e.stay.where, soft_at(e.stay.leave));
          std::vector<Stay> next;
          for (const auto& piece : pieces) {
            if (hi <= piece.arrive || lo >= piece.leave) {
              next.push_back(piece);
              continue;
            }
            if (lo > piece.arrive) next.push_back({piece.where, piece.arrive, lo, piece.place});
            if (hi < piece.leave) next.push_back({piece.where, hi, piece.leave, piece.place});
          }
          pieces = std::move(next);
        }
        for (const auto& piece : pieces) {
          if (piece.leave > piece.arrive) stays.push_back(piece);
        }
      }
      for (const auto& e : excursions) stays.push_back(e.stay);
      std::sort(stays.begin(), stays.end(), [](const Stay& a, const Stay& b) { return a.arrive < b.arrive; });
      // The day starts at home even when the first stay begins later.
      stays.insert(stays.begin(), Stay{home, kWakeStart - 1, kWakeStart, Place::Home});

      // Per-minute generation for the sleep window and the wake block.
      struct MinuteState {
        int mod;
        LatLon pos;
        bool moving;
        bool sleeping;
        bool at_home;
      };
      std::vector<MinuteState> minutes;
      const LatLon night_spot = away_night ? away : home;
      for (int m = 180; m < 240; ++m) {
        minutes.push_back({m, jitter(night_spot, config.home_jitter_m, rng), false, true, !away_night});
      }
      std::size_t si = 0;
      for (int m = kWakeStart; m < wake_end; ++m) {
        while (si + 1 < stays.size() && stays[si + 1].arrive <= m) ++si;
        const Stay& cur = stays[si];
        if (m < cur.leave) {
          const bool is_home = cur.place == Place::Home;
          const double r = is_home ? config.home_jitter_m : config.gps_noise_m;
          minutes.push_back({m, jitter(cur.where, r, rng), false, false, is_home});
        } else if (si + 1 < stays.size()) {
          const Stay& nxt = stays[si + 1];
          const double frac = static_cast<double>(m - cur.leave + 1) / static_cast<double>(nxt.arrive - cur.leave + 1);
          const LatLon along{cur.where.lat + frac * (nxt.where.lat - cur.where.lat),
                             cur.where.lon + frac * (nxt.where.lon - cur.where.lon)};
          minutes.push_back({m, jitter(along, config.gps_noise_m, rng), true, false, false});
        } else {
          minutes.push_back({m, jitter(cur.where, config.gps_noise_m, rng), false, false, cur.place == Place::Home});
        }
      }

      // Sensor channels.
      std::vector<double> activity(minutes.size());
      for (std::size_t i = 0; i < minutes.size(); ++i) {
        const auto& ms = minutes[i];
        if (ms.sleeping) {
          activity[i] = 0.0;
        } else if (ms.moving) {
          activity[i] = static_cast<double>(rng.between(800, 2500));
        } else if (rng.bernoulli(0.8)) {
          activity[i] = static_cast<double>(rng.between(0, 99));
        } else {
          activity[i] = static_cast<double>(rng.between(100, 700));
        }
      }

      // Bouts per contiguous block (sleep window, wake block).
      std::array<std::vector<bool>, 3> bout;
      for (auto& b : bout) b.assign(minutes.size(), false);
      const std::array<std::pair<std::size_t, std::size_t>, 2> blocks{
          std::pair<std::size_t, std::size_t>{0, 60}, std::pair<std::size_t, std::size_t>{60, minutes.size()}};
      for (const auto& [b0, b1] : blocks) {
        const auto runs = [&](auto pred, int min_len, std::vector<bool>& out) {
          std::vector<bool> flag(b1 - b0);
          for (std::size_t i = b0; i < b1; ++i) flag[i - b0] = pred(activity[i]);
          std::vector<bool> hit(b1 - b0, false);
          mark_runs(flag, min_len, hit);
          for (std::size_t i = b0; i < b1; ++i) out[i] = hit[i - b0];
        };
        runs([](double a) { return a < 100.0; }, 10, bout[0]);
        runs([](double a) { return a >= 760.0; }, 5, bout[1]);
        runs([](double a) { return a >= 2020.0; }, 2, bout[2]);
      }

      for (std::size_t i = 0; i < minutes.size(); ++i) {
        const auto& ms = minutes[i];
        const Minute ts = midnight + ms.mod;
        const std::string stamp = format_timestamp(ts);
        double dist = 0.0;
        double speed = 0.0;
        if (have_prev) {
          dist = haversine(prev_pos, ms.pos);
          speed = dist / static_cast<double>(ts - prev_time) * 0.06;
        }
        prev_pos = ms.pos;
        prev_time = ts;
        have_prev = true;

        const double a1 = activity[i];
        const double a2 = std::round(a1 * rng.uniform(0.3, 0.8));
        const double a3 = std::round(a1 * rng.uniform(0.2, 0.7));
        const double vm = std::sqrt(a1 * a1 + a2 * a2 + a3 * a3);
        double lux;
        if (ms.sleeping) {
          lux = static_cast<double>(rng.between(0, 5));
        } else if (ms.moving) {
          lux = static_cast<double>(rng.between(1000, 20000));
        } else {
          lux = static_cast<double>(rng.between(50, 800));
        }

        const double u = rng.uniform();
        std::string lat;
        std::string lon;
        if (u < config.missing_gps_fraction) {
          ++counts.missing;
          missing_rows.push_back({{"participant_id", id}, {"timestamp", stamp}});
          dist = 0.0;
          speed = 0.0;
        } else if (u < config.missing_gps_fraction + config.outlier_fraction) {
          ++counts.outliers;
          outlier_rows.push_back({{"participant_id", id}, {"timestamp", stamp}});
          lat = fixed(ms.pos.lat + 1.0, 7);
          lon = fixed(ms.pos.lon, 7);
        } else {
          lat = fixed(ms.pos.lat, 7);
          lon = fixed(ms.pos.lon, 7);
        }
        ++counts.rows;
        records += id;
        records += ',';
        records += stamp;
        records += ',' + lat + ',' + lon + ',' + fixed(dist, 2) + ',' + fixed(speed, 3) + ',' + fixed(a1, 0) + ',' +
                   fixed(a2, 0) + ',' + fixed(a3, 0) + ',' + fixed(vm, 2) + ',' + fixed(lux, 0) + ',' +
                   (ms.sleeping ? "0" : "1") + '\n';

        std::array<bool, kEventTypeCount> flags{};
        for (const auto& e : excursions) {
          if (ms.mod >= e.event_begin && ms.mod < e.event_end) flags[static_cast<std::size_t>(e.event)] = true;
        }
        flags[static_cast<std::size_t>(EventType::SedentaryBout)] = bout[0][i];
        flags[static_cast<std::size_t>(EventType::PaBout)] = bout[1][i];
        flags[static_cast<std::size_t>(EventType::MvpaBout)] = bout[2][i];
        for (std::size_t t = 0; t < kEventTypeCount; ++t) {
          if (!flags[t]) continue;
          ++counts.event_minutes[t];
          events += id;
          events += ',';
          events += stamp;
          events += ',';
          events += to_string(static_cast<EventType>(t));
          events += '\n';
        }
      }
    }
  }
  data.records_csv = std::move(records);
  data.events_csv = std::move(events);

  nlohmann::ordered_json gt;
  gt["seed"] = config.seed;
  gt["n_participants"] = config.n_participants;
  gt["days"] = config.days;
  gt["minutes_per_day"] = config.minutes_per_day;
  gt["start_date"] = config.start_date;
  gt["bbox"] = {{"min_lat", bbox.min_lat}, {"max_lat", bbox.max_lat}, {"min_lon", bbox.min_lon}, {"max_lon", bbox.max_lon}};
  gt["homes"] = std::move(homes);
  gt["outlier_rows"] = std::move(outlier_rows);
  gt["missing_gps_rows"] = std::move(missing_rows);
  const SynthRule rule;
  gt["rule"] = {{"meal_midpoints_minute_of_day", kMealMidpoints},
                {"meal_start_spread_minutes", kMealSpread},
                {"meal_probability", config.meal_probability},
                {"confuser_probability", config.confuser_probability},
                {"purchase_probability", config.purchase_probability},
                {"outlet_radius_m", rule.outlet_radius_m},
                {"meal_time_pattern_max", rule.meal_time_pattern_max},
                {"outlet_choices", kOutletChoices}};
  nlohmann::ordered_json ev;
  for (std::size_t t = 0; t < kEventTypeCount; ++t) {
    ev[std::string(to_string(static_cast<EventType>(t)))] = counts.event_minutes[t];
  }
  gt["counts"] = {{"rows", counts.rows},
                  {"missing_gps_rows", counts.missing},
                  {"outlier_rows", counts.outliers},
                  {"meal_windows", counts.meal_windows},
                  {"meals", counts.meals},
                  {"confuser_slots", counts.confuser_slots},
                  {"confuser_visits", counts.confuser_visits},
                  {"shopping_days", counts.shopping_days},
                  {"shopping_trips", counts.shopping_trips},
                  {"away_nights", counts.away_nights},
                  {"event_minutes", ev}};
  data.ground_truth = std::move(gt);
  return data;
}

std::vector<std::filesystem::path> write_synth(const SynthData& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  const std::array<std::pair<const char*, std::string>, 4> files{{
      {"records.csv", data.records_csv},
      {"events.csv", data.events_csv},
      {"outlets.csv", data.outlets_csv},
      {"ground_truth.json", data.ground_truth.dump(2) + "\n"},
  }};
  std::vector<std::filesystem::path> written;
  for (const auto& [name, content] : files) {
    const auto path = dir / name;
    std::ofstream f(path, std::ios::binary);
    f << content;
    f.close();
    if (!f) throw Error("cannot write " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace forage
