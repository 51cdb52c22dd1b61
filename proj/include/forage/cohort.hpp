#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forage/time.hpp"

namespace forage {

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

bool valid_coordinates(const LatLon& p);

/// One participant-minute of sensor and context columns. The owning
/// participant is implied by the containing `Participant`.
struct MinuteRecord {
  Minute timestamp;
  LatLon position;
  double gps_distance = 0.0;  // meters from previous point
  double gps_speed = 0.0;     // km/h
  double activity = 0.0;      // counts/min, axis 1
  double axis2 = 0.0;
  double axis3 = 0.0;
  double vector_mag = 0.0;
  double lux = 0.0;
  bool wearing = false;
  int day_of_week = 0;  // 0 = Monday

  friend bool operator==(const MinuteRecord&, const MinuteRecord&) = default;
};

enum class EventType { Eating = 0, Purchasing, SedentaryBout, PaBout, MvpaBout };
inline constexpr std::size_t kEventTypeCount = 5;

std::string_view to_string(EventType type);
std::optional<EventType> parse_event_type(std::string_view text);

/// Per-participant sets of event minutes, one sorted unique list per type.
class EventTimeline {
 public:
  void add(EventType type, Minute m);
  bool contains(EventType type, Minute m) const;
  const std::vector<Minute>& minutes(EventType type) const {
    return sets_[static_cast<std::size_t>(type)];
  }
  std::size_t total() const;
  /// Restores sorted-unique order after a batch of `add` calls.
  void normalize();
  /// Keeps only minutes for which `keep` returns true.
  template <typename Pred>
  void retain(Pred keep) {
    for (auto& set : sets_) std::erase_if(set, [&](Minute m) { return !keep(m); });
  }

  friend bool operator==(const EventTimeline&, const EventTimeline&) = default;

 private:
  std::array<std::vector<Minute>, kEventTypeCount> sets_;
};

struct Participant {
  std::string id;
  std::vector<MinuteRecord> records;  // strictly increasing timestamps
  EventTimeline events;

  friend bool operator==(const Participant&, const Participant&) = default;
};

/// Participants sorted by id. Immutable once built.
struct Cohort {
  std::vector<Participant> participants;
  std::size_t dropped_missing_gps = 0;

  const Participant* find(std::string_view id) const;
  std::size_t record_count() const;
  std::vector<std::string> participant_ids() const;
};

enum class OutletCategory { FoodBeverage = 0, HealthCare, Gasoline, Drinking, Eating };
inline constexpr std::size_t kOutletCategoryCount = 5;

/// NAICS code of a category: 445, 446, 447, 7224, 7225.
int naics_code(OutletCategory c);
std::optional<OutletCategory> category_from_naics(int code);

struct Outlet {
  OutletCategory category = OutletCategory::FoodBeverage;
  LatLon position;

  friend bool operator==(const Outlet&, const Outlet&) = default;
};

struct BoundingBox {
  double min_lat = -90.0;
  double max_lat = 90.0;
  double min_lon = -180.0;
  double max_lon = 180.0;

  bool contains(const LatLon& p) const {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
  }
};

inline constexpr std::string_view kRecordsHeader =
    "participant_id,timestamp,lat,lon,gps_distance,gps_speed,activity,axis2,axis3,vector_mag,lux,"
    "wearing";
inline constexpr std::string_view kEventsHeader = "participant_id,timestamp,event_type";
inline constexpr std::string_view kOutletsHeader = "category,lat,lon";

Cohort ingest_cohort(std::istream& records, std::istream& events,
                     std::string_view records_name = "records",
                     std::string_view events_name = "events");
Cohort ingest_cohort(const std::filesystem::path& records_file,
                     const std::filesystem::path& events_file);

std::vector<Outlet> load_outlets(std::istream& in, std::string_view name = "outlets");
std::vector<Outlet> load_outlets(const std::filesystem::path& file);

/// Canonical serialization; ingest(write(c)) == c.
void write_records_csv(const Cohort& cohort, std::ostream& out);
void write_events_csv(const Cohort& cohort, std::ostream& out);
void write_outlets_csv(const std::vector<Outlet>& outlets, std::ostream& out);

/// Removes minutes whose coordinates fall outside `bbox` (edges inclusive),
/// together with their event-timeline entries.
Cohort drop_out_of_bounds(const Cohort& cohort, const BoundingBox& bbox);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace forage
