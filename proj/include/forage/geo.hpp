#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forage/cohort.hpp"

namespace forage {

inline constexpr double kEarthRadiusMeters = 6'371'000.0;
inline constexpr double kHomeRadiusMeters = 50.0;
/// Distance reported for an outlet category with no outlets at all.
inline constexpr double kMissingOutletDistance = 100'000.0;

/// Great-circle distance in meters on a sphere of mean Earth radius.
double haversine(const LatLon& a, const LatLon& b);

struct DbscanParams {
  double eps = 50.0;         // meters
  std::size_t min_pts = 5;   // neighborhood size including the point itself
};

inline constexpr int kNoise = -1;

/// DBSCAN under the haversine metric. Returns one label per point: cluster ids
/// 0, 1, ... in discovery order, or kNoise. Border points keep the first
/// cluster that reaches them.
std::vector<int> dbscan(std::span<const LatLon> points, const DbscanParams& params);

/// Half-open clock interval [start, end) in minutes past midnight.
struct ClockWindow {
  int start = 3 * 60;
  int end = 4 * 60;

  bool contains(int minute_of_day) const { return minute_of_day >= start && minute_of_day < end; }
};

struct HomeLocation {
  std::string participant_id;
  LatLon position;
  std::size_t support = 0;
};

using HomeTable = std::map<std::string, HomeLocation, std::less<>>;

/// Centroid of the largest DBSCAN cluster among the participant's minutes that
/// fall inside `window` on any day. Ties go to the lowest cluster label.
std::optional<HomeLocation> infer_home(const Cohort& cohort, std::string_view participant_id,
                                       const ClockWindow& window, const DbscanParams& params);

/// Homes for every participant that has one. Participants without an
/// inferable home are absent from the table and logged as a warning.
HomeTable infer_homes(const Cohort& cohort, const ClockWindow& window,
                      const DbscanParams& params);

/// 1 iff the record lies within 50 m (inclusive) of the home; 0 when no home.
int in_home(const MinuteRecord& record, const HomeLocation* home);

using OutletDistances = std::array<double, kOutletCategoryCount>;

/// Per category (445, 446, 447, 7224, 7225) the distance to the nearest outlet,
/// by linear scan.
OutletDistances nearest_outlet_distances(const LatLon& point, std::span<const Outlet> outlets);

/// Latitude-sorted outlet lists that answer the same query as
/// nearest_outlet_distances with identical results, pruning by the
/// meridional lower bound R * |dlat|.
class OutletIndex {
 public:
  explicit OutletIndex(std::span<const Outlet> outlets);
  OutletDistances nearest(const LatLon& point) const;

 private:
  std::array<std::vector<LatLon>, kOutletCategoryCount> by_category_;
};

}  // namespace forage
