#include "forage/geo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include <spdlog/spdlog.h>

namespace forage {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

/// Indices of points within eps of points[i] (including i), via a
/// latitude-sorted sweep.
class NeighborFinder {
 public:
  NeighborFinder(std::span<const LatLon> points, double eps) : points_(points), eps_(eps) {
    order_.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) order_[i] = i;
    std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return points[a].lat < points[b].lat || (points[a].lat == points[b].lat && a < b);
    });
    lats_.reserve(order_.size());
    for (auto i : order_) lats_.push_back(points[i].lat);
    // One degree of latitude is at least this many meters; pad the window.
    lat_window_deg_ = eps / (kEarthRadiusMeters * kDegToRad) * (1.0 + 1e-9) + 1e-12;
  }

  void region(std::size_t i, std::vector<std::size_t>& out) const {
    out.clear();
    const double lat = points_[i].lat;
    auto lo = std::lower_bound(lats_.begin(), lats_.end(), lat - lat_window_deg_);
    auto hi = std::upper_bound(lats_.begin(), lats_.end(), lat + lat_window_deg_);
    for (auto it = lo; it != hi; ++it) {
      const std::size_t j = order_[static_cast<std::size_t>(it - lats_.begin())];
      if (haversine(points_[i], points_[j]) <= eps_) out.push_back(j);
    }
    std::sort(out.begin(), out.end());
  }

 private:
  std::span<const LatLon> points_;
  double eps_;
  std::vector<std::size_t> order_;
  std::vector<double> lats_;
  double lat_window_deg_ = 0.0;
};

}  // namespace

double haversine(const LatLon& a, const LatLon& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double s_lat = std::sin((phi2 - phi1) * 0.5);
  const double s_lon = std::sin((b.lon - a.lon) * kDegToRad * 0.5);
  double h = s_lat * s_lat + std::cos(phi1) * std::cos(phi2) * s_lon * s_lon;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(h));
}

std::vector<int> dbscan(std::span<const LatLon> points, const DbscanParams& params) {
  constexpr int kUnvisited = -2;
  std::vector<int> labels(points.size(), kUnvisited);
  if (points.empty()) return labels;

  const NeighborFinder finder(points, params.eps);
  std::vector<std::size_t> neighbors;
  std::vector<std::size_t> expansion;
  int next_cluster = 0;

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] != kUnvisited) continue;
    finder.region(i, neighbors);
    if (neighbors.size() < params.min_pts) {
      labels[i] = kNoise;
      continue;
    }
    const int cluster = next_cluster++;
    labels[i] = cluster;
    std::deque<std::size_t> queue(neighbors.begin(), neighbors.end());
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      if (labels[q] == kNoise) labels[q] = cluster;  // border point
      if (labels[q] != kUnvisited) continue;
      labels[q] = cluster;
      finder.region(q, expansion);
      if (expansion.size() >= params.min_pts) {
        for (auto r : expansion) {
          if (labels[r] == kUnvisited || labels[r] == kNoise) queue.push_back(r);
        }
      }
    }
  }
  return labels;
}

std::optional<HomeLocation> infer_home(const Cohort& cohort, std::string_view participant_id,
                                       const ClockWindow& window, const DbscanParams& params) {
  const Participant* p = cohort.find(participant_id);
  if (p == nullptr) return std::nullopt;
  std::vector<LatLon> points;
  for (const auto& r : p->records) {
    if (window.contains(minute_of_day(r.timestamp))) points.push_back(r.position);
  }
  const auto labels = dbscan(points, params);
  const int clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  if (clusters <= 0) return std::nullopt;

  std::vector<std::size_t> sizes(static_cast<std::size_t>(clusters), 0);
  for (int l : labels) {
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  }
  // max_element returns the first maximum, i.e. the lowest label on ties.
  const auto best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

  double lat = 0.0;
  double lon = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] != best) continue;
    lat += points[i].lat;
    lon += points[i].lon;
    ++n;
  }
  HomeLocation home;
  home.participant_id = p->id;
  home.position = {lat / static_cast<double>(n), lon / static_cast<double>(n)};
  home.support = n;
  return home;
}

HomeTable infer_homes(const Cohort& cohort, const ClockWindow& window,
                      const DbscanParams& params) {
  HomeTable table;
  for (const auto& p : cohort.participants) {
    if (auto home = infer_home(cohort, p.id, window, params)) {
      table.emplace(p.id, std::move(*home));
    } else {
      spdlog::warn("no home could be inferred for participant '{}'; in-home feature set to 0", p.id);
    }
  }
  return table;
}

int in_home(const MinuteRecord& record, const HomeLocation* home) {
  if (home == nullptr) return 0;
  return haversine(record.position, home->position) <= kHomeRadiusMeters ? 1 : 0;
}

OutletDistances nearest_outlet_distances(const LatLon& point, std::span<const Outlet> outlets) {
  OutletDistances best;
  std::array<bool, kOutletCategoryCount> seen{};
  best.fill(kMissingOutletDistance);
  for (const auto& o : outlets) {
    const auto c = static_cast<std::size_t>(o.category);
    const double d = haversine(point, o.position);
    if (!seen[c] || d < best[c]) {
      best[c] = d;
      seen[c] = true;
    }
  }
  return best;
}

OutletIndex::OutletIndex(std::span<const Outlet> outlets) {
  for (const auto& o : outlets) by_category_[static_cast<std::size_t>(o.category)].push_back(o.position);
  for (auto& list : by_category_) {
    std::stable_sort(list.begin(), list.end(),
                     [](const LatLon& a, const LatLon& b) { return a.lat < b.lat; });
  }
}

OutletDistances OutletIndex::nearest(const LatLon& point) const {
  OutletDistances result;
  result.fill(kMissingOutletDistance);
  const double meters_per_degree = kEarthRadiusMeters * kDegToRad;
  for (std::size_t c = 0; c < kOutletCategoryCount; ++c) {
    const auto& list = by_category_[c];
    if (list.empty()) continue;
    double best = std::numeric_limits<double>::infinity();
    const auto start = std::lower_bound(list.begin(), list.end(), point.lat,
                                        [](const LatLon& a, double lat) { return a.lat < lat; });
    // Walk outward in both directions until the latitude gap alone exceeds
    // the best distance found so far.
    auto bound_exceeded = [&](double lat) {
      return std::abs(lat - point.lat) * meters_per_degree * (1.0 - 1e-12) > best;
    };
    for (auto it = start; it != list.end(); ++it) {
      if (bound_exceeded(it->lat)) break;
      best = std::min(best, haversine(point, *it));
    }
    for (auto it = start; it != list.begin();) {
      --it;
      if (bound_exceeded(it->lat)) break;
      best = std::min(best, haversine(point, *it));
    }
    result[c] = best;
  }
  return result;
}

}  // namespace forage
