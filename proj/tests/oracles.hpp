#pragma once

// Independent reference implementations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "forage/geo.hpp"
#include "forage/matrix.hpp"
#include "test_util.hpp"

namespace forage::testing {

/// Mann-Whitney AUC with ties counted half; hard predictions as scores.
inline double rank_auc(const std::vector<std::uint8_t>& y, const std::vector<std::uint8_t>& s) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[j]) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

// ---------------------------------------------------------------- svm dual

inline double dual_objective(const Matrix& q, const std::vector<double>& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i];
    for (std::size_t j = 0; j < a.size(); ++j) s -= 0.5 * a[i] * a[j] * q(i, j);
  }
  return s;
}

/// Euclidean projection onto {0 <= a <= C, y'a = 0} by bisection on the
/// multiplier of the equality constraint.
inline std::vector<double> project_box_hyperplane(const std::vector<double>& v, const std::vector<int>& y, double c) {
  auto at = [&](double lambda) {
    std::vector<double> a(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) a[i] = std::clamp(v[i] - lambda * y[i], 0.0, c);
    return a;
  };
  auto balance = [&](double lambda) {
    const auto a = at(lambda);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * y[i];
    return s;
  };
  double lo = -1e6;
  double hi = 1e6;  // balance is non-increasing in lambda
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (balance(mid) > 0 ? lo : hi) = mid;
  }
  return at(0.5 * (lo + hi));
}

/// Accelerated projected gradient ascent on the dual; returns the optimum.
inline double qp_oracle(const Matrix& q, const std::vector<int>& y, double c, int iterations = 200000) {
  const std::size_t n = y.size();
  double lmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(q(i, j));
    lmax = std::max(lmax, row);
  }
  const double step = 1.0 / lmax;
  std::vector<double> a(n, 0.0);
  std::vector<double> z = a;
  double t = 1.0;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      double g = 1.0;
      for (std::size_t j = 0; j < n; ++j) g -= q(i, j) * z[j];
      v[i] = z[i] + step * g;
    }
    const auto next = project_box_hyperplane(v, y, c);
    const double t2 = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    for (std::size_t i = 0; i < n; ++i) z[i] = next[i] + (t - 1) / t2 * (next[i] - a[i]);
    a = next;
    t = t2;
  }
  return dual_objective(q, a);
}

/// Q_ij = y_i y_j exp(-gamma |x_i - x_j|^2).
inline Matrix rbf_q(const Matrix& x, const std::vector<int>& y, double gamma) {
  Matrix q(x.rows(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.rows(); ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) d += (x(i, k) - x(j, k)) * (x(i, k) - x(j, k));
      q(i, j) = y[i] * y[j] * std::exp(-gamma * d);
    }
  }
  return q;
}

// ---------------------------------------------------------------- cart

struct Split {
  int feature = -1;
  double threshold = 0.0;
};

/// Exhaustive best root split with exact rational scores over integer
/// targets. Gini maximizes sum over children of (P^2 + N^2) / n; squared
/// error maximizes sum of S^2 / n. Ties go to the lowest feature, then the
/// lowest threshold.
inline Split exhaustive_split(const Matrix& x, const std::vector<double>& t, bool gini) {
  Split best;
  long double best_num = 0;
  long long best_den = 1;
  const std::size_t n = x.rows();
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::vector<double> vals;
    for (std::size_t i = 0; i < n; ++i) vals.push_back(x(i, f));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      double thr = 0.5 * (vals[k] + vals[k + 1]);
      if (thr >= vals[k + 1]) thr = vals[k];
      long long nl = 0;
      long long nr = 0;
      long long al = 0;
      long long ar = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<long long>(t[i]);
        if (x(i, f) <= thr) {
          ++nl;
          al += v;
        } else {
          ++nr;
          ar += v;
        }
      }
      const long long sl = gini ? al * al + (nl - al) * (nl - al) : al * al;
      const long long sr = gini ? ar * ar + (nr - ar) * (nr - ar) : ar * ar;
      const auto num = static_cast<long double>(sl * nr + sr * nl);
      const long long den = nl * nr;
      if (best.feature < 0 || num * best_den > best_num * den) {
        best = {static_cast<int>(f), thr};
        best_num = num;
        best_den = den;
      }
    }
  }
  return best;
}

inline Matrix small_int_matrix(Rng& rng, std::size_t n, std::size_t p, int levels) {
  Matrix x(n, p);
  for (auto& v : x.data()) v = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels)));
  return x;
}

// ---------------------------------------------------------------- dbscan

struct Partition {
  std::set<std::set<std::size_t>> core_clusters;
  std::set<std::size_t> noise;
};

/// Core points grouped by density connectivity; noise = points with no core
/// point within eps (themselves not core).
inline Partition brute_dbscan(const std::vector<LatLon>& pts, const DbscanParams& params,
                              std::vector<std::set<std::size_t>>* core_neighbors = nullptr) {
  const std::size_t n = pts.size();
  std::vector<std::vector<std::size_t>> nb(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (haversine(pts[i], pts[j]) <= params.eps) nb[i].push_back(j);
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = nb[i].size() >= params.min_pts;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    for (auto j : nb[i]) {
      if (core[j]) parent[find(i)] = find(j);
    }
  }
  std::map<std::size_t, std::set<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) groups[find(i)].insert(i);
  }
  Partition p;
  for (auto& [root, members] : groups) p.core_clusters.insert(members);
  if (core_neighbors) core_neighbors->assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    bool reached = false;
    for (auto j : nb[i]) {
      if (core[j]) {
        reached = true;
        if (core_neighbors) (*core_neighbors)[i].insert(j);
      }
    }
    if (!reached) p.noise.insert(i);
  }
  return p;
}

/// Empty when `labels` is a valid DBSCAN labeling: same noise and core
/// clusters as the oracle, border points attached to an adjacent core's
/// cluster, labels dense from 0.
inline std::string dbscan_mismatch(const std::vector<LatLon>& pts, const DbscanParams& params,
                                   const std::vector<int>& labels) {
  std::vector<std::set<std::size_t>> core_nb;
  const auto oracle = brute_dbscan(pts, params, &core_nb);
  std::set<std::size_t> noise;
  std::map<int, std::set<std::size_t>> by_label;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (labels[i] == kNoise) {
      noise.insert(i);
    } else {
      by_label[labels[i]].insert(i);
    }
  }
  if (noise != oracle.noise) return "noise sets differ";
  std::set<std::set<std::size_t>> core_groups;
  std::map<std::size_t, int> label_of_core;
  for (const auto& [l, members] : by_label) {
    std::set<std::size_t> cores;
    for (auto i : members) {
      if (core_nb[i].empty() && !oracle.noise.contains(i)) {
        cores.insert(i);
        label_of_core[i] = l;
      }
    }
    core_groups.insert(cores);
  }
  if (core_groups != oracle.core_clusters) return "core clusters differ";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (core_nb[i].empty()) continue;
    bool adjacent = false;
    for (auto j : core_nb[i]) adjacent = adjacent || label_of_core.at(j) == labels[i];
    if (!adjacent) return "border point " + std::to_string(i) + " joined a non-adjacent cluster";
  }
  if (!by_label.empty() && by_label.rbegin()->first != static_cast<int>(by_label.size()) - 1) {
    return "labels are not dense";
  }
  return {};
}

/// Blobs of 60 m squares plus uniform background within ~1 km.
inline std::vector<LatLon> random_points(Rng& rng, std::size_t n) {
  const LatLon base{32.8, -117.0};
  std::vector<LatLon> pts;
  const std::size_t blobs = 1 + rng.below(4);
  std::vector<LatLon> centers;
  for (std::size_t b = 0; b < blobs; ++b) {
    centers.push_back(offset_meters(base, rng.uniform(-800, 800), rng.uniform(-800, 800)));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.bernoulli(0.8)) {
      const auto& c = centers[rng.below(blobs)];
      pts.push_back(offset_meters(c, rng.uniform(-60, 60), rng.uniform(-60, 60)));
    } else {
      pts.push_back(offset_meters(base, rng.uniform(-1000, 1000), rng.uniform(-1000, 1000)));
    }
  }
  return pts;
}

/// Minimum haversine distance per outlet category by linear scan.
inline std::array<double, kOutletCategoryCount> brute_nearest(const LatLon& p, const std::vector<Outlet>& outlets) {
  std::array<double, kOutletCategoryCount> brute;
  brute.fill(kMissingOutletDistance);
  std::array<bool, kOutletCategoryCount> seen{};
  for (const auto& o : outlets) {
    const auto c = static_cast<std::size_t>(o.category);
    const double d = haversine(p, o.position);
    brute[c] = seen[c] ? std::min(brute[c], d) : d;
    seen[c] = true;
  }
  return brute;
}

}  // namespace forage::testing
