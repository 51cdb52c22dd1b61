#include "forage/learners/tree.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "forage/rng.hpp"

namespace forage {

std::size_t DecisionTree::leaf(std::span<const double> row, int max_depth) const {
  std::size_t k = 0;
  while (!nodes[k].is_leaf() && (max_depth < 0 || nodes[k].depth < max_depth)) {
    const auto& nd = nodes[k];
    k = static_cast<std::size_t>(row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right);
  }
  return k;
}

int DecisionTree::depth() const {
  int d = 0;
  for (const auto& nd : nodes) d = std::max(d, nd.depth);
  return d;
}

void DecisionTree::add_importances(std::span<double> out) const {
  for (const auto& nd : nodes) {
    if (!nd.is_leaf()) out[static_cast<std::size_t>(nd.feature)] += nd.gain;
  }
}

PresortedColumns::PresortedColumns(const Matrix& x) : x_(x), order_(x.cols()) {
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& ord = order_[f];
    ord.resize(x.rows());
    std::iota(ord.begin(), ord.end(), 0u);
    std::stable_sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
  }
}

namespace {

struct NodeStats {
  double w = 0.0;
  double s = 0.0;   // sum of w * t
  double ss = 0.0;  // sum of w * t^2
  double tmin = 0.0;
  double tmax = 0.0;
  bool any = false;

  void add(double weight, double t) {
    w += weight;
    s += weight * t;
    ss += weight * t * t;
    if (!any) {
      tmin = tmax = t;
      any = true;
    } else {
      tmin = std::min(tmin, t);
      tmax = std::max(tmax, t);
    }
  }
};

struct SplitState {
  double wl = 0.0;
  double sl = 0.0;
  double last = 0.0;
  bool has_last = false;
};

struct BestSplit {
  bool found = false;
  double score = 0.0;
  std::int32_t feature = -1;
  double threshold = 0.0;
};

double proxy(Criterion c, double w, double s) {
  if (c == Criterion::Gini) {
    const double neg = w - s;
    return (s * s + neg * neg) / w;
  }
  return s * s / w;
}

bool is_pure(Criterion c, const NodeStats& st) {
  if (c == Criterion::Gini) return st.s == 0.0 || st.s == st.w;
  return st.tmin == st.tmax;
}

}  // namespace

TreeFit fit_tree(const PresortedColumns& data, std::span<const double> targets,
                 std::span<const double> weights, const TreeParams& params) {
  const Matrix& x = data.x();
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (params.max_depth < 1) throw std::invalid_argument("tree depth must be >= 1");
  if (targets.size() != n || weights.size() != n) throw std::invalid_argument("tree inputs have mismatched lengths");

  TreeFit fit;
  auto& nodes = fit.tree.nodes;
  std::vector<NodeStats> stats;
  std::vector<std::uint64_t> paths;
  auto& node_of = fit.leaf_of_row;
  node_of.assign(n, -1);

  NodeStats root;
  std::vector<std::uint32_t> active_rows;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("tree weights must be non-negative");
    if (weights[i] > 0.0) {
      root.add(weights[i], targets[i]);
      node_of[i] = 0;
      active_rows.push_back(static_cast<std::uint32_t>(i));
    }
  }
  if (active_rows.empty()) throw std::invalid_argument("tree needs at least one weighted row");
  nodes.push_back({.depth = 0, .value = root.s / root.w, .weight = root.w});
  stats.push_back(root);
  paths.push_back(1);

  std::vector<std::int32_t> active;
  if (!is_pure(params.criterion, root)) active.push_back(0);

  // Per-feature sorted (row, value) lists restricted to rows of active nodes.
  std::vector<std::vector<std::uint32_t>> rows(p);
  std::vector<std::vector<double>> vals(p);
  if (!active.empty()) {
    for (std::size_t f = 0; f < p; ++f) {
      for (std::uint32_t r : data.order(f)) {
        if (weights[r] > 0.0) {
          rows[f].push_back(r);
          vals[f].push_back(x(r, f));
        }
      }
    }
  }

  const bool subsample = params.max_features > 0 && params.max_features < p;
  std::vector<std::int32_t> slot_of;
  while (!active.empty()) {
    const std::size_t slots = active.size();
    slot_of.assign(nodes.size(), -1);
    for (std::size_t s = 0; s < slots; ++s) slot_of[static_cast<std::size_t>(active[s])] = static_cast<std::int32_t>(s);

    // Features each node may split on.
    std::vector<std::uint8_t> drawn(slots * p, 1);
    if (subsample) {
      std::vector<double> lo(slots * p);
      std::vector<double> hi(slots * p);
      std::vector<std::uint8_t> seen(slots * p, 0);
      for (std::size_t f = 0; f < p; ++f) {
        for (std::size_t k = 0; k < rows[f].size(); ++k) {
          const auto s = static_cast<std::size_t>(slot_of[static_cast<std::size_t>(node_of[rows[f][k]])]);
          const std::size_t at = s * p + f;
          if (!seen[at]) {
            lo[at] = vals[f][k];
            seen[at] = 1;
          }
          hi[at] = vals[f][k];
        }
      }
      std::vector<std::size_t> candidates;
      for (std::size_t s = 0; s < slots; ++s) {
        candidates.clear();
        for (std::size_t f = 0; f < p; ++f) {
          if (lo[s * p + f] != hi[s * p + f]) candidates.push_back(f);
        }
        std::fill_n(drawn.begin() + static_cast<std::ptrdiff_t>(s * p), p, std::uint8_t{0});
        SplitMix64 rng(mix64(params.seed ^ mix64(paths[static_cast<std::size_t>(active[s])])));
        const std::size_t take = std::min(params.max_features, candidates.size());
        for (std::size_t a = 0; a < take; ++a) {
          const std::size_t b = a + static_cast<std::size_t>(rng.below(candidates.size() - a));
          std::swap(candidates[a], candidates[b]);
          drawn[s * p + candidates[a]] = 1;
        }
      }
    }

    std::vector<BestSplit> best(slots);
    std::vector<double> eps(slots);
    for (std::size_t s = 0; s < slots; ++s) {
      const auto& st = stats[static_cast<std::size_t>(active[s])];
      eps[s] = 1e-12 * (params.criterion == Criterion::Gini ? st.w : st.ss);
    }
    std::vector<SplitState> state(slots);
    for (std::size_t f = 0; f < p; ++f) {
      std::fill(state.begin(), state.end(), SplitState{});
      const auto& rf = rows[f];
      const auto& vf = vals[f];
      for (std::size_t k = 0; k < rf.size(); ++k) {
        const std::uint32_t r = rf[k];
        const auto s = static_cast<std::size_t>(slot_of[static_cast<std::size_t>(node_of[r])]);
        if (!drawn[s * p + f]) continue;
        SplitState& ss = state[s];
        const double v = vf[k];
        if (ss.has_last && v != ss.last) {
          const auto& st = stats[static_cast<std::size_t>(active[s])];
          const double score =
              proxy(params.criterion, ss.wl, ss.sl) + proxy(params.criterion, st.w - ss.wl, st.s - ss.sl);
          BestSplit& b = best[s];
          if (!b.found || score > b.score + eps[s]) {
            double mid = 0.5 * (ss.last + v);
            if (!(mid < v)) mid = ss.last;
            b = {true, score, static_cast<std::int32_t>(f), mid};
          }
        }
        ss.wl += weights[r];
        ss.sl += weights[r] * targets[r];
        ss.last = v;
        ss.has_last = true;
      }
    }

    // Create children and route rows.
    for (std::size_t s = 0; s < slots; ++s) {
      const auto id = static_cast<std::size_t>(active[s]);
      if (!best[s].found) continue;
      const auto& b = best[s];
      const std::int32_t depth = nodes[id].depth + 1;
      const auto left = static_cast<std::int32_t>(nodes.size());
      nodes[id].feature = b.feature;
      nodes[id].threshold = b.threshold;
      nodes[id].left = left;
      nodes[id].right = left + 1;
      nodes[id].gain = std::max(0.0, b.score - proxy(params.criterion, stats[id].w, stats[id].s));
      nodes.push_back({.depth = depth});
      nodes.push_back({.depth = depth});
      stats.emplace_back();
      stats.emplace_back();
      paths.push_back(paths[id] * 2);
      paths.push_back(paths[id] * 2 + 1);
    }
    for (std::uint32_t r : active_rows) {
      const auto& parent = nodes[static_cast<std::size_t>(node_of[r])];
      if (parent.is_leaf()) continue;
      const std::int32_t child =
          x(r, static_cast<std::size_t>(parent.feature)) <= parent.threshold ? parent.left : parent.right;
      node_of[r] = child;
      stats[static_cast<std::size_t>(child)].add(weights[r], targets[r]);
    }

    std::vector<std::int32_t> next;
    std::vector<std::uint8_t> keep(nodes.size(), 0);
    for (std::size_t s = 0; s < slots; ++s) {
      const auto& parent = nodes[static_cast<std::size_t>(active[s])];
      if (parent.is_leaf()) continue;
      for (std::int32_t child : {parent.left, parent.right}) {
        auto& nd = nodes[static_cast<std::size_t>(child)];
        const auto& st = stats[static_cast<std::size_t>(child)];
        nd.weight = st.w;
        nd.value = st.s / st.w;
        if (nd.depth < params.max_depth && !is_pure(params.criterion, st)) {
          next.push_back(child);
          keep[static_cast<std::size_t>(child)] = 1;
        }
      }
    }
    active = std::move(next);
    if (active.empty()) break;

    const auto kept = [&](std::uint32_t r) { return keep[static_cast<std::size_t>(node_of[r])] != 0; };
    std::erase_if(active_rows, [&](std::uint32_t r) { return !kept(r); });
    for (std::size_t f = 0; f < p; ++f) {
      std::size_t out = 0;
      for (std::size_t k = 0; k < rows[f].size(); ++k) {
        if (kept(rows[f][k])) {
          rows[f][out] = rows[f][k];
          vals[f][out] = vals[f][k];
          ++out;
        }
      }
      rows[f].resize(out);
      vals[f].resize(out);
    }
  }
  return fit;
}

DecisionTree fit_tree(const Matrix& x, std::span<const double> targets, const TreeParams& params) {
  const PresortedColumns data(x);
  const std::vector<double> weights(x.rows(), 1.0);
  return fit_tree(data, targets, weights, params).tree;
}

}  // namespace forage
