#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "rfbias/dataset.hpp"
#include "rfbias/error.hpp"
#include "rfbias/forest_model.hpp"
#include "rfbias/parallel.hpp"
#include "rfbias/rng.hpp"

namespace rfbias {

struct Split {
  std::size_t feature = 0;
  double cutoff = 0.0;
  double child_sse = 0.0;  // summed squared deviation from each child's mean
};

/// Midpoint of two adjacent distinct values, nudged so that lo < cutoff <= hi
/// survives rounding.
inline double midpoint_cutoff(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid > lo ? mid : hi;
}

namespace detail {

struct SplitWorkspace {
  std::vector<std::pair<double, double>> pairs;  // (feature value, centered target)
  std::vector<double> values;
  std::vector<std::size_t> features;
};

inline double mean_target(const Dataset& data, std::span<const std::size_t> rows) {
  double sum = 0.0;
  for (std::size_t r : rows) sum += data.target()[r];
  return sum / static_cast<double>(rows.size());
}

}  // namespace detail

/// Variance-minimizing split over `candidate_features`. Candidate cutoffs are
/// midpoints between adjacent distinct sorted values; both children must hold
/// at least `nodesize` rows. Ties go to the lowest feature index, then the
/// lowest cutoff. Absent when the node target is constant or nothing is legal.
inline std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                       std::span<const std::size_t> candidate_features, std::size_t nodesize,
                                       detail::SplitWorkspace& ws) {
  const std::size_t n = rows.size();
  if (n < 2 || n < 2 * nodesize) return std::nullopt;
  const auto y = data.target();
  const double first = y[rows[0]];
  if (std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return y[r] == first; })) return std::nullopt;

  const double mean = detail::mean_target(data, rows);
  double total_ss = 0.0;
  for (std::size_t r : rows) total_ss += (y[r] - mean) * (y[r] - mean);

  ws.features.assign(candidate_features.begin(), candidate_features.end());
  std::sort(ws.features.begin(), ws.features.end());

  std::optional<Split> best;
  double best_score = 0.0;
  for (std::size_t f : ws.features) {
    ws.pairs.clear();
    for (std::size_t r : rows) ws.pairs.emplace_back(data.feature(r, f), y[r] - mean);
    std::sort(ws.pairs.begin(), ws.pairs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double sum_total = 0.0;
    for (const auto& p : ws.pairs) sum_total += p.second;
    double sum_left = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      sum_left += ws.pairs[i].second;
      const std::size_t n_left = i + 1;
      if (n_left < nodesize) continue;
      if (n - n_left < nodesize) break;
      if (!(ws.pairs[i].first < ws.pairs[i + 1].first)) continue;
      const double sum_right = sum_total - sum_left;
      const double score = sum_left * sum_left / static_cast<double>(n_left) +
                           sum_right * sum_right / static_cast<double>(n - n_left);
      if (!best || score > best_score) {
        best_score = score;
        best = Split{f, midpoint_cutoff(ws.pairs[i].first, ws.pairs[i + 1].first), 0.0};
      }
    }
  }
  if (best) best->child_sse = std::max(0.0, total_ss - best_score);
  return best;
}

inline std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                       std::span<const std::size_t> candidate_features, std::size_t nodesize) {
  detail::SplitWorkspace ws;
  return best_split(data, rows, candidate_features, nodesize, ws);
}

namespace detail {

/// Reorders rows[begin, end) so that rows with value < cutoff come first;
/// returns the boundary.
inline std::size_t partition_rows(const Dataset& data, std::vector<std::size_t>& rows, std::size_t begin,
                                  std::size_t end, const Split& split) {
  auto mid = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                   rows.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t r) {
                                     return data.feature(r, split.feature) < split.cutoff;
                                   });
  return static_cast<std::size_t>(mid - rows.begin());
}

inline TreeNode make_leaf(const Dataset& data, std::span<const std::size_t> rows) {
  TreeNode leaf;
  leaf.prediction = mean_target(data, rows);
  leaf.count = rows.size();
  return leaf;
}

/// Depth-first growth until `find_split(rows)` returns absent.
template <class FindSplit>
RegressionTree grow_depth_first(const Dataset& data, std::vector<std::size_t> rows, FindSplit&& find_split) {
  struct Pending {
    std::size_t node, begin, end;
  };
  std::vector<TreeNode> nodes(1);
  std::vector<Pending> stack{{0, 0, rows.size()}};
  while (!stack.empty()) {
    const Pending cur = stack.back();
    stack.pop_back();
    std::span<const std::size_t> span(rows.data() + cur.begin, cur.end - cur.begin);
    const std::optional<Split> split = find_split(span);
    if (!split) {
      nodes[cur.node] = make_leaf(data, span);
      continue;
    }
    const std::size_t mid = partition_rows(data, rows, cur.begin, cur.end, *split);
    const auto left = static_cast<std::int32_t>(nodes.size());
    nodes.resize(nodes.size() + 2);
    TreeNode& node = nodes[cur.node];
    node.feature = static_cast<std::int32_t>(split->feature);
    node.cutoff = split->cutoff;
    node.left = left;
    node.right = left + 1;
    node.count = cur.end - cur.begin;
    stack.push_back({static_cast<std::size_t>(left) + 1, mid, cur.end});
    stack.push_back({static_cast<std::size_t>(left), cur.begin, mid});
  }
  return RegressionTree(std::move(nodes));
}

/// Best-first growth: always expands the frontier node with the largest
/// impurity decrease until `max_leaves` leaves exist.
template <class FindSplit>
RegressionTree grow_best_first(const Dataset& data, std::vector<std::size_t> rows, std::size_t max_leaves,
                               FindSplit&& find_split) {
  struct Candidate {
    double gain;
    std::size_t node, begin, end;
    Split split;
  };
  auto worse = [](const Candidate& a, const Candidate& b) {
    return a.gain != b.gain ? a.gain < b.gain : a.node > b.node;
  };
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(worse)> frontier(worse);
  std::vector<TreeNode> nodes;

  auto open = [&](std::size_t begin, std::size_t end) {
    const std::size_t id = nodes.size();
    std::span<const std::size_t> span(rows.data() + begin, end - begin);
    nodes.push_back(make_leaf(data, span));
    if (auto split = find_split(span)) {
      const double m = nodes[id].prediction;
      double ss = 0.0;
      for (std::size_t r : span) ss += (data.target()[r] - m) * (data.target()[r] - m);
      frontier.push({ss - split->child_sse, id, begin, end, *split});
    }
    return static_cast<std::int32_t>(id);
  };

  open(0, rows.size());
  std::size_t leaves = 1;
  while (leaves < max_leaves && !frontier.empty()) {
    const Candidate c = frontier.top();
    frontier.pop();
    const std::size_t mid = partition_rows(data, rows, c.begin, c.end, c.split);
    const std::int32_t left = open(c.begin, mid);
    const std::int32_t right = open(mid, c.end);
    TreeNode& node = nodes[c.node];
    node.feature = static_cast<std::int32_t>(c.split.feature);
    node.cutoff = c.split.cutoff;
    node.left = left;
    node.right = right;
    ++leaves;
  }
  return RegressionTree(std::move(nodes));
}

inline RegressionTree grow_standard_tree(const Dataset& data, const ForestParams& params, std::uint64_t tree_seed) {
  RngStream rng(tree_seed);
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  std::vector<std::size_t> rows(n);
  if (params.bootstrap) {
    for (auto& r : rows) r = rng.uniform_index(n);
  } else {
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }

  SplitWorkspace ws;
  std::vector<std::size_t> pool(p);
  std::vector<std::size_t> candidates(params.mtry);
  auto find_split = [&](std::span<const std::size_t> node_rows) -> std::optional<Split> {
    // partial Fisher-Yates: first mtry slots become a uniform sample without replacement
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t k = 0; k < params.mtry; ++k) {
      std::swap(pool[k], pool[k + rng.uniform_index(p - k)]);
      candidates[k] = pool[k];
    }
    return best_split(data, node_rows, candidates, params.nodesize, ws);
  };
  if (params.max_terminal_nodes) {
    return grow_best_first(data, std::move(rows), *params.max_terminal_nodes, find_split);
  }
  return grow_depth_first(data, std::move(rows), find_split);
}

}  // namespace detail

/// Bagged CART forest. Tree t draws all of its randomness from
/// RngStream(derive_seed(params.seed, t)), so the result does not depend on
/// `threads`.
inline ForestModel train_forest(const Dataset& train, const ForestParams& params,
                                std::size_t threads = default_thread_count()) {
  if (train.empty()) throw DataError("train_forest: training set is empty");
  params.validate(train.cols());
  ForestModel model;
  model.params = params;
  model.feature_names = train.feature_names();
  model.target_name = train.target_name();
  model.trees.resize(params.ntree);
  parallel_for(params.ntree, threads, [&](std::size_t t) {
    model.trees[t] = detail::grow_standard_tree(train, params, derive_seed(params.seed, t));
  });
  return model;
}

}  // namespace rfbias
