#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "rfbias/dataset.hpp"
#include "rfbias/error.hpp"
#include "rfbias/forest.hpp"
#include "rfbias/forest_model.hpp"
#include "rfbias/parallel.hpp"
#include "rfbias/rng.hpp"

namespace rfbias {

/// Draws allowed per node before a leaf_min violation ends growth there.
inline constexpr std::size_t kRandomSplitAttempts = 25;

namespace detail {

struct RandomSplitWorkspace {
  std::vector<double> values;
  std::vector<std::size_t> order;
};

}  // namespace detail

/// Split that never looks at the target: a uniformly chosen feature, then a
/// uniformly chosen pair of adjacent distinct values at this node, cut at the
/// midpoint.
///
/// Features are visited in random order without replacement until one with at
/// least two distinct values turns up; absent if every feature is constant.
/// A draw whose children violate `leaf_min` is retried with a fresh feature
/// and pair, up to kRandomSplitAttempts times.
inline std::optional<Split> random_split(const Dataset& data, std::span<const std::size_t> rows, RngStream& rng,
                                         std::size_t leaf_min, detail::RandomSplitWorkspace& ws) {
  const std::size_t n = rows.size();
  const std::size_t p = data.cols();
  if (n < 2 || n < 2 * leaf_min || p == 0) return std::nullopt;

  for (std::size_t attempt = 0; attempt < kRandomSplitAttempts; ++attempt) {
    ws.order.resize(p);
    std::iota(ws.order.begin(), ws.order.end(), std::size_t{0});
    std::optional<std::size_t> feature;
    for (std::size_t k = 0; k < p; ++k) {
      std::swap(ws.order[k], ws.order[k + rng.uniform_index(p - k)]);
      const std::size_t f = ws.order[k];
      ws.values.clear();
      for (std::size_t r : rows) ws.values.push_back(data.feature(r, f));
      std::sort(ws.values.begin(), ws.values.end());
      ws.values.erase(std::unique(ws.values.begin(), ws.values.end()), ws.values.end());
      if (ws.values.size() >= 2) {
        feature = f;
        break;
      }
    }
    if (!feature) return std::nullopt;

    const std::size_t pair = rng.uniform_index(ws.values.size() - 1);
    const double cutoff = midpoint_cutoff(ws.values[pair], ws.values[pair + 1]);
    const auto n_left = static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [&](std::size_t r) { return data.feature(r, *feature) < cutoff; }));
    if (n_left >= leaf_min && n - n_left >= leaf_min) return Split{*feature, cutoff, 0.0};
  }
  return std::nullopt;
}

inline std::optional<Split> random_split(const Dataset& data, std::span<const std::size_t> rows, RngStream& rng,
                                         std::size_t leaf_min) {
  detail::RandomSplitWorkspace ws;
  return random_split(data, rows, rng, leaf_min, ws);
}

/// Every tree sees all rows and all features; diversity comes only from the
/// random splits.
inline ForestModel train_pure_forest(const Dataset& train, const PureForestParams& params,
                                     std::size_t threads = default_thread_count()) {
  if (train.empty()) throw DataError("train_pure_forest: training set is empty");
  params.validate();
  ForestModel model;
  model.params = params;
  model.feature_names = train.feature_names();
  model.target_name = train.target_name();
  model.trees.resize(params.ntree);
  parallel_for(params.ntree, threads, [&](std::size_t t) {
    RngStream rng(derive_seed(params.seed, t));
    detail::RandomSplitWorkspace ws;
    std::vector<std::size_t> rows(train.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    model.trees[t] = detail::grow_depth_first(train, std::move(rows), [&](std::span<const std::size_t> node_rows) {
      return random_split(train, node_rows, rng, params.leaf_min, ws);
    });
  });
  return model;
}

}  // namespace rfbias
