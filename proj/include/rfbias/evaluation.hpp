#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rfbias/error.hpp"
#include "rfbias/ols.hpp"
#include "rfbias/runs_test.hpp"

namespace rfbias {

struct Range {
  double min = 0.0;
  double max = 0.0;
  double width() const { return max - min; }
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

struct EvaluationReport {
  double mse = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  std::optional<RunsTestResult> runs_test;  // absent when every residual is zero or one-signed
  Range truth_range;
  Range prediction_range;
  std::size_t n = 0;
};

/// Residuals within this fraction of the data's magnitude count as exact ties.
inline constexpr double kZeroResidualTolerance = 1e-12;

namespace detail {

inline void check_pairs(std::span<const double> predictions, std::span<const double> truths, const char* what) {
  if (predictions.size() != truths.size()) {
    throw ValidationError(std::string(what) + ": predictions and truths differ in length");
  }
  if (predictions.empty()) throw ValidationError(std::string(what) + ": empty input");
}

inline Range range_of(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {*lo, *hi};
}

}  // namespace detail

inline double mse(std::span<const double> predictions, std::span<const double> truths) {
  detail::check_pairs(predictions, truths, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - truths[i];
    s += e * e;
  }
  return s / static_cast<double>(predictions.size());
}

/// Pearson correlation; 0 if either side is constant.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  detail::check_pairs(x, y, "pearson");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

/// OLS line of truth (dependent) on prediction (independent).
inline LineFit fit_line(std::span<const double> predictions, std::span<const double> truths) {
  detail::check_pairs(predictions, truths, "fit_line");
  const Range r = detail::range_of(predictions);
  if (r.min == r.max) throw DataError("fit_line: predictions are constant");
  const LinearModel m = fit_least_squares(predictions, 1, truths, {"prediction"});
  return {m.coefficients[0], m.intercept};
}

/// truth - (slope * prediction + intercept), ordered by ascending prediction
/// (ties keep input order).
inline std::vector<double> linearized_residuals(std::span<const double> predictions, std::span<const double> truths) {
  const LineFit line = fit_line(predictions, truths);
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return predictions[a] < predictions[b]; });
  std::vector<double> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back(truths[i] - (line.slope * predictions[i] + line.intercept));
  return out;
}

/// Signs of `residuals`, dropping those within `tolerance` of zero.
inline std::vector<Sign> residual_signs(std::span<const double> residuals, double tolerance) {
  std::vector<Sign> signs;
  signs.reserve(residuals.size());
  for (double r : residuals) {
    if (std::abs(r) > tolerance) signs.push_back(r > 0 ? Sign::plus : Sign::minus);
  }
  return signs;
}

/// Tolerance under which a linearized residual is treated as an exact tie.
inline double zero_residual_tolerance(std::span<const double> predictions, std::span<const double> truths) {
  double scale = 0.0;
  for (double v : predictions) scale = std::max(scale, std::abs(v));
  for (double v : truths) scale = std::max(scale, std::abs(v));
  return kZeroResidualTolerance * scale;
}

/// Runs test over the signs of the linearized residuals; absent if the signs
/// do not include both directions.
inline std::optional<RunsTestResult> residual_runs_test(std::span<const double> predictions,
                                                        std::span<const double> truths) {
  const auto residuals = linearized_residuals(predictions, truths);
  const auto signs = residual_signs(residuals, zero_residual_tolerance(predictions, truths));
  const bool has_pos = std::find(signs.begin(), signs.end(), Sign::plus) != signs.end();
  const bool has_neg = std::find(signs.begin(), signs.end(), Sign::minus) != signs.end();
  if (!has_pos || !has_neg) return std::nullopt;
  return runs_test(signs);
}

inline EvaluationReport evaluate(std::span<const double> predictions, std::span<const double> truths) {
  detail::check_pairs(predictions, truths, "evaluate");
  if (predictions.size() < 3) throw ValidationError("evaluate: need at least 3 points");
  EvaluationReport rep;
  rep.n = predictions.size();
  rep.mse = mse(predictions, truths);
  const LineFit line = fit_line(predictions, truths);
  rep.slope = line.slope;
  rep.intercept = line.intercept;
  rep.runs_test = residual_runs_test(predictions, truths);
  rep.truth_range = detail::range_of(truths);
  rep.prediction_range = detail::range_of(predictions);
  return rep;
}

}  // namespace rfbias
