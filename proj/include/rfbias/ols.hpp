#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rfbias/dataset.hpp"
#include "rfbias/error.hpp"

namespace rfbias {

struct LinearModel {
  double intercept = 0.0;
  std::vector<double> coefficients;
};

/// Rank is judged on unit-norm columns: a pivot below this fraction of the
/// largest pivot marks its column as linearly dependent on earlier ones.
inline constexpr double kRankTolerance = 1e-10;

/// Least squares of y on [1 | X] via Householder QR of the column-equilibrated
/// design. `features` is row-major with `cols` columns.
inline LinearModel fit_least_squares(std::span<const double> features, std::size_t cols, std::span<const double> y,
                                     const std::vector<std::string>& names = {}) {
  const std::size_t n = y.size();
  const std::size_t m = cols + 1;
  if (features.size() != n * cols) throw ValidationError("fit_ols: feature matrix size mismatch");
  if (n < m) {
    throw DataError("fit_ols: need at least " + std::to_string(m) + " rows for " + std::to_string(cols) +
                    " features plus intercept, got " + std::to_string(n));
  }
  auto column_name = [&](std::size_t j) {
    if (j == 0) return std::string("(intercept)");
    return j - 1 < names.size() ? names[j - 1] : "x" + std::to_string(j - 1);
  };

  // column-major design with unit-norm columns
  std::vector<double> a(n * m);
  std::vector<double> scale(m);
  for (std::size_t j = 0; j < m; ++j) {
    double* col = a.data() + j * n;
    for (std::size_t i = 0; i < n; ++i) col[i] = j == 0 ? 1.0 : features[i * cols + (j - 1)];
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm = std::hypot(norm, col[i]);
    if (norm == 0.0) throw DataError("fit_ols: rank deficient, column '" + column_name(j) + "' is all zero");
    scale[j] = norm;
    for (std::size_t i = 0; i < n; ++i) col[i] /= norm;
  }
  std::vector<double> qty(y.begin(), y.end());

  std::vector<double> diag(m);
  for (std::size_t k = 0; k < m; ++k) {
    double* col = a.data() + k * n;
    double norm = 0.0;
    for (std::size_t i = k; i < n; ++i) norm = std::hypot(norm, col[i]);
    if (norm == 0.0) {
      diag[k] = 0.0;
      continue;
    }
    const double alpha = col[k] > 0 ? -norm : norm;
    // v = x - alpha e1, stored in place; H = I - 2 v v^T / (v^T v)
    col[k] -= alpha;
    double vtv = 0.0;
    for (std::size_t i = k; i < n; ++i) vtv += col[i] * col[i];
    auto reflect = [&](double* target) {
      double dot = 0.0;
      for (std::size_t i = k; i < n; ++i) dot += col[i] * target[i];
      const double f = 2.0 * dot / vtv;
      for (std::size_t i = k; i < n; ++i) target[i] -= f * col[i];
    };
    for (std::size_t j = k + 1; j < m; ++j) reflect(a.data() + j * n);
    reflect(qty.data());
    diag[k] = alpha;
  }

  const double max_diag = std::abs(*std::max_element(diag.begin(), diag.end(),
                                                     [](double l, double r) { return std::abs(l) < std::abs(r); }));
  std::string dependent;
  for (std::size_t k = 0; k < m; ++k) {
    if (std::abs(diag[k]) <= kRankTolerance * max_diag) {
      dependent += (dependent.empty() ? "'" : ", '") + column_name(k) + "'";
    }
  }
  if (!dependent.empty()) throw DataError("fit_ols: rank deficient, dependent column(s) " + dependent);

  // back substitution on R (strict upper part in a, diagonal in diag)
  std::vector<double> beta(m);
  for (std::size_t kk = m; kk-- > 0;) {
    double s = qty[kk];
    for (std::size_t j = kk + 1; j < m; ++j) s -= a[j * n + kk] * beta[j];
    beta[kk] = s / diag[kk];
  }

  LinearModel model;
  model.intercept = beta[0] / scale[0];
  model.coefficients.resize(cols);
  for (std::size_t j = 0; j < cols; ++j) model.coefficients[j] = beta[j + 1] / scale[j + 1];
  return model;
}

inline LinearModel fit_ols(const Dataset& data) {
  return fit_least_squares(data.features(), data.cols(), data.target(), data.feature_names());
}

inline double predict_linear(const LinearModel& model, std::span<const double> feature_row) {
  if (feature_row.size() != model.coefficients.size()) {
    throw DataError("predict_linear: row has " + std::to_string(feature_row.size()) + " features, model expects " +
                    std::to_string(model.coefficients.size()));
  }
  double y = model.intercept;
  for (std::size_t j = 0; j < feature_row.size(); ++j) y += model.coefficients[j] * feature_row[j];
  return y;
}

}  // namespace rfbias
