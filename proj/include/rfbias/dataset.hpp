#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rfbias/error.hpp"
#include "rfbias/rng.hpp"

namespace rfbias {

/// Feature matrix (row-major) plus target vector and column labels.
/// Immutable after construction; every value is finite.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<double> features, std::vector<double> target,
          std::vector<std::string> feature_names, std::string target_name = "target")
      : features_(std::move(features)),
        target_(std::move(target)),
        feature_names_(std::move(feature_names)),
        target_name_(std::move(target_name)) {
    const std::size_t cols = feature_names_.size();
    if (cols == 0 ? !features_.empty() : features_.size() != target_.size() * cols) {
      throw ValidationError("Dataset: feature matrix has " + std::to_string(features_.size()) +
                            " values, expected rows(" + std::to_string(target_.size()) +
                            ") x columns(" + std::to_string(cols) + ")");
    }
    for (double v : features_) {
      if (!std::isfinite(v)) throw ValidationError("Dataset: non-finite feature value");
    }
    for (double v : target_) {
      if (!std::isfinite(v)) throw ValidationError("Dataset: non-finite target value");
    }
  }

  std::size_t rows() const noexcept { return target_.size(); }
  std::size_t cols() const noexcept { return feature_names_.size(); }
  bool empty() const noexcept { return target_.empty(); }

  double feature(std::size_t row, std::size_t col) const { return features_[row * cols() + col]; }
  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * cols(), cols()};
  }
  std::span<const double> target() const noexcept { return target_; }
  std::span<const double> features() const noexcept { return features_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::string& target_name() const noexcept { return target_name_; }

  /// Rows picked by index, in the given order.
  Dataset subset(std::span<const std::size_t> indices) const {
    std::vector<double> f;
    std::vector<double> t;
    f.reserve(indices.size() * cols());
    t.reserve(indices.size());
    for (std::size_t i : indices) {
      auto r = row(i);
      f.insert(f.end(), r.begin(), r.end());
      t.push_back(target_[i]);
    }
    return Dataset(std::move(f), std::move(t), feature_names_, target_name_);
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<double> features_;
  std::vector<double> target_;
  std::vector<std::string> feature_names_;
  std::string target_name_ = "target";
};

/// Target = sum_j coefficients[j] * x_j + (noise_terms hidden N(0,1) addends),
/// with every feature drawn from N(feature_mu, feature_sigma).
struct SyntheticSpec {
  std::vector<double> coefficients;
  std::size_t noise_terms = 0;
  std::size_t n_points = 0;
  double feature_mu = 0.0;
  double feature_sigma = 1.0;

  void validate() const {
    if (coefficients.empty()) throw ValidationError("SyntheticSpec.coefficients must be non-empty");
    if (n_points < 1) throw ValidationError("SyntheticSpec.n_points must be >= 1");
    if (!(feature_sigma > 0.0)) throw ValidationError("SyntheticSpec.feature_sigma must be > 0");
    for (double c : coefficients) {
      if (!std::isfinite(c)) throw ValidationError("SyntheticSpec.coefficients must be finite");
    }
  }
};

/// Spreadsheet-style column label: A..Z, AA, AB, ...
inline std::string column_letter(std::size_t index) {
  std::string name;
  ++index;
  while (index > 0) {
    --index;
    name.insert(name.begin(), static_cast<char>('A' + index % 26));
    index /= 26;
  }
  return name;
}

inline Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t p = spec.coefficients.size();
  RngStream rng(seed);
  std::vector<double> features(spec.n_points * p);
  std::vector<double> target(spec.n_points);
  for (std::size_t i = 0; i < spec.n_points; ++i) {
    double y = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double x = rng.normal(spec.feature_mu, spec.feature_sigma);
      features[i * p + j] = x;
      y += spec.coefficients[j] * x;
    }
    for (std::size_t k = 0; k < spec.noise_terms; ++k) y += rng.standard_normal();
    target[i] = y;
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back(column_letter(j));
  return Dataset(std::move(features), std::move(target), std::move(names));
}

struct SplitSpec {
  double train_fraction = 0.8;
  double validation_fraction = 0.0;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    for (double f : {train_fraction, validation_fraction, test_fraction}) {
      if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("SplitSpec fractions must lie in [0, 1]");
    }
    if (std::abs(train_fraction + validation_fraction + test_fraction - 1.0) > 1e-9) {
      throw ValidationError("SplitSpec fractions must sum to 1");
    }
    if (!(train_fraction > 0.0)) throw ValidationError("SplitSpec.train_fraction must be > 0");
    if (!(test_fraction > 0.0)) throw ValidationError("SplitSpec.test_fraction must be > 0");
  }
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

struct DatasetSplit {
  Dataset train;
  Dataset validation;  // empty when validation_fraction == 0
  Dataset test;
};

/// Seeded permutation of [0, n) partitioned as test | validation | train.
/// Validation and test get floor(n * fraction) rows; train takes the remainder.
inline SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n == 0) throw DataError("split: dataset is empty");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RngStream rng(spec.seed);
  std::shuffle(perm.begin(), perm.end(), rng.engine());

  auto count_for = [n](double fraction) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
  };
  const std::size_t n_test = count_for(spec.test_fraction);
  const std::size_t n_val = count_for(spec.validation_fraction);
  if (n_test + n_val >= n) throw DataError("split: training partition would be empty");
  if (n_test == 0) throw DataError("split: test partition would be empty");
  if (spec.validation_fraction > 0.0 && n_val == 0) {
    throw DataError("split: validation partition would be empty");
  }

  SplitIndices out;
  auto it = perm.begin();
  out.test.assign(it, it + static_cast<std::ptrdiff_t>(n_test));
  it += static_cast<std::ptrdiff_t>(n_test);
  out.validation.assign(it, it + static_cast<std::ptrdiff_t>(n_val));
  it += static_cast<std::ptrdiff_t>(n_val);
  out.train.assign(it, perm.end());
  return out;
}

inline DatasetSplit split_dataset(const Dataset& data, const SplitSpec& spec) {
  const SplitIndices idx = split_indices(data.rows(), spec);
  return {data.subset(idx.train), data.subset(idx.validation), data.subset(idx.test)};
}

}  // namespace rfbias
