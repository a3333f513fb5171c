#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rfbias/error.hpp"
#include "rfbias/levmar.hpp"
#include "rfbias/ols.hpp"

namespace rfbias {

/// Zero-centred logistic: 1/(1 + e^-x) - 1/2, written as tanh(x/2)/2 so it is
/// exactly odd and never overflows.
inline double logistic_shifted(double x) { return 0.5 * std::tanh(0.5 * x); }

/// Inverse of logistic_shifted: -log(1/(x + 1/2) - 1) = 2 atanh(2x).
inline double logit_core(double x) {
  if (!(x > -0.5 && x < 0.5)) {
    throw DomainError("logit_core: argument " + std::to_string(x) + " outside (-1/2, 1/2)");
  }
  return 2.0 * std::atanh(2.0 * x);
}

enum class CorrectionFamily { linear, logit, sinh, tan };

/// Tie-break preference order for family selection.
inline constexpr std::array<CorrectionFamily, 4> kFamilyPreference = {
    CorrectionFamily::logit, CorrectionFamily::sinh, CorrectionFamily::tan, CorrectionFamily::linear};

inline std::string_view to_string(CorrectionFamily f) {
  switch (f) {
    case CorrectionFamily::linear: return "linear";
    case CorrectionFamily::logit: return "logit";
    case CorrectionFamily::sinh: return "sinh";
    case CorrectionFamily::tan: return "tan";
  }
  return "?";
}

inline CorrectionFamily parse_family(std::string_view name) {
  for (auto f : kFamilyPreference) {
    if (to_string(f) == name) return f;
  }
  throw ValidationError("unknown correction family '" + std::string(name) + "' (expected linear|logit|sinh|tan)");
}

/// y = d * g((x - b) / a) + c for g in {identity, logit_core, sinh, tan}.
struct CorrectionModel {
  CorrectionFamily family = CorrectionFamily::logit;
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double d = 1.0;
  double fit_sse = 0.0;
  std::size_t n_points = 0;
  double x_min = 0.0;
  double x_max = 0.0;
  bool warning = false;  // optimizer hit its iteration budget
};

/// Relative inset of the clamp from the edge of the logit domain.
inline constexpr double kLogitClampEpsilon = 1e-6;
/// Absolute inset of the clamp from +-pi/2 for tan.
inline constexpr double kTanClampMargin = 1e-6;
/// Residual added per unit of x beyond the clamp while fitting.
inline constexpr double kDomainPenalty = 1e6;

namespace detail {

/// Largest |u| at which the family is evaluated; infinite if unbounded.
inline double u_limit(CorrectionFamily family) {
  switch (family) {
    case CorrectionFamily::logit: return 0.5 - kLogitClampEpsilon;
    case CorrectionFamily::tan: return std::numbers::pi / 2.0 - kTanClampMargin;
    default: return std::numeric_limits<double>::infinity();
  }
}

inline double shape(CorrectionFamily family, double u) {
  switch (family) {
    case CorrectionFamily::linear: return u;
    case CorrectionFamily::logit: return 2.0 * std::atanh(2.0 * u);
    case CorrectionFamily::sinh: return std::sinh(u);
    case CorrectionFamily::tan: return std::tan(u);
  }
  return u;
}

/// Slope of the shape function at u = 0.
inline double shape_slope_at_zero(CorrectionFamily family) {
  return family == CorrectionFamily::logit ? 4.0 : 1.0;
}

/// Width of x covered by one unit of a: the logit domain spans a, tan spans pi*a.
inline double domain_width_per_a(CorrectionFamily family) {
  switch (family) {
    case CorrectionFamily::logit: return 1.0;
    case CorrectionFamily::tan: return std::numbers::pi;
    default: return 2.0;
  }
}

}  // namespace detail

inline double eval_correction(const CorrectionModel& m, double x) {
  const double lim = detail::u_limit(m.family);
  const double u = std::clamp((x - m.b) / m.a, -lim, lim);
  return m.d * detail::shape(m.family, u) + m.c;
}

inline std::vector<double> apply_correction(const CorrectionModel& m, std::span<const double> predictions) {
  std::vector<double> out;
  out.reserve(predictions.size());
  for (double x : predictions) out.push_back(eval_correction(m, x));
  return out;
}

inline double correction_sse(const CorrectionModel& m, std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = eval_correction(m, x[i]) - y[i];
    s += r * r;
  }
  return s;
}

namespace detail {

inline void check_fit_inputs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("fit_correction: predictions and truths differ in length");
  if (x.empty()) throw ValidationError("fit_correction: no data points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ValidationError("fit_correction: non-finite input");
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) throw DataError("fit_correction: all predictions are identical");
}

/// Fitting residuals for parameters (log a, b, c, d). Points past the clamp
/// are evaluated at the clamp and pushed away from zero by
/// kDomainPenalty * (distance past the clamp).
inline void penalized_residuals(CorrectionFamily family, std::span<const double> x, std::span<const double> y,
                                const std::array<double, 4>& p, std::vector<double>& out) {
  const double a = std::exp(p[0]);
  const double lim = u_limit(family);
  out.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = (x[i] - p[1]) / a;
    const double uc = std::clamp(u, -lim, lim);
    double r = p[3] * shape(family, uc) + p[2] - y[i];
    if (u != uc) r += std::copysign(kDomainPenalty * std::abs(u - uc) * a, r);
    out[i] = r;
  }
}

inline double median(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  const auto mid = s.begin() + static_cast<std::ptrdiff_t>(s.size() / 2);
  std::nth_element(s.begin(), mid, s.end());
  double m = *mid;
  if (s.size() % 2 == 0) m = 0.5 * (m + *std::max_element(s.begin(), mid));
  return m;
}

inline CorrectionModel fit_linear_correction(std::span<const double> x, std::span<const double> y) {
  const LinearModel line = fit_least_squares(x, 1, y, {"prediction"});
  CorrectionModel m;
  m.family = CorrectionFamily::linear;
  m.a = 1.0;
  m.b = 0.0;
  m.c = line.intercept;
  m.d = line.coefficients[0];
  return m;
}

}  // namespace detail

/// Fits truths ~ family(predictions) by least squares. The linear family is
/// solved in closed form; the others by Levenberg-Marquardt over
/// (log a, b, c, d) from three starts: a near-identity map (very large a,
/// slope matched to the OLS line) plus two S-shaped starts centred on the
/// median prediction.
inline CorrectionModel fit_correction(std::span<const double> predictions, std::span<const double> truths,
                                      CorrectionFamily family, const LevMarOptions& options = {}) {
  detail::check_fit_inputs(predictions, truths);
  const auto [lo, hi] = std::minmax_element(predictions.begin(), predictions.end());
  const double x_min = *lo;
  const double x_max = *hi;
  const double x_range = x_max - x_min;

  const CorrectionModel linear = detail::fit_linear_correction(predictions, truths);
  CorrectionModel best = linear;
  if (family != CorrectionFamily::linear) {
    const double slope = linear.d;
    const double intercept = linear.c;
    double y_mean = 0.0;
    for (double v : truths) y_mean += v;
    y_mean /= static_cast<double>(truths.size());
    const auto [ylo, yhi] = std::minmax_element(truths.begin(), truths.end());
    const double y_scale = std::max({*yhi - *ylo, std::abs(y_mean), 1e-300});
    const double g0 = detail::shape_slope_at_zero(family);

    struct Start {
      double a, b, c, d;
    };
    std::vector<Start> starts;
    {
      const double a = 1e8 * x_range;
      const double b = 0.5 * (x_min + x_max);
      starts.push_back({a, b, intercept + slope * b, slope * a / g0});
    }
    const double x_median = detail::median(predictions);
    for (double shrink : {1.0, 0.5}) {
      const double a = shrink * 1.2 * x_range / detail::domain_width_per_a(family);
      starts.push_back({a, x_median, y_mean, slope * a / g0});
    }

    auto residuals = [&](const std::array<double, 4>& p, std::vector<double>& out) {
      detail::penalized_residuals(family, predictions, truths, p, out);
    };
    std::optional<CorrectionModel> fitted;
    for (const Start& s : starts) {
      const std::array<double, 4> p0{std::log(s.a), s.b, s.c, s.d};
      const std::array<double, 4> typical{1.0, std::max(x_range, std::abs(s.b)), y_scale,
                                          std::max(std::abs(s.d), 1e-300)};
      const auto res = levenberg_marquardt<4>(residuals, p0, typical, options);
      CorrectionModel m;
      m.family = family;
      m.a = std::exp(res.params[0]);
      m.b = res.params[1];
      m.c = res.params[2];
      m.d = res.params[3];
      m.warning = !res.converged;
      if (!(m.a > 0.0) || !std::isfinite(m.a) || !std::isfinite(m.b) || !std::isfinite(m.c) || !std::isfinite(m.d)) {
        continue;
      }
      m.fit_sse = correction_sse(m, predictions, truths);
      if (!std::isfinite(m.fit_sse)) continue;
      if (!fitted || m.fit_sse < fitted->fit_sse) fitted = m;
    }
    if (!fitted) throw DataError("fit_correction: optimizer produced no finite fit for " + std::string(to_string(family)));
    best = *fitted;
  }
  best.fit_sse = correction_sse(best, predictions, truths);
  best.n_points = predictions.size();
  best.x_min = x_min;
  best.x_max = x_max;
  return best;
}

struct FamilyFit {
  CorrectionFamily family;
  std::optional<CorrectionModel> model;
  std::string error;  // set when the fit failed
};

/// Fits every family, in preference order.
inline std::vector<FamilyFit> fit_all_families(std::span<const double> predictions, std::span<const double> truths,
                                               const LevMarOptions& options = {}) {
  std::vector<FamilyFit> fits;
  for (auto family : kFamilyPreference) {
    FamilyFit f{family, std::nullopt, {}};
    try {
      f.model = fit_correction(predictions, truths, family, options);
    } catch (const std::exception& e) {
      f.error = e.what();
    }
    fits.push_back(std::move(f));
  }
  return fits;
}

/// Lowest fit_sse wins. SSEs within 1e-12 of the total sum of squares of the
/// truths count as tied and go to the earlier family in kFamilyPreference.
inline std::pair<CorrectionFamily, CorrectionModel> select_best_fit(std::span<const double> truths,
                                                                    const std::vector<FamilyFit>& fits) {
  double mean = 0.0;
  for (double v : truths) mean += v;
  mean /= static_cast<double>(std::max<std::size_t>(truths.size(), 1));
  double sst = 0.0;
  for (double v : truths) sst += (v - mean) * (v - mean);
  const double tie = 1e-12 * std::max(sst, std::numeric_limits<double>::min());

  const CorrectionModel* best = nullptr;
  std::string errors;
  for (const auto& f : fits) {
    if (!f.model) {
      errors += std::string(errors.empty() ? "" : "; ") + f.error;
      continue;
    }
    if (!best || f.model->fit_sse < best->fit_sse - tie) best = &*f.model;
  }
  if (!best) throw DataError("select_family: no family could be fitted (" + errors + ")");
  return {best->family, *best};
}

inline std::pair<CorrectionFamily, CorrectionModel> select_family(std::span<const double> predictions,
                                                                  std::span<const double> truths,
                                                                  const LevMarOptions& options = {}) {
  return select_best_fit(truths, fit_all_families(predictions, truths, options));
}

}  // namespace rfbias
