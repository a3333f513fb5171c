#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace rfbias {

struct LevMarOptions {
  std::size_t max_iterations = 500;
  double relative_tolerance = 1e-10;  // stop when an accepted step improves SSE by less than this fraction
  double fd_relative_step = 1e-6;     // forward-difference step, relative to max(|p|, typical scale)
  double initial_lambda = 1e-3;
  double max_lambda = 1e16;
};

template <std::size_t N>
struct LevMarResult {
  std::array<double, N> params{};
  double sse = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

/// Solves A x = b for a small symmetric system by Gaussian elimination with
/// partial pivoting. Empty on a singular matrix.
template <std::size_t N>
std::optional<std::array<double, N>> solve_small(std::array<std::array<double, N>, N> a, std::array<double, N> b) {
  for (std::size_t k = 0; k < N; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < N; ++i) {
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    }
    if (!(std::abs(a[piv][k]) > 0.0)) return std::nullopt;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t i = k + 1; i < N; ++i) {
      const double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < N; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  std::array<double, N> x{};
  for (std::size_t k = N; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < N; ++j) s -= a[k][j] * x[j];
    x[k] = s / a[k][k];
  }
  return x;
}

inline double sum_squares(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Levenberg-Marquardt with Marquardt diagonal scaling and a forward-difference
/// Jacobian. `residuals(params, out)` must resize and fill `out`; non-finite
/// residuals make a trial step count as a failure. `typical` gives a per-parameter
/// magnitude used to size difference steps when a parameter is near zero.
template <std::size_t N, class ResidualFn>
LevMarResult<N> levenberg_marquardt(ResidualFn&& residuals, std::array<double, N> start,
                                    const std::array<double, N>& typical, const LevMarOptions& opt = {}) {
  LevMarResult<N> res;
  res.params = start;
  std::vector<double> r;
  std::vector<double> r_trial;
  residuals(res.params, r);
  res.sse = detail::sum_squares(r);
  if (!std::isfinite(res.sse)) return res;

  const std::size_t m = r.size();
  std::vector<std::array<double, N>> jac(m);
  double lambda = opt.initial_lambda;
  bool need_jacobian = true;
  std::array<std::array<double, N>, N> jtj{};
  std::array<double, N> jtr{};

  while (res.iterations < opt.max_iterations) {
    if (res.sse == 0.0) {
      res.converged = true;
      break;
    }
    if (need_jacobian) {
      for (std::size_t j = 0; j < N; ++j) {
        auto p = res.params;
        const double h = opt.fd_relative_step * std::max(std::abs(p[j]), typical[j]);
        p[j] += h;
        const double step = p[j] - res.params[j];
        residuals(p, r_trial);
        for (std::size_t i = 0; i < m; ++i) jac[i][j] = (r_trial[i] - r[i]) / step;
      }
      jtj = {};
      jtr = {};
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t a = 0; a < N; ++a) {
          jtr[a] += jac[i][a] * r[i];
          for (std::size_t b = 0; b < N; ++b) jtj[a][b] += jac[i][a] * jac[i][b];
        }
      }
      need_jacobian = false;
    }
    ++res.iterations;

    double max_diag = 0.0;
    for (std::size_t a = 0; a < N; ++a) max_diag = std::max(max_diag, jtj[a][a]);
    auto damped = jtj;
    std::array<double, N> rhs{};
    for (std::size_t a = 0; a < N; ++a) {
      damped[a][a] += lambda * std::max(jtj[a][a], 1e-12 * max_diag);
      rhs[a] = -jtr[a];
    }
    const auto delta = detail::solve_small<N>(damped, rhs);
    double sse_trial = std::numeric_limits<double>::infinity();
    std::array<double, N> trial = res.params;
    if (delta) {
      for (std::size_t a = 0; a < N; ++a) trial[a] += (*delta)[a];
      residuals(trial, r_trial);
      sse_trial = detail::sum_squares(r_trial);
    }
    if (sse_trial < res.sse) {
      const double improvement = (res.sse - sse_trial) / res.sse;
      res.params = trial;
      res.sse = sse_trial;
      r.swap(r_trial);
      lambda = std::max(lambda / 10.0, 1e-12);
      need_jacobian = true;
      if (improvement < opt.relative_tolerance) {
        res.converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > opt.max_lambda) {
        // no descent direction left at this point
        res.converged = true;
        break;
      }
    }
  }
  return res;
}

}  // namespace rfbias
