#pragma once

// Reference computations used by the tests. None of these call into the
// library routine they are used to check; they are deliberately naive.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Central differences with step h.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec up = x, down = x;
    up[j] += h;
    down[j] -= h;
    g[j] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

/// lambda_{k,N} = w_k / sum_{j=0}^N w_j with w_k = gamma_k^r, summed in long double.
inline std::vector<double> weights(const std::function<double(std::size_t)>& gamma, double r,
                                   std::size_t N) {
  std::vector<long double> w(N + 1);
  long double total = 0.0L;
  for (std::size_t k = 0; k <= N; ++k) {
    w[k] = std::pow(static_cast<long double>(gamma(k)), static_cast<long double>(r));
    total += w[k];
  }
  std::vector<double> out(N + 1);
  for (std::size_t k = 0; k <= N; ++k) out[k] = static_cast<double>(w[k] / total);
  return out;
}

/// xbar_{N,i} = lambda_0 xbar_{0,i} + sum_{k=1}^N lambda_k x_{k-1,i+1}, with
/// history[k][j] = x_{k,j+1} and i one-based.
inline Vec reconstruct_average(const std::vector<std::vector<Vec>>& history, const Vec& xbar0,
                               const std::vector<double>& lambda, std::size_t i) {
  const std::size_t N = lambda.size() - 1;
  Vec out = lambda[0] * xbar0;
  for (std::size_t k = 1; k <= N; ++k) out += lambda[k] * history[k - 1][i];
  return out;
}

/// max over a uniform grid of the box of F(y)^T (x - y), F(y) = M y + q.
/// Two-dimensional boxes only; a lower estimate of the gap that converges
/// as the grid refines.
inline double grid_gap_2d(const Mat& M, const Vec& q, const Vec& lo, const Vec& hi, const Vec& x,
                          int cells = 400) {
  double best = -std::numeric_limits<double>::infinity();
  Vec y(2);
  for (int a = 0; a <= cells; ++a) {
    y[0] = lo[0] + (hi[0] - lo[0]) * a / cells;
    for (int b = 0; b <= cells; ++b) {
      y[1] = lo[1] + (hi[1] - lo[1]) * b / cells;
      best = std::max(best, (M * y + q).dot(x - y));
    }
  }
  return best;
}

/// Direct sum of (k + Gamma)^{-beta} for k = 0..K, in long double.
inline double harmonic_sum(double beta, double Gamma, std::size_t K) {
  long double s = 0.0L;
  for (std::size_t k = 0; k <= K; ++k) {
    s += std::pow(static_cast<long double>(k) + Gamma, -static_cast<long double>(beta));
  }
  return static_cast<double>(s);
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double lx = std::log(x[j]), ly = std::log(y[j]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

/// Solution of VI([lo, hi]^n, M x + q) for strongly monotone M by the
/// natural-map fixed point x <- clamp(x - t (M x + q)) with small t.
inline Vec projected_fixed_point(const Mat& M, const Vec& q, double lo, double hi,
                                 std::size_t iters = 200000) {
  const double t = 0.5 * (M + M.transpose()).eigenvalues().real().minCoeff() /
                   std::pow(M.operatorNorm(), 2);
  Vec x = Vec::Zero(q.size());
  for (std::size_t it = 0; it < iters; ++it) {
    x = (x - t * (M * x + q)).cwiseMax(lo).cwiseMin(hi);
  }
  return x;
}

}  // namespace oracle
