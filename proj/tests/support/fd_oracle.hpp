#pragma once

// Central-difference reference derivatives, independent of the jet kernel.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace kahred::testing {

using ScalarField = std::function<double(std::span<const double>)>;

namespace detail {

// stencil offsets (in units of h) and weights for d^e/dx^e, second-order accurate
inline void central_stencil(int e, std::vector<int>& off, std::vector<double>& w, double h) {
  switch (e) {
    case 0: off = {0}; w = {1.0}; return;
    case 1: off = {-1, 1}; w = {-0.5 / h, 0.5 / h}; return;
    case 2: off = {-1, 0, 1}; w = {1 / (h * h), -2 / (h * h), 1 / (h * h)}; return;
    case 3: {
      const double s = 1.0 / (2 * h * h * h);
      off = {-2, -1, 1, 2};
      w = {-s, 2 * s, -2 * s, s};
      return;
    }
    case 4: {
      const double s = 1.0 / (h * h * h * h);
      off = {-2, -1, 0, 1, 2};
      w = {s, -4 * s, 6 * s, -4 * s, s};
      return;
    }
    default: throw std::invalid_argument("fd stencil order above 4");
  }
}

inline double tensor_difference(const ScalarField& f, std::span<const double> x,
                                std::span<const int> m, double h) {
  const std::size_t n = x.size();
  std::vector<std::vector<int>> offs(n);
  std::vector<std::vector<double>> ws(n);
  for (std::size_t i = 0; i < n; ++i) central_stencil(m[i], offs[i], ws[i], h);
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> y(x.begin(), x.end());
  double sum = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = x[i] + offs[i][idx[i]] * h;
      w *= ws[i][idx[i]];
    }
    sum += w * f(y);
    std::size_t k = 0;
    while (k < n && ++idx[k] == offs[k].size()) idx[k++] = 0;
    if (k == n) break;
  }
  return sum;
}

}  // namespace detail

/// Tensor-product central difference with one Richardson step (error O(h^4)).
inline double fd_oracle(const ScalarField& f, std::span<const double> point,
                        std::span<const int> m, double h) {
  const double coarse = detail::tensor_difference(f, point, m, h);
  const double fine = detail::tensor_difference(f, point, m, h / 2);
  return (4 * fine - coarse) / 3;
}

/// Sweep step sizes and keep the estimate whose neighbour agrees best.
inline double fd_oracle_sweep(const ScalarField& f, std::span<const double> point,
                              std::span<const int> m,
                              std::span<const double> steps = {}) {
  static const std::vector<double> kDefault = {0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625};
  if (steps.empty()) steps = kDefault;
  std::vector<double> est;
  for (double h : steps) est.push_back(fd_oracle(f, point, m, h));
  double best = est.back();
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < est.size(); ++i) {
    const double d = std::abs(est[i] - est[i + 1]);
    if (d < gap) {
      gap = d;
      best = est[i + 1];
    }
  }
  return best;
}

/// Tensor-product differences in long double with a three-level Richardson table
/// (error O(h^8)), then the same step sweep. `f` takes std::span<const long double>.
template <class F>
double fd_oracle_precise(F&& f, std::span<const double> point, std::span<const int> m) {
  using LD = long double;
  const std::size_t n = point.size();
  auto tensor = [&](LD h) {
    std::vector<std::vector<int>> offs(n);
    std::vector<std::vector<LD>> ws(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> w;
      detail::central_stencil(m[i], offs[i], w, 1.0);
      for (double c : w) ws[i].push_back(static_cast<LD>(c) / std::pow(h, static_cast<LD>(m[i])));
    }
    std::vector<std::size_t> idx(n, 0);
    std::vector<LD> y(n);
    LD sum = 0;
    while (true) {
      LD w = 1;
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<LD>(point[i]) + offs[i][idx[i]] * h;
        w *= ws[i][idx[i]];
      }
      sum += w * f(std::span<const LD>(y));
      std::size_t k = 0;
      while (k < n && ++idx[k] == offs[k].size()) idx[k++] = 0;
      if (k == n) break;
    }
    return sum;
  };
  constexpr int levels = 3;
  auto richardson = [&](LD h) {
    std::vector<LD> T;
    for (int i = 0; i <= levels; ++i) T.push_back(tensor(h / static_cast<LD>(1 << i)));
    for (int k = 1; k <= levels; ++k) {
      const LD q = std::pow(static_cast<LD>(4), static_cast<LD>(k));
      for (int i = levels; i >= k; --i) T[i] = (q * T[i] - T[i - 1]) / (q - 1);
    }
    return T[levels];
  };
  std::vector<LD> est;
  for (LD h : {0.2L, 0.1L, 0.05L, 0.025L}) est.push_back(richardson(h));
  LD best = est.back(), gap = std::numeric_limits<LD>::infinity();
  for (std::size_t i = 0; i + 1 < est.size(); ++i) {
    const LD d = est[i] > est[i + 1] ? est[i] - est[i + 1] : est[i + 1] - est[i];
    if (d < gap) {
      gap = d;
      best = est[i + 1];
    }
  }
  return static_cast<double>(best);
}

/// Richardson-extrapolated first derivative of a vector-valued map along one axis.
template <class F>
auto fd_directional(F&& f, std::vector<double> x, int axis, double h) {
  auto diff = [&](double s) {
    auto xp = x, xm = x;
    xp[axis] += s;
    xm[axis] -= s;
    return (f(xp) - f(xm)) / (2 * s);
  };
  return (4 * diff(h / 2) - diff(h)) / 3;
}

}  // namespace kahred::testing
