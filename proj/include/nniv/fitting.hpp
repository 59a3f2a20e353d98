#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace nniv {

// Least-squares fit of alpha_c(N) = a ln(N - b) + c.
struct LogFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double sse = 0.0;
  int n_points = 0;
  double n_min = 0.0;
  double n_max = 0.0;
};

namespace detail {

struct LinearFit {
  double a, c, sse;
};

inline LinearFit fit_linear_in_log(const std::vector<std::pair<double, double>>& pts,
                                   double b) {
  const double m = static_cast<double>(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [n, y] : pts) {
    const double x = std::log(n - b);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = m * sxx - sx * sx;
  const double a = (m * sxy - sx * sy) / denom;
  const double c = (sy - a * sx) / m;
  double sse = 0;
  for (const auto& [n, y] : pts) {
    const double r = y - a * std::log(n - b) - c;
    sse += r * r;
  }
  return {a, c, sse};
}

}  // namespace detail

// The shift b is found by golden-section search on (0, min(N) - 0.5]; for each
// candidate b the slope and offset have the usual closed form in x = ln(N - b).
// The sse profile in b is shallow, which is why the search tolerance is tight.
inline LogFit fit_log(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 4)
    throw validation_error("logarithmic fit needs at least 4 points, got " +
                           std::to_string(points.size()));
  double n_min = points[0].first, n_max = points[0].first;
  for (const auto& [n, y] : points) {
    if (!std::isfinite(n) || !std::isfinite(y) || n < 2.0)
      throw validation_error("fit points need finite values and N >= 2");
    n_min = std::min(n_min, n);
    n_max = std::max(n_max, n);
  }
  std::vector<double> ns;
  ns.reserve(points.size());
  for (const auto& [n, y] : points) ns.push_back(n);
  std::sort(ns.begin(), ns.end());
  if (std::adjacent_find(ns.begin(), ns.end()) != ns.end())
    throw validation_error("fit points must have distinct N values");

  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 1e-9, hi = n_min - 0.5;
  double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
  double f1 = detail::fit_linear_in_log(points, x1).sse;
  double f2 = detail::fit_linear_in_log(points, x2).sse;
  while (hi - lo > 1e-6) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = detail::fit_linear_in_log(points, x1).sse;
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = detail::fit_linear_in_log(points, x2).sse;
    }
  }
  const double b = 0.5 * (lo + hi);
  const auto lin = detail::fit_linear_in_log(points, b);
  return {lin.a, b, lin.c, lin.sse, static_cast<int>(points.size()), n_min, n_max};
}

// Slope of the fitted law when only points with N <= N_max enter the fit, for
// a list of cutoffs.
inline std::vector<std::pair<int, double>> a_vs_nmax(
    const std::vector<std::pair<double, double>>& points, const std::vector<int>& cutoffs) {
  std::vector<std::pair<int, double>> out;
  out.reserve(cutoffs.size());
  for (const int n_max : cutoffs) {
    std::vector<std::pair<double, double>> subset;
    for (const auto& p : points)
      if (p.first <= n_max + 1e-9) subset.push_back(p);
    if (subset.size() < 4)
      throw validation_error("N_max = " + std::to_string(n_max) +
                             " leaves fewer than 4 fit points");
    out.emplace_back(n_max, fit_log(subset).a);
  }
  return out;
}

}
