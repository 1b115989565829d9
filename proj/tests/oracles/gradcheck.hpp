#pragma once

// Central finite differences for gradient checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

// d f / d v[i] for every i, perturbing v in place.
inline std::vector<double> numeric_gradient(std::span<double> v, const std::function<double()>& f,
                                            double h = 1e-6) {
  std::vector<double> g(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    const double saved = v[i];
    v[i] = saved + h;
    const double fp = f();
    v[i] = saved - h;
    const double fm = f();
    v[i] = saved;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

// max_i |a_i - n_i| / max_i |n_i|
inline double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0, scale = 0.0;
  for (size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max(scale, std::abs(numeric[i]));
  }
  return scale > 0 ? diff / scale : diff;
}

}  // namespace oracle
