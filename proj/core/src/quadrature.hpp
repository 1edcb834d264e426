#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <vector>

namespace corrlab::detail {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Composite 16-point Gauss-Legendre rule on [a, b] with `panels` equal panels.
inline Rule composite_gauss(double a, double b, int panels) {
  using G = boost::math::quadrature::gauss<double, 16>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  Rule r;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (std::size_t i = 0; i < x.size(); ++i) {
      r.nodes.push_back(mid - 0.5 * h * x[x.size() - 1 - i]);
      r.weights.push_back(0.5 * h * w[x.size() - 1 - i]);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0.0) continue;
      r.nodes.push_back(mid + 0.5 * h * x[i]);
      r.weights.push_back(0.5 * h * w[i]);
    }
  }
  return r;
}

}  // namespace corrlab::detail
