#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace qglat::testing {

EndpointData rk4_endpoint(const ScalarFn& q, double lambda, int steps) {
  const double h = 1.0 / steps;
  double S = 0.0, dS = 1.0, C = 1.0, dC = 0.0;
  auto w = [&](double z) { return q(z) - lambda; };
  for (int i = 0; i < steps; ++i) {
    const double z = i * h;
    const double w0 = w(z), wh = w(z + 0.5 * h), w1 = w(z + h);

    auto advance = [&](double& u, double& v) {
      const double k1u = v, k1v = w0 * u;
      const double k2u = v + 0.5 * h * k1v, k2v = wh * (u + 0.5 * h * k1u);
      const double k3u = v + 0.5 * h * k2v, k3v = wh * (u + 0.5 * h * k2u);
      const double k4u = v + h * k3v, k4v = w1 * (u + h * k3u);
      u += h / 6.0 * (k1u + 2.0 * (k2u + k3u) + k4u);
      v += h / 6.0 * (k1v + 2.0 * (k2v + k3v) + k4v);
    };
    advance(S, dS);
    advance(C, dC);
  }
  return {S, dS, C, dC};
}

double numerov_char(const ScalarFn& q, double lambda, int n) {
  const double h = 1.0 / n;
  const double h2 = h * h / 12.0;
  auto g = [&](int i) { return q(i * h) - lambda; };
  double prev = 0.0, cur = 1.0;  // u_0 = 0, u_1 arbitrary scale
  double g_prev = g(0), g_cur = g(1);
  for (int i = 1; i < n; ++i) {
    const double g_next = g(i + 1);
    const double next = ((2.0 + 10.0 * h2 * g_cur) * cur -
                         (1.0 - h2 * g_prev) * prev) /
                        (1.0 - h2 * g_next);
    prev = cur;
    cur = next;
    g_prev = g_cur;
    g_cur = g_next;
  }
  return cur;
}

std::vector<double> numerov_dirichlet_eigs(const ScalarFn& q, int count,
                                           double lo, double hi, int n) {
  std::vector<double> roots;
  const double step = 2.4674011002723395;  // pi^2 / 4
  double prev_l = lo, prev_f = numerov_char(q, lo, n);
  for (double lam = lo + step;
       prev_l < hi && static_cast<int>(roots.size()) < count; lam += step) {
    const double x = std::min(lam, hi);
    const double fx = numerov_char(q, x, n);
    if ((prev_f < 0.0) != (fx < 0.0)) {
      double a = prev_l, b = x, fa = prev_f;
      for (int it = 0; it < 80 && b - a > 1e-13 * std::max(1.0, b); ++it) {
        const double midpoint = 0.5 * (a + b);
        const double fm = numerov_char(q, midpoint, n);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = midpoint;
          fa = fm;
        } else {
          b = midpoint;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_l = x;
    prev_f = fx;
    if (x >= hi) break;
  }
  if (static_cast<int>(roots.size()) < count)
    throw std::runtime_error("numerov_dirichlet_eigs: scan window too small");
  return roots;
}

double star_center_value(const std::array<EndpointData, 4>& edges,
                         const std::array<double, 4>& f) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 4; ++i) {
    num += f[i] / edges[i].S1;
    den += edges[i].C1 / edges[i].S1;
  }
  return num / den;
}

}  // namespace qglat::testing
