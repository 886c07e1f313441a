#include "qglat/edge_ode.hpp"

#include <algorithm>
#include <cmath>

#include "qglat/errors.hpp"
#include "qglat/numerics.hpp"
#include "qglat/tolerances.hpp"

namespace qglat {

namespace {

constexpr int kBaseSteps = 2048;
constexpr int kMaxSteps = 1 << 21;

// Fixed-step count for one integration: the base grid resolves desk-scale
// potentials; the count doubles as sqrt(lambda) grows so the phase error of
// the fourth-order scheme stays near 1e-10.
int step_count(double lambda, double sup_norm) {
  const double scale = std::sqrt(std::max({std::abs(lambda), sup_norm, 1.0}));
  int n = kBaseSteps;
  while (n < kMaxSteps && scale > 14.0 * (n / kBaseSteps)) n *= 2;
  if (scale > 14.0 * (n / kBaseSteps))
    throw NumericalError(ErrorCode::IntegrationFailure,
                         "step-size underflow at lambda = " +
                             std::to_string(lambda));
  return n;
}

// Classical RK4 on the first-order system for (S, S') and (C, C') jointly,
// with the potential pre-sampled at the 2n+1 half-step points.
EdgeCharData integrate(const std::vector<double>& q_half, double lambda) {
  const int n = (static_cast<int>(q_half.size()) - 1) / 2;
  const double h = 1.0 / n;
  double S = 0.0, dS = 1.0, C = 1.0, dC = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w0 = q_half[2 * i] - lambda;
    const double wh = q_half[2 * i + 1] - lambda;
    const double w1 = q_half[2 * i + 2] - lambda;

    const double k1u = dS, k1v = w0 * S;
    const double k2u = dS + 0.5 * h * k1v, k2v = wh * (S + 0.5 * h * k1u);
    const double k3u = dS + 0.5 * h * k2v, k3v = wh * (S + 0.5 * h * k2u);
    const double k4u = dS + h * k3v, k4v = w1 * (S + h * k3u);

    const double l1u = dC, l1v = w0 * C;
    const double l2u = dC + 0.5 * h * l1v, l2v = wh * (C + 0.5 * h * l1u);
    const double l3u = dC + 0.5 * h * l2v, l3v = wh * (C + 0.5 * h * l2u);
    const double l4u = dC + h * l3v, l4v = w1 * (C + h * l3u);

    S += h / 6.0 * (k1u + 2.0 * (k2u + k3u) + k4u);
    dS += h / 6.0 * (k1v + 2.0 * (k2v + k3v) + k4v);
    C += h / 6.0 * (l1u + 2.0 * (l2u + l3u) + l4u);
    dC += h / 6.0 * (l1v + 2.0 * (l2v + l3v) + l4v);
  }
  if (!std::isfinite(S) || !std::isfinite(dS) || !std::isfinite(C) ||
      !std::isfinite(dC))
    throw NumericalError(ErrorCode::IntegrationFailure,
                         "non-finite state at lambda = " + std::to_string(lambda));
  return {lambda, S, dS, C, dC};
}

std::vector<double> sample_half_grid(const SymmetricPotential& q, int steps) {
  std::vector<double> out(2 * steps + 1);
  const double dz = 0.5 / steps;
  for (int j = 0; j <= 2 * steps; ++j) out[j] = q(j * dz);
  return out;
}

// Constant potentials reduce to the free solutions at shifted energy.
EdgeCharData shifted_free(double lambda, double c0) {
  const double mu = lambda - c0;
  const double s = sinc_sqrt(mu);
  const double c = cos_sqrt(mu);
  return {lambda, s, c, c, -mu * s};
}

}  // namespace

Shooter::Shooter(SymmetricPotential q)
    : q_(std::move(q)), sup_norm_(q_.sup_norm()), closed_form_(q_.is_constant() && !q_.has_samples()) {}

std::shared_ptr<const std::vector<double>> Shooter::grid_for(int steps) const {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = grids_.find(steps);
    if (it != grids_.end()) return it->second;
  }
  auto grid =
      std::make_shared<const std::vector<double>>(sample_half_grid(q_, steps));
  std::lock_guard<std::mutex> lock(mutex_);
  return grids_.emplace(steps, std::move(grid)).first->second;
}

EdgeCharData Shooter::at(double lambda) const {
  if (closed_form_) return shifted_free(lambda, q_.constant_term());
  const int n = step_count(lambda, sup_norm_);
  return integrate(*grid_for(n), lambda);
}

EdgeCharData shoot(const SymmetricPotential& q, double lambda) {
  if (q.is_constant() && !q.has_samples())
    return shifted_free(lambda, q.constant_term());
  const int n = step_count(lambda, q.sup_norm());
  return integrate(sample_half_grid(q, n), lambda);
}

double char_psi(const SymmetricPotential& q, double lambda) {
  return shoot(q, lambda).S1;
}

double weyl(const SymmetricPotential& q, double lambda) {
  const EdgeCharData d = shoot(q, lambda);
  if (std::abs(d.S1) < kEpsDen)
    throw NumericalError(ErrorCode::NearEigenvalue,
                         "weyl: |S(1)| < eps_den at lambda = " +
                             std::to_string(lambda));
  return d.dS1 / d.S1;
}

namespace {

std::pair<double, double> default_window(const SymmetricPotential& q, int count) {
  constexpr double pi = 3.141592653589793;
  const double lo = std::min(-q.sup_norm(), 0.0) - 1.0;
  const double hi =
      (count + 2) * (count + 2) * pi * pi + q.mean() + q.l2_norm();
  return {lo, hi};
}

}  // namespace

std::vector<double> dirichlet_eigenvalues(const Shooter& shooter, int count,
                                          const EigenvalueScanOptions& opts) {
  if (count < 1) throw std::invalid_argument("dirichlet_eigenvalues: count < 1");
  const auto [lo, hi] =
      opts.window ? *opts.window : default_window(shooter.potential(), count);

  auto f = [&](double lam) -> std::optional<double> {
    return shooter.at(lam).S1;
  };

  std::vector<double> roots;
  double prev_l = lo, prev_f = shooter.at(lo).S1;
  for (double lam = lo + opts.scan_step;
       lam < hi + opts.scan_step && static_cast<int>(roots.size()) < count;
       lam += opts.scan_step) {
    const double x = std::min(lam, hi);
    const double fx = shooter.at(x).S1;
    if (prev_f == 0.0) {
      roots.push_back(prev_l);
    } else if ((prev_f < 0.0) != (fx < 0.0)) {
      const double tol = opts.tau_root * std::max(1.0, std::abs(x));
      roots.push_back(refine_root(f, prev_l, x, prev_f, fx, tol));
    }
    prev_l = x;
    prev_f = fx;
    if (x >= hi) break;
  }
  if (static_cast<int>(roots.size()) < count)
    throw NumericalError(
        ErrorCode::WindowExhausted,
        "dirichlet_eigenvalues: found " + std::to_string(roots.size()) +
            " of " + std::to_string(count) + " roots in the scan window");
  roots.resize(count);
  return roots;
}

std::vector<double> dirichlet_eigenvalues(const SymmetricPotential& q, int count,
                                          const EigenvalueScanOptions& opts) {
  return dirichlet_eigenvalues(Shooter(q), count, opts);
}

std::vector<double> dirichlet_eigenvalues_near(const Shooter& shooter,
                                               const std::vector<double>& guesses,
                                               double tau_root) {
  std::vector<double> roots;
  roots.reserve(guesses.size());
  auto f = [&](double lam) -> std::optional<double> {
    return shooter.at(lam).S1;
  };
  for (double g : guesses) {
    double delta = 0.25;
    bool found = false;
    for (int attempt = 0; attempt < 8 && !found; ++attempt, delta *= 2.0) {
      const double lo = g - delta, hi = g + delta;
      const double flo = shooter.at(lo).S1, fhi = shooter.at(hi).S1;
      if ((flo < 0.0) != (fhi < 0.0)) {
        const double tol = tau_root * std::max(1.0, std::abs(g));
        roots.push_back(refine_root(f, lo, hi, flo, fhi, tol));
        found = true;
      }
    }
    if (!found)
      throw NumericalError(ErrorCode::WindowExhausted,
                           "dirichlet_eigenvalues_near: lost the root near " +
                               std::to_string(g));
  }
  return roots;
}

}  // namespace qglat
