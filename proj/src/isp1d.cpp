#include "qglat/isp1d.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qglat/edge_ode.hpp"
#include "qglat/errors.hpp"
#include "qglat/numerics.hpp"
#include "qglat/tolerances.hpp"

namespace qglat {

namespace {

constexpr double kPi = 3.141592653589793;

SymmetricPotential potential_from(const Eigen::VectorXd& theta) {
  const int d = static_cast<int>(theta.size()) - 1;
  return d == 0 ? SymmetricPotential::constant(theta[0])
                : SymmetricPotential::from_cosine(theta[0], theta.tail(d));
}

// Shared damped Gauss-Newton driver. `residual` fills r(theta) and may use
// `hint` to warm-start root tracking at the current iterate.
RecoveryResult gauss_newton(
    Eigen::VectorXd theta, int n_residuals, const FitOptions& opts,
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>&
        residual) {
  const int p = static_cast<int>(theta.size());
  Eigen::VectorXd r(n_residuals), r_trial(n_residuals);
  residual(theta, r);
  double cost = r.squaredNorm();

  RecoveryResult result;
  int iter = 0;
  for (; iter < opts.max_iterations && cost > opts.tau_fit; ++iter) {
    Eigen::MatrixXd J(n_residuals, p);
    for (int i = 0; i < p; ++i) {
      Eigen::VectorXd theta_p = theta;
      const double step = opts.fd_step * std::max(1.0, std::abs(theta[i]));
      theta_p[i] += step;
      residual(theta_p, r_trial);
      J.col(i) = (r_trial - r) / step;
    }
    const Eigen::VectorXd delta = J.colPivHouseholderQr().solve(-r);
    if (!delta.allFinite()) break;

    double alpha = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 12; ++halving, alpha *= 0.5) {
      const Eigen::VectorXd trial = theta + alpha * delta;
      residual(trial, r_trial);
      const double trial_cost = r_trial.squaredNorm();
      if (trial_cost < cost) {
        theta = trial;
        r = r_trial;
        cost = trial_cost;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }

  result.q = potential_from(theta);
  result.residual2 = cost;
  result.converged = cost <= opts.tau_fit;
  result.iterations = iter;
  return result;
}

}  // namespace

RecoveryResult recover_from_spectrum(const SpectrumTarget& target, int basis_dim,
                                     const FitOptions& opts) {
  const int n = static_cast<int>(target.eigs.size());
  if (basis_dim < 0 || n < basis_dim + 1)
    throw std::invalid_argument(
        "recover_from_spectrum: need at least basis_dim + 1 eigenvalues");
  if (!std::is_sorted(target.eigs.begin(), target.eigs.end()))
    throw std::invalid_argument("recover_from_spectrum: eigs must ascend");

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(basis_dim + 1);
  theta[0] = target.eigs[0] - kPi * kPi;

  // Root tracking: reuse the previous iterate's eigenvalues as brackets.
  std::vector<double> guesses;
  auto residual = [&](const Eigen::VectorXd& th, Eigen::VectorXd& r) {
    const Shooter shooter(potential_from(th));
    std::vector<double> eigs;
    bool tracked = false;
    if (static_cast<int>(guesses.size()) == n) {
      try {
        eigs = dirichlet_eigenvalues_near(shooter, guesses, opts.tau_root);
        tracked = true;
      } catch (const NumericalError&) {
      }
    }
    if (!tracked) {
      EigenvalueScanOptions scan;
      scan.tau_root = opts.tau_root;
      eigs = dirichlet_eigenvalues(shooter, n, scan);
    }
    guesses = eigs;
    for (int i = 0; i < n; ++i) r[i] = eigs[i] - target.eigs[i];
  };

  return gauss_newton(theta, n, opts, residual);
}

RecoveryResult recover_from_weyl(const WeylTarget& target, int basis_dim,
                                 const FitOptions& opts) {
  if (target.lambdas.size() != target.values.size())
    throw std::invalid_argument("recover_from_weyl: ragged sample arrays");

  std::vector<double> lams, vals;
  for (std::size_t i = 0; i < target.lambdas.size(); ++i) {
    if (std::abs(target.values[i]) > opts.m_cap) continue;  // near-pole sample
    lams.push_back(target.lambdas[i]);
    vals.push_back(target.values[i]);
  }
  const int n = static_cast<int>(lams.size());
  if (basis_dim < 0 || n < 3 * (basis_dim + 1))
    throw std::invalid_argument(
        "recover_from_weyl: need >= 3x basis dimension samples after "
        "near-pole rejection");

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(basis_dim + 1);
  auto residual = [&](const Eigen::VectorXd& th, Eigen::VectorXd& r) {
    const Shooter shooter(potential_from(th));
    for (int i = 0; i < n; ++i) {
      const EdgeCharData d = shooter.at(lams[i]);
      // An iterate whose spectrum crosses a sample gets a large smooth
      // penalty so damping backs off.
      r[i] = (std::abs(d.S1) < kEpsDen) ? 1.0 / kEpsDen
                                        : d.dS1 / d.S1 - vals[i];
    }
  };

  return gauss_newton(theta, n, opts, residual);
}

PsiSampleEigenvalues eigenvalues_from_psi_samples(
    const std::vector<double>& lambdas, const std::vector<double>& psis,
    const PsiEvaluator& refine, double tau_root) {
  if (lambdas.size() != psis.size())
    throw std::invalid_argument(
        "eigenvalues_from_psi_samples: ragged sample arrays");
  if (!refine)
    throw std::invalid_argument(
        "eigenvalues_from_psi_samples: refinement evaluator required");

  PsiSampleEigenvalues out;
  for (std::size_t i = 0; i + 1 < lambdas.size(); ++i) {
    const double f0 = psis[i], f1 = psis[i + 1];
    if (f0 == 0.0) {
      out.eigenvalues.push_back(lambdas[i]);
      continue;
    }
    if ((f0 < 0.0) == (f1 < 0.0)) continue;
    const double tol = tau_root * std::max(1.0, std::abs(lambdas[i + 1]));
    out.eigenvalues.push_back(
        refine_root(refine, lambdas[i], lambdas[i + 1], f0, f1, tol));
  }
  if (!psis.empty() && psis.back() == 0.0)
    out.eigenvalues.push_back(lambdas.back());

  if (!lambdas.empty()) {
    const double top = lambdas.back();
    out.expected_count =
        top > 0.0 ? static_cast<int>(std::floor(std::sqrt(top) / kPi)) : 0;
    // Allow one eigenvalue of slack for the unknown potential shift.
    out.coverage_warning =
        static_cast<int>(out.eigenvalues.size()) < out.expected_count - 1;
  }
  return out;
}

}  // namespace qglat
