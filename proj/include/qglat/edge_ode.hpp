#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "qglat/potential.hpp"

namespace qglat {

// Endpoint data of the initial-value solutions of -u'' + q u = lambda u:
// S(0)=0, S'(0)=1 and C(0)=1, C'(0)=0. The Wronskian S1*dC1 - C1*dS1 = -1
// holds up to integration error, and C1 = dS1 because q is symmetric.
struct EdgeCharData {
  double lambda = 0.0;
  double S1 = 0.0;
  double dS1 = 0.0;
  double C1 = 0.0;
  double dC1 = 0.0;

  double wronskian_residual() const { return S1 * dC1 - C1 * dS1 + 1.0; }
};

// Repeated endpoint evaluations for one potential. Caches the sampled
// potential on each step grid it encounters, so sweeps over many lambda
// reuse the cosine evaluations. Thread-safe.
class Shooter {
 public:
  explicit Shooter(SymmetricPotential q);

  EdgeCharData at(double lambda) const;
  double char_psi(double lambda) const { return at(lambda).S1; }
  const SymmetricPotential& potential() const { return q_; }

 private:
  SymmetricPotential q_;
  double sup_norm_;
  bool closed_form_;  // constant potentials evaluate by energy shift
  mutable std::mutex mutex_;
  mutable std::map<int, std::shared_ptr<const std::vector<double>>> grids_;

  std::shared_ptr<const std::vector<double>> grid_for(int steps) const;
};

// One-off endpoint evaluation (builds its own sample grid).
EdgeCharData shoot(const SymmetricPotential& q, double lambda);

// psi_{wv}(1, lambda) = S(1, lambda); orientation-free by symmetry.
double char_psi(const SymmetricPotential& q, double lambda);

// Weyl function S'(1,lambda)/S(1,lambda). Throws NearEigenvalue when the
// denominator falls below eps_den.
double weyl(const SymmetricPotential& q, double lambda);

struct EigenvalueScanOptions {
  // Explicit scan window; default is derived from the potential norms as
  // [min(-sup,0)-1, ((count+2) pi)^2 + mean + l2].
  std::optional<std::pair<double, double>> window;
  double scan_step = 2.4674011002723395;  // pi^2 / 4
  double tau_root = 1e-10;                // relative bracket tolerance
};

// First `count` Dirichlet eigenvalues (zeros of S(1, .)), ascending. Throws
// WindowExhausted on a root-count shortfall.
std::vector<double> dirichlet_eigenvalues(const SymmetricPotential& q, int count,
                                          const EigenvalueScanOptions& opts = {});
std::vector<double> dirichlet_eigenvalues(const Shooter& shooter, int count,
                                          const EigenvalueScanOptions& opts = {});

// Re-locates each eigenvalue near a previous estimate by expanding a local
// bracket; used by fitters that track a slowly moving spectrum.
std::vector<double> dirichlet_eigenvalues_near(const Shooter& shooter,
                                               const std::vector<double>& guesses,
                                               double tau_root = 1e-10);

}  // namespace qglat
