#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "qglat/potential.hpp"

namespace qglat {

// First Dirichlet eigenvalues of the target operator, ascending.
struct SpectrumTarget {
  std::vector<double> eigs;
};

// Weyl-function samples (lambda, m(lambda)) away from the target's
// eigenvalues.
struct WeylTarget {
  std::vector<double> lambdas;
  std::vector<double> values;
};

struct FitOptions {
  double tau_fit = 1e-10;  // squared-residual target
  int max_iterations = 50;
  double fd_step = 1e-6;   // relative finite-difference step
  double m_cap = 1e3;      // near-pole rejection for Weyl samples
  double tau_root = 1e-10;
};

struct RecoveryResult {
  SymmetricPotential q;
  double residual2 = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Damped Gauss-Newton fit of the (1 + basis_dim)-dimensional symmetric
// cosine basis against the forward solver. Initial guess c0 = eigs_1 - pi^2,
// oscillatory part zero. Non-convergence is reported through the result, not
// thrown; the caller may resample.
RecoveryResult recover_from_spectrum(const SpectrumTarget& target, int basis_dim,
                                     const FitOptions& opts = {});

// Same optimizer against Weyl-function samples; samples with |m| > m_cap are
// rejected before fitting.
RecoveryResult recover_from_weyl(const WeylTarget& target, int basis_dim,
                                 const FitOptions& opts = {});

// Evaluator for refinement queries; nullopt means the point was declined
// (masked lambda) and the refiner probes nearby.
using PsiEvaluator = std::function<std::optional<double>(double)>;

struct PsiSampleEigenvalues {
  std::vector<double> eigenvalues;
  int expected_count = 0;     // Weyl-law count for the sampled window
  bool coverage_warning = false;
};

// Zeros of psi(1, .) from its samples on an ascending grid: sign changes are
// bracketed on the grid and refined through the evaluator. Tangential zeros
// are not detected; a shortfall against the Weyl-law count raises the
// coverage warning.
PsiSampleEigenvalues eigenvalues_from_psi_samples(
    const std::vector<double>& lambdas, const std::vector<double>& psis,
    const PsiEvaluator& refine, double tau_root = 1e-10);

}  // namespace qglat
