#pragma once

namespace qglat {

// Pinned numerical thresholds. CLI configs may override the ones exposed in
// ExperimentConfig; library defaults live here.
struct Tolerances {
  double tau_ode = 1e-8;    // Wronskian / symmetry residual bound
  double eps_den = 1e-8;    // "denominator too small" guard
  double delta_T = 0.05;    // exclusion radius around T^(0)
  double kappa_max = 1e12;  // condition-number ceiling for direct solves
  double tau_root = 1e-10;  // root refinement (relative)
  double tau_fit = 1e-10;   // squared-residual target for inverse fits
  double tau_sym = 1e-9;    // D-N matrix symmetry check
  double m_cap = 1e3;       // near-pole rejection for Weyl samples
  double q_bound = 10.0;    // a priori potential magnitude bound
};

inline constexpr double kEpsDen = 1e-8;
inline constexpr double kDeltaT = 0.05;
inline constexpr double kKappaMax = 1e12;
inline constexpr double kTauRoot = 1e-10;
inline constexpr double kTauFit = 1e-10;
inline constexpr double kMCap = 1e3;
inline constexpr double kQBound = 10.0;

}  // namespace qglat
