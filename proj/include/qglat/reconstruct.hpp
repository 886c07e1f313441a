#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qglat/dn_maps.hpp"
#include "qglat/isp1d.hpp"
#include "qglat/lattice.hpp"
#include "qglat/potential.hpp"
#include "qglat/tolerances.hpp"

namespace qglat {

struct ReconOptions {
  int basis_dim = 0;   // cosine modes of the recovery basis
  int grid_size = 400; // admissible lambda samples for the working grid
  double q_bound = kQBound;
  double lambda_lo = 0.3;
  // Default upper end: ((basis_dim + 4) pi)^2 + q_bound.
  std::optional<double> lambda_hi;
  int workers = 0;
  int min_retained = 50;  // per-k floor before a resample request
  double tau_root = kTauRoot;       // refinement tolerance, callable mode
  double tau_root_file = 1e-4;      // widened tolerance on interpolated data
  FitOptions fit;
  // Frontier dump target on failure; empty disables the dump.
  std::string state_dump_path;
};

// Values over the shared working grid; mask marks retained samples.
struct MaskedFamily {
  std::vector<double> lambdas;
  std::vector<double> values;
  std::vector<std::uint8_t> mask;

  int retained() const;
};

// Pointwise -(u_num/u_den) * psi_known over the base mask; samples with
// |u_den| < eps_den are dropped from the mask. Throws UninformativeLambda
// when nothing survives.
MaskedFamily recovered_psi_ratio(const std::vector<double>& lambdas,
                                 const std::vector<double>& u_num,
                                 const std::vector<double>& u_den,
                                 const std::vector<double>& psi_known,
                                 const std::vector<std::uint8_t>& base_mask);

// 4 q_v - w1 - w2 - w3 pointwise; all four families must share one retained
// mask (MaskMismatch otherwise).
MaskedFamily isolate_weyl(const MaskedFamily& qv, const MaskedFamily& w1,
                          const MaskedFamily& w2, const MaskedFamily& w3);

struct EdgeRecovery {
  EdgeId edge;           // physical (unrotated) edge
  SymmetricPotential q;
  std::string route;     // "spectrum", "weyl", "spectrum+weyl"
  std::string sweep;     // "upper" | "rotated"
  int k = 0;
  double fit_residual2 = 0.0;
  bool converged = true;
  // Coefficient-L2 distance between the two chain recoveries, when the edge
  // was recovered twice within its diagonal.
  std::optional<double> overlap_discrepancy;
  // Max |measured family - forward value of the recovered potential| over
  // the retained samples.
  double family_mismatch = 0.0;
};

struct StepDiagnostics {
  int k = 0;
  std::string sweep;
  int retained = 0;
  int dropped = 0;
  // Max first-ring magnitude on the Bottom/Left sides; Lemma SS2 says the
  // special solutions vanish there.
  double below_line_leak = 0.0;
  std::vector<std::string> notes;
};

struct ReconReport {
  int N = 0;
  int basis_dim = 0;
  std::string oracle_mode;  // "callable" | "file"
  std::vector<EdgeRecovery> edges;
  std::vector<StepDiagnostics> steps;
};

struct ReconResult {
  // By physical edge index; entries only for recovered interior edges.
  std::vector<std::optional<SymmetricPotential>> potentials;
  ReconReport report;

  const SymmetricPotential* potential_for(const Region& region, EdgeId e) const;
};

// The full diagonal-sweep procedure: convert the served edge D-N map to the
// vertex map, sweep k = 2N..N+1 over the upper triangle, then repeat on the
// pi-rotated system for the lower triangle. Any sub-step failure dumps the
// frontier state (when a dump path is set) and rethrows.
ReconResult reconstruct_all(const Region& region, const DNOracle& oracle,
                            const ReconOptions& opts);

std::string report_to_json(const ReconReport& report);

}  // namespace qglat
