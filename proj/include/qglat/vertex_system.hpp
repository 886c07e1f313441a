#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <memory>
#include <vector>

#include "qglat/edge_ode.hpp"
#include "qglat/lattice.hpp"
#include "qglat/potential.hpp"

namespace qglat {

// Per-edge potentials for a region, indexed by edge index. Edges never set
// stay at the zero potential (boundary edges in particular).
class PotentialTable {
 public:
  explicit PotentialTable(const Region& region)
      : pots_(region.edge_count()) {}

  void set(const Region& region, EdgeId e, SymmetricPotential q) {
    pots_[region.edge_index(e)] = std::move(q);
  }
  const SymmetricPotential& at(int edge_index) const { return pots_[edge_index]; }
  const SymmetricPotential& at(const Region& region, EdgeId e) const {
    return pots_[region.edge_index(e)];
  }
  int size() const { return static_cast<int>(pots_.size()); }

 private:
  std::vector<SymmetricPotential> pots_;
};

// Shared per-edge Shooters for repeated lambda sweeps over one table.
class EdgeSolvers {
 public:
  EdgeSolvers(const Region& region, const PotentialTable& table);
  const Shooter& at(int edge_index) const { return *shooters_[edge_index]; }

 private:
  std::vector<std::shared_ptr<Shooter>> shooters_;
};

// Coefficients of the reduced vertex Laplacian at one lambda: per-edge
// psi(1, lambda) and psi'(1)/psi(1), per-interior-vertex multiplier
// q_{v,lambda} = (1/4) sum of the four incident Weyl values. NaN marks an
// absent entry (partially recovered tables during reconstruction).
struct VertexCoeffs {
  double lambda = 0.0;
  Eigen::VectorXd psi;        // by edge index
  Eigen::VectorXd weyl_term;  // by edge index
  Eigen::VectorXd qv;         // by interior index

  bool has_psi(int e) const { return !std::isnan(psi[e]); }
  bool has_qv(int vi) const { return !std::isnan(qv[vi]); }
};

VertexCoeffs empty_coeffs(const Region& region, double lambda);

// Record psi and the Weyl value for one edge.
void set_edge_coeffs(const Region& region, VertexCoeffs& coeffs, EdgeId e,
                     double psi, double weyl_value);

// Fill q_{v,lambda} at every interior vertex whose four incident edges have
// Weyl entries.
void finalize_vertex_terms(const Region& region, VertexCoeffs& coeffs);

// Full assembly from potentials. Boundary edges take the closed-form free
// values. Throws NearEigenvalue naming the edge when |psi| < eps_den.
VertexCoeffs assemble_coeffs(const Region& region, const PotentialTable& table,
                             double lambda);
VertexCoeffs assemble_coeffs(const Region& region, const EdgeSolvers& solvers,
                             double lambda);

// One lambda slice of a solution, indexed by Region::vertex_index (interior
// first, then boundary in BoundaryIndex order).
struct VertexField {
  Eigen::VectorXd values;

  double at(const Region& region, VertexId v) const {
    return values[region.vertex_index(v)];
  }
  double& at(const Region& region, VertexId v) {
    return values[region.vertex_index(v)];
  }
};

// Factorized interior system (-Delta_V + Q_V) u = 0, u = f on the boundary,
// reusable across right-hand sides. Throws IllConditioned when the
// reciprocal condition estimate falls below 1/kappa_max.
class DirichletSolver {
 public:
  DirichletSolver(const Region& region, const VertexCoeffs& coeffs);
  VertexField solve(const Eigen::VectorXd& f) const;
  double rcond() const { return rcond_; }

 private:
  const Region& region_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::MatrixXd boundary_coupling_;  // interior x M, entries 1/psi
  double rcond_ = 0.0;
};

VertexField solve_dirichlet(const Region& region, const VertexCoeffs& coeffs,
                            const Eigen::VectorXd& f);

// Left-to-right march of Lemma-SS1(1): Dirichlet data on Top/Bottom/Left
// (entries of f on the Right side are ignored) plus Neumann data g on the
// Left, where g(l_m) = -u(interior neighbor). Columns are solved in order
// from the vertex equation; the Right boundary values come out of the last
// column. Coefficients may be absent on edges whose adjacent u values all
// vanish; a nonzero value meeting an absent coefficient raises
// IncompleteFrontier.
VertexField propagate(const Region& region, const VertexCoeffs& coeffs,
                      const Eigen::VectorXd& f, const Eigen::VectorXd& g);

struct DNMatrix;  // defined in dn_maps.hpp

// Lemma-SS1(2) completion: extend three-sided Dirichlet data f1 to the full
// boundary so that (Lambda_V f)|_L = g, through the Left-rows-by-Right-
// columns submatrix of Lambda_V.
Eigen::VectorXd complete_boundary(const Region& region, const DNMatrix& lambda_v,
                                  const Eigen::VectorXd& f1,
                                  const Eigen::VectorXd& g);

// Special solution of Lemma SS2 for level k: boundary data 1 at alpha_{k,0},
// 0 elsewhere off the Right side, zero Neumann data on the Left; computed by
// boundary completion followed by the left-to-right march. Vanishes below
// the diagonal line A_k.
VertexField special_solution(const Region& region, const VertexCoeffs& coeffs,
                             const DNMatrix& lambda_v, int k);

// Reconstruction-time variant: needs coefficients only on edges strictly
// above A_k (bands (k,k+1) and higher) plus boundary edges. Boundary and
// first-ring values come from Lambda_V; interior values on coordinate sums
// >= k are filled by a downward diagonal sweep of the vertex equation
// evaluated strictly above the line. Below the line the field is zero by
// Lemma SS2.
VertexField special_solution_above_line(const Region& region,
                                        const VertexCoeffs& coeffs,
                                        const DNMatrix& lambda_v, int k);

// The two-term relation at a vertex a on A_{k-1} where the field vanishes
// at a and below: u(a+i)/psi_up + u(a+1)/psi_right = 0.
struct CornerRelation {
  double u_up = 0.0;     // u(a+i)
  double u_right = 0.0;  // u(a+1)
  double residual = 0.0;
  bool informative = false;  // at least one term above eps_den
};

CornerRelation corner_relation(const Region& region, const VertexField& u,
                               const VertexCoeffs& coeffs, VertexId a);

// Solve-for-unknown mode: the remaining psi from the other three values,
// psi_unknown = -(u_unknown_side / u_known_side) * psi_known. Throws
// UninformativeLambda when the denominator is below eps_den.
double corner_unknown_psi(double u_unknown_side, double u_known_side,
                          double psi_known);

}  // namespace qglat
