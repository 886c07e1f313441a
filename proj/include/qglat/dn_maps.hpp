#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

#include "qglat/lattice.hpp"
#include "qglat/vertex_system.hpp"

namespace qglat {

// M x M Dirichlet-to-Neumann matrix at one lambda, rows and columns in
// BoundaryIndex order (Top, Bottom, Left, Right; m ascending). Symmetry is a
// numerically verified property of the self-adjoint problem, not an input
// assumption.
struct DNMatrix {
  double lambda = 0.0;
  Eigen::MatrixXd entries;
};

// Vertex D-N map: column j holds -u(w_v) over boundary vertices v, where u
// solves the interior vertex problem with the j-th unit boundary vector.
DNMatrix assemble_lambda_V(const Region& region, const PotentialTable& table,
                           double lambda);
DNMatrix assemble_lambda_V(const Region& region, const EdgeSolvers& solvers,
                           double lambda);

// Lambda_V = -cos(sqrt(lambda)) I + sinc(sqrt(lambda)) Lambda_E and its
// inverse rearrangement; mutually inverse wherever sin(sqrt(lambda)) != 0.
DNMatrix lambda_V_from_E(const DNMatrix& lambda_e);
DNMatrix lambda_E_from_V(const DNMatrix& lambda_v);

// Conjugation by a boundary permutation: out(i,j) = in(sigma[i], sigma[j]).
DNMatrix conjugate_boundary(const DNMatrix& in, const std::vector<int>& sigma);

// Independent continuous-route edge D-N map: per edge ansatz
// u_e = a_e S_e + b_e C_e, equations = Dirichlet values at the boundary plus
// continuity and Kirchhoff sums at interior vertices; boundary derivatives
// follow the edge-parametrization convention (-u'(0) at e(0), u'(1) at e(1)).
DNMatrix continuous_oracle_lambda_E(const Region& region,
                                    const PotentialTable& table, double lambda);
DNMatrix continuous_oracle_lambda_E(const Region& region,
                                    const EdgeSolvers& solvers, double lambda);

// Expansion coefficients (a_e, b_e) of the continuous solution for one
// boundary data vector; exposed for Kirchhoff/continuity self-checks.
struct EdgeExpansion {
  double lambda = 0.0;
  Eigen::VectorXd a, b;  // by edge index
};

EdgeExpansion continuous_oracle_solution(const Region& region,
                                         const PotentialTable& table,
                                         double lambda,
                                         const Eigen::VectorXd& f);

// The exceptional set T = T0 union the per-edge Dirichlet spectra inside a
// working window. T0 = {lambda : cos(sqrt(lambda)) in {0, +-1}} is carried
// by its generator rule (the squares (m pi / 2)^2).
struct ExceptionalSet {
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::vector<std::vector<double>> edge_dirichlet;  // by edge index, ascending

  static double dist_T0(double lambda);
};

ExceptionalSet exceptional_set(const Region& region, const PotentialTable& table,
                               double window_lo, double window_hi);

struct Admissibility {
  bool ok = false;
  std::string reason;  // empty when ok
};

// lambda is admissible when dist(lambda, T0) > delta_T, every edge has
// |psi(1, lambda)| > eps_den, and the interior vertex system passes the
// condition estimate.
Admissibility admissible(const Region& region, const PotentialTable& table,
                         double lambda);
Admissibility admissible(const Region& region, const EdgeSolvers& solvers,
                         double lambda);

// An evaluatable family lambda -> edge D-N matrix over admissible lambda.
//
// Grid queries pass the full admissibility gate. Refinement queries (root
// bisection between grid samples) skip only the delta_T proximity screen:
// Lambda_E itself is regular through T0, and the V-from-E conversion divides
// by nothing, so refinement may walk up to the hard numerical guards. This
// is what lets eigenvalues lying on T0 (zero potentials) be refined.
enum class OracleQuery { Grid, Refinement };

class DNOracle {
 public:
  virtual ~DNOracle() = default;

  virtual int region_n() const = 0;
  // Throws InadmissibleLambda / InsufficientGrid when lambda is not served.
  virtual DNMatrix edge_dn(double lambda,
                           OracleQuery kind = OracleQuery::Grid) const = 0;
  // File-backed oracles answer off-sample queries by interpolation only.
  virtual bool sampled() const = 0;
  // Admissible lambda values spanning [lo, hi], at most `count` of them.
  virtual std::vector<double> admissible_grid(double lo, double hi,
                                              int count) const = 0;
};

// Callable mode: the continuous forward model evaluated on demand.
class ForwardOracle final : public DNOracle {
 public:
  ForwardOracle(Region region, PotentialTable table);

  int region_n() const override { return region_.n(); }
  DNMatrix edge_dn(double lambda,
                   OracleQuery kind = OracleQuery::Grid) const override;
  bool sampled() const override { return false; }
  std::vector<double> admissible_grid(double lo, double hi,
                                      int count) const override;

  Admissibility check(double lambda) const;
  const Region& region() const { return region_; }
  const PotentialTable& table() const { return table_; }

 private:
  Region region_;
  PotentialTable table_;
  EdgeSolvers solvers_;
};

// View of another oracle under the pi rotation of the region: matrices are
// conjugated by the boundary permutation.
class RotatedOracle final : public DNOracle {
 public:
  RotatedOracle(const Region& region, const DNOracle& base);

  int region_n() const override { return base_.region_n(); }
  DNMatrix edge_dn(double lambda,
                   OracleQuery kind = OracleQuery::Grid) const override;
  bool sampled() const override { return base_.sampled(); }
  std::vector<double> admissible_grid(double lo, double hi,
                                      int count) const override {
    return base_.admissible_grid(lo, hi, count);
  }

 private:
  const DNOracle& base_;
  std::vector<int> sigma_;
};

// ---- D-N sample file ------------------------------------------------------
//
// Self-describing single file: first line is a JSON header (fields: format,
// N, M, payload kind, sample count, admissibility reason log), followed by
// the payload. CSV payload lines are "lambda,e00,e01,..." at 17 significant
// digits (bit-exact double round-trip); binary payload is little-endian
// doubles, lambda followed by the row-major matrix per sample.

struct DNSampleFile {
  int N = 0;
  std::string payload = "csv";  // "csv" | "binary"
  std::vector<double> lambdas;  // ascending
  std::vector<Eigen::MatrixXd> matrices;
  std::vector<std::pair<double, std::string>> dropped;  // lambda, reason
};

void write_dn_file(const std::string& path, const DNSampleFile& file);
DNSampleFile read_dn_file(const std::string& path);

// Forward-samples the edge D-N map on a uniform grid of the given per-unit
// density, recording dropped lambdas with reasons. Besides the admissibility
// guards, samples near the poles of Lambda_E (the spectrum of the continuous
// operator, located by determinant sign changes and conditioning dips of the
// continuous system) are dropped with a moat wide enough that local
// interpolation on the survivors stays near 1e-6.
struct DNGridOptions {
  double per_unit_density = 200.0;
  double pole_moat = 0.06;
  double rcond_floor = 1e-4;
  int workers = 0;
  std::string payload = "binary";
};

DNSampleFile sample_edge_dn_grid(const Region& region,
                                 const PotentialTable& table, double lo,
                                 double hi, const DNGridOptions& opts = {});

// Same sampling restricted to an explicit lambda list (no pole scan).
DNSampleFile sample_edge_dn_list(const Region& region,
                                 const PotentialTable& table,
                                 const std::vector<double>& lambdas,
                                 const std::string& payload = "binary",
                                 int workers = 0);

// File mode: local barycentric interpolation on the stored grid, restricted
// to contiguous runs of samples. On-grid queries return the stored matrix
// exactly; refinement requests are answered by interpolation only.
class SampledOracle final : public DNOracle {
 public:
  explicit SampledOracle(DNSampleFile file);

  int region_n() const override { return file_.N; }
  DNMatrix edge_dn(double lambda,
                   OracleQuery kind = OracleQuery::Grid) const override;
  bool sampled() const override { return true; }
  std::vector<double> admissible_grid(double lo, double hi,
                                      int count) const override;

  const DNSampleFile& file() const { return file_; }

 private:
  DNSampleFile file_;
  std::vector<std::pair<int, int>> runs_;  // [first, last] sample indices

  int run_containing(double lambda) const;  // -1 when uncovered
};

}  // namespace qglat
