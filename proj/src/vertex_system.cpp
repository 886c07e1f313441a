#include "qglat/vertex_system.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qglat/dn_maps.hpp"
#include "qglat/errors.hpp"
#include "qglat/numerics.hpp"
#include "qglat/tolerances.hpp"

namespace qglat {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string edge_str(const Region& region, EdgeId e) {
  (void)region;
  return "edge[(" + std::to_string(e.origin.n1) + "," +
         std::to_string(e.origin.n2) +
         (e.dir == EdgeDir::Right ? ")->right]" : ")->up]");
}

}  // namespace

EdgeSolvers::EdgeSolvers(const Region& region, const PotentialTable& table) {
  shooters_.reserve(region.edge_count());
  for (int i = 0; i < region.edge_count(); ++i)
    shooters_.push_back(std::make_shared<Shooter>(table.at(i)));
}

VertexCoeffs empty_coeffs(const Region& region, double lambda) {
  VertexCoeffs c;
  c.lambda = lambda;
  c.psi = Eigen::VectorXd::Constant(region.edge_count(), kNaN);
  c.weyl_term = Eigen::VectorXd::Constant(region.edge_count(), kNaN);
  c.qv = Eigen::VectorXd::Constant(region.interior_count(), kNaN);
  return c;
}

void set_edge_coeffs(const Region& region, VertexCoeffs& coeffs, EdgeId e,
                     double psi, double weyl_value) {
  const int idx = region.edge_index(e);
  coeffs.psi[idx] = psi;
  coeffs.weyl_term[idx] = weyl_value;
}

void finalize_vertex_terms(const Region& region, VertexCoeffs& coeffs) {
  const int N = region.n();
  for (int n2 = 0; n2 <= N; ++n2) {
    for (int n1 = 0; n1 <= N; ++n1) {
      const VertexId v{n1, n2};
      double acc = 0.0;
      bool complete = true;
      for (const EdgeId e : region.incident_edges(v)) {
        const int idx = region.edge_index(e);
        if (std::isnan(coeffs.weyl_term[idx])) {
          complete = false;
          break;
        }
        acc += coeffs.weyl_term[idx];
      }
      coeffs.qv[region.interior_index(v)] = complete ? 0.25 * acc : kNaN;
    }
  }
}

namespace {

VertexCoeffs assemble_impl(const Region& region, double lambda,
                           const std::function<EdgeCharData(int)>& edge_data) {
  VertexCoeffs coeffs = empty_coeffs(region, lambda);
  const double psi_free = sinc_sqrt(lambda);
  const double dpsi_free = cos_sqrt(lambda);
  for (int i = 0; i < region.edge_count(); ++i) {
    double s1, ds1;
    if (region.is_boundary_edge(region.edge_at(i))) {
      s1 = psi_free;
      ds1 = dpsi_free;
    } else {
      const EdgeCharData d = edge_data(i);
      s1 = d.S1;
      ds1 = d.dS1;
    }
    if (std::abs(s1) < kEpsDen)
      throw NumericalError(ErrorCode::NearEigenvalue,
                           "assemble_coeffs: |psi| < eps_den on " +
                               edge_str(region, region.edge_at(i)) +
                               " at lambda = " + std::to_string(lambda));
    coeffs.psi[i] = s1;
    coeffs.weyl_term[i] = ds1 / s1;
  }
  finalize_vertex_terms(region, coeffs);
  return coeffs;
}

}  // namespace

VertexCoeffs assemble_coeffs(const Region& region, const PotentialTable& table,
                             double lambda) {
  return assemble_impl(region, lambda, [&](int i) {
    const SymmetricPotential& q = table.at(i);
    return q.is_zero() ? EdgeCharData{lambda, sinc_sqrt(lambda),
                                      cos_sqrt(lambda), cos_sqrt(lambda),
                                      -lambda * sinc_sqrt(lambda)}
                       : shoot(q, lambda);
  });
}

VertexCoeffs assemble_coeffs(const Region& region, const EdgeSolvers& solvers,
                             double lambda) {
  return assemble_impl(region, lambda,
                       [&](int i) { return solvers.at(i).at(lambda); });
}

DirichletSolver::DirichletSolver(const Region& region,
                                 const VertexCoeffs& coeffs)
    : region_(region) {
  const int n = region.interior_count();
  const int M = region.boundary_count();
  const int N = region.n();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  boundary_coupling_ = Eigen::MatrixXd::Zero(n, M);

  // Interior equation scaled by 4: sum_w u(w)/psi_w - 4 q_v u(v) = 0.
  for (int n2 = 0; n2 <= N; ++n2) {
    for (int n1 = 0; n1 <= N; ++n1) {
      const VertexId v{n1, n2};
      const int vi = region.interior_index(v);
      if (!coeffs.has_qv(vi))
        throw NumericalError(ErrorCode::IncompleteFrontier,
                             "solve_dirichlet: missing q_v entry");
      A(vi, vi) = -4.0 * coeffs.qv[vi];
      for (const EdgeId e : region.incident_edges(v)) {
        const int ei = region.edge_index(e);
        if (!coeffs.has_psi(ei))
          throw NumericalError(ErrorCode::IncompleteFrontier,
                               "solve_dirichlet: missing psi on " +
                                   edge_str(region, e));
        const VertexId w = (e.origin == v) ? e.terminus() : e.origin;
        const double inv_psi = 1.0 / coeffs.psi[ei];
        if (region.is_interior(w)) {
          A(vi, region.interior_index(w)) += inv_psi;
        } else {
          boundary_coupling_(vi, region.boundary_flat(w)) += inv_psi;
        }
      }
    }
  }

  lu_.compute(A);
  // Effective reciprocal condition: the boundary-to-interior amplification
  // ||A^-1|| * max(||A||, ||B||, 1) is what bounds the solution against the
  // data. Eigen's relative rcond alone cannot flag a 1x1 system (N = 0).
  const double a_norm = A.cwiseAbs().colwise().sum().maxCoeff();
  const double b_norm =
      boundary_coupling_.cwiseAbs().colwise().sum().maxCoeff();
  const double rc = lu_.rcond();
  const double inv_norm = (rc > 0.0 && a_norm > 0.0)
                              ? 1.0 / (rc * a_norm)
                              : std::numeric_limits<double>::infinity();
  rcond_ = 1.0 / (inv_norm * std::max({a_norm, b_norm, 1.0}));
  if (!(rcond_ > 1.0 / kKappaMax))
    throw NumericalError(
        ErrorCode::IllConditioned,
        "solve_dirichlet: interior system rcond = " + std::to_string(rcond_) +
            " at lambda = " + std::to_string(coeffs.lambda) +
            " (discrete eigenvalue collision; change lambda)");
}

VertexField DirichletSolver::solve(const Eigen::VectorXd& f) const {
  VertexField u;
  u.values = Eigen::VectorXd::Zero(region_.vertex_count());
  u.values.head(region_.interior_count()) = lu_.solve(-boundary_coupling_ * f);
  u.values.tail(region_.boundary_count()) = f;
  return u;
}

VertexField solve_dirichlet(const Region& region, const VertexCoeffs& coeffs,
                            const Eigen::VectorXd& f) {
  return DirichletSolver(region, coeffs).solve(f);
}

namespace {

// Adds u(w)/psi_e to acc when u(w) != 0, demanding the coefficient only
// then; absent below-diagonal entries are never touched.
void add_term(const Region& region, const VertexCoeffs& coeffs, EdgeId e,
              double u_w, double& acc) {
  if (u_w == 0.0) return;
  const int ei = region.edge_index(e);
  if (!coeffs.has_psi(ei))
    throw NumericalError(ErrorCode::IncompleteFrontier,
                         "propagate: nonzero value against absent psi on " +
                             edge_str(region, e));
  acc += u_w / coeffs.psi[ei];
}

}  // namespace

VertexField propagate(const Region& region, const VertexCoeffs& coeffs,
                      const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  const int N = region.n();
  if (f.size() != region.boundary_count())
    throw std::invalid_argument("propagate: f must have 4(N+1) entries");
  if (g.size() != N + 1)
    throw std::invalid_argument("propagate: g must have N+1 entries");

  VertexField u;
  u.values = Eigen::VectorXd::Zero(region.vertex_count());
  for (Side s : {Side::Top, Side::Bottom, Side::Left}) {
    for (int m = 0; m <= N; ++m) {
      const int flat = region.boundary_flat({s, m});
      u.values[region.interior_count() + flat] = f[flat];
    }
  }
  // Neumann convention: g(l_m) = -u(first interior column).
  for (int m = 0; m <= N; ++m) u.at(region, {0, m}) = -g[m];

  for (int j = 0; j <= N; ++j) {
    for (int m = 0; m <= N; ++m) {
      const VertexId v{j, m};
      double rhs = 0.0;
      if (const double uv = u.at(region, v); uv != 0.0) {
        const int vi = region.interior_index(v);
        if (!coeffs.has_qv(vi))
          throw NumericalError(ErrorCode::IncompleteFrontier,
                               "propagate: nonzero value against absent q_v");
        rhs += 4.0 * coeffs.qv[vi] * uv;
      }
      double acc = 0.0;
      add_term(region, coeffs, left_edge(v), u.at(region, left_of(v)), acc);
      add_term(region, coeffs, up_edge(v), u.at(region, above(v)), acc);
      add_term(region, coeffs, down_edge(v), u.at(region, below(v)), acc);
      rhs -= acc;
      double next = 0.0;
      if (rhs != 0.0) {
        const int ei = region.edge_index(right_edge(v));
        if (!coeffs.has_psi(ei))
          throw NumericalError(ErrorCode::IncompleteFrontier,
                               "propagate: absent psi on the solved edge " +
                                   edge_str(region, right_edge(v)));
        next = coeffs.psi[ei] * rhs;
      }
      u.at(region, right_of(v)) = next;
    }
  }
  return u;
}

Eigen::VectorXd complete_boundary(const Region& region, const DNMatrix& lambda_v,
                                  const Eigen::VectorXd& f1,
                                  const Eigen::VectorXd& g) {
  const int N = region.n();
  const int M = region.boundary_count();
  if (f1.size() != M)
    throw std::invalid_argument("complete_boundary: f1 must have M entries");
  if (g.size() != N + 1)
    throw std::invalid_argument("complete_boundary: g must have N+1 entries");

  const int l0 = region.boundary_flat({Side::Left, 0});
  const int r0 = region.boundary_flat({Side::Right, 0});

  Eigen::VectorXd f = f1;
  f.segment(r0, N + 1).setZero();  // Right entries of f1 are ignored

  const Eigen::MatrixXd sub =
      lambda_v.entries.block(l0, r0, N + 1, N + 1);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sub);
  const double sub_norm = sub.cwiseAbs().colwise().sum().maxCoeff();
  const double full_norm = lambda_v.entries.cwiseAbs().colwise().sum().maxCoeff();
  const double rc = lu.rcond();
  const double inv_norm = (rc > 0.0 && sub_norm > 0.0)
                              ? 1.0 / (rc * sub_norm)
                              : std::numeric_limits<double>::infinity();
  if (!(1.0 / (inv_norm * std::max({sub_norm, full_norm, 1.0})) >
        1.0 / kKappaMax))
    throw NumericalError(ErrorCode::IllConditioned,
                         "complete_boundary: Lambda_V(L;R) condition estimate "
                         "above kappa_max; retry a different lambda");

  const Eigen::VectorXd rhs =
      g - (lambda_v.entries * f).segment(l0, N + 1);
  f.segment(r0, N + 1) = lu.solve(rhs);
  return f;
}

namespace {

Eigen::VectorXd special_solution_data(const Region& region, int k) {
  // Validates k and identifies alpha_{k,0}.
  const auto diag = diagonal_vertices(region, k);
  Eigen::VectorXd f1 = Eigen::VectorXd::Zero(region.boundary_count());
  f1[region.boundary_flat(diag.front())] = 1.0;
  return f1;
}

}  // namespace

VertexField special_solution(const Region& region, const VertexCoeffs& coeffs,
                             const DNMatrix& lambda_v, int k) {
  const Eigen::VectorXd f1 = special_solution_data(region, k);
  const Eigen::VectorXd g = Eigen::VectorXd::Zero(region.n() + 1);
  const Eigen::VectorXd f = complete_boundary(region, lambda_v, f1, g);
  return propagate(region, coeffs, f, g);
}

VertexField special_solution_above_line(const Region& region,
                                        const VertexCoeffs& coeffs,
                                        const DNMatrix& lambda_v, int k) {
  const int N = region.n();
  const Eigen::VectorXd f1 = special_solution_data(region, k);
  const Eigen::VectorXd g = Eigen::VectorXd::Zero(N + 1);
  const Eigen::VectorXd f = complete_boundary(region, lambda_v, f1, g);

  VertexField u;
  u.values = Eigen::VectorXd::Zero(region.vertex_count());
  u.values.tail(region.boundary_count()) = f;

  // First interior ring via the vertex D-N map: u(w_v) = -(Lambda_V f)(v).
  // Entries below the line stay at their exact zero.
  const Eigen::VectorXd ring = lambda_v.entries * f;
  for (int b = 0; b < region.boundary_count(); ++b) {
    const VertexId w = region.interior_neighbor(region.boundary_vertex(b));
    if (w.coord_sum() >= k) u.at(region, w) = -ring[b];
  }

  // Fill u on each diagonal level s = 2N-1 .. k from the equation at the
  // vertex directly above; every coefficient it touches lies in bands
  // (s, s+1) and (s+1, s+2), i.e. strictly above A_k.
  for (int s = 2 * N - 1; s >= k; --s) {
    for (int j = std::max(0, s - N); j <= std::min(N, s); ++j) {
      const VertexId v{j, s - j};
      if (v.n1 == N || v.n2 == N) continue;  // ring value already set
      const VertexId a = above(v);
      const int ai = region.interior_index(a);
      if (!coeffs.has_qv(ai))
        throw NumericalError(ErrorCode::IncompleteFrontier,
                             "special_solution_above_line: missing q_v above "
                             "the diagonal");
      double rhs = 4.0 * coeffs.qv[ai] * u.at(region, a);
      for (const EdgeId e : {left_edge(a), right_edge(a), up_edge(a)}) {
        const int ei = region.edge_index(e);
        if (!coeffs.has_psi(ei))
          throw NumericalError(ErrorCode::IncompleteFrontier,
                               "special_solution_above_line: missing psi on " +
                                   edge_str(region, e));
        const VertexId w = (e.origin == a) ? e.terminus() : e.origin;
        rhs -= u.at(region, w) / coeffs.psi[ei];
      }
      const int down_i = region.edge_index(down_edge(a));
      if (!coeffs.has_psi(down_i))
        throw NumericalError(ErrorCode::IncompleteFrontier,
                             "special_solution_above_line: missing psi on "
                             "the solved edge");
      u.at(region, v) = coeffs.psi[down_i] * rhs;
    }
  }
  return u;
}

CornerRelation corner_relation(const Region& region, const VertexField& u,
                               const VertexCoeffs& coeffs, VertexId a) {
  const int up_i = region.edge_index(up_edge(a));
  const int right_i = region.edge_index(right_edge(a));
  if (!coeffs.has_psi(up_i) || !coeffs.has_psi(right_i))
    throw NumericalError(ErrorCode::IncompleteFrontier,
                         "corner_relation: psi absent on an incident edge");
  CornerRelation rel;
  rel.u_up = u.at(region, above(a));
  rel.u_right = u.at(region, right_of(a));
  rel.residual =
      rel.u_up / coeffs.psi[up_i] + rel.u_right / coeffs.psi[right_i];
  rel.informative =
      std::abs(rel.u_up) >= kEpsDen || std::abs(rel.u_right) >= kEpsDen;
  return rel;
}

double corner_unknown_psi(double u_unknown_side, double u_known_side,
                          double psi_known) {
  if (std::abs(u_known_side) < kEpsDen)
    throw NumericalError(ErrorCode::UninformativeLambda,
                         "corner_unknown_psi: denominator below eps_den");
  return -(u_unknown_side / u_known_side) * psi_known;
}

}  // namespace qglat
