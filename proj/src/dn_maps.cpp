#include "qglat/dn_maps.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <functional>

#include "qglat/errors.hpp"
#include "qglat/numerics.hpp"
#include "qglat/tolerances.hpp"

namespace qglat {

namespace {

// Interior solutions for all unit boundary vectors, as one n x M block.
Eigen::MatrixXd unit_interior_solutions(const Region& region,
                                        const VertexCoeffs& coeffs) {
  const int n = region.interior_count();
  const int M = region.boundary_count();
  DirichletSolver solver(region, coeffs);
  Eigen::MatrixXd X(n, M);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(M);
  for (int j = 0; j < M; ++j) {
    f[j] = 1.0;
    X.col(j) = solver.solve(f).values.head(n);
    f[j] = 0.0;
  }
  return X;
}

DNMatrix lambda_V_from_coeffs(const Region& region, const VertexCoeffs& coeffs) {
  const int M = region.boundary_count();
  const Eigen::MatrixXd X = unit_interior_solutions(region, coeffs);
  DNMatrix out{coeffs.lambda, Eigen::MatrixXd(M, M)};
  for (int i = 0; i < M; ++i) {
    const VertexId w = region.interior_neighbor(region.boundary_vertex(i));
    out.entries.row(i) = -X.row(region.interior_index(w));
  }
  return out;
}

}  // namespace

DNMatrix assemble_lambda_V(const Region& region, const PotentialTable& table,
                           double lambda) {
  return lambda_V_from_coeffs(region, assemble_coeffs(region, table, lambda));
}

DNMatrix assemble_lambda_V(const Region& region, const EdgeSolvers& solvers,
                           double lambda) {
  return lambda_V_from_coeffs(region, assemble_coeffs(region, solvers, lambda));
}

DNMatrix lambda_V_from_E(const DNMatrix& lambda_e) {
  const double c = cos_sqrt(lambda_e.lambda);
  const double s = sinc_sqrt(lambda_e.lambda);
  DNMatrix out{lambda_e.lambda, s * lambda_e.entries};
  out.entries.diagonal().array() -= c;
  return out;
}

DNMatrix lambda_E_from_V(const DNMatrix& lambda_v) {
  const double c = cos_sqrt(lambda_v.lambda);
  const double s = sinc_sqrt(lambda_v.lambda);
  if (std::abs(s) < kEpsDen)
    throw NumericalError(ErrorCode::InadmissibleLambda,
                         "lambda_E_from_V: sin(sqrt(lambda)) below eps_den");
  DNMatrix out{lambda_v.lambda, lambda_v.entries};
  out.entries.diagonal().array() += c;
  out.entries /= s;
  return out;
}

namespace {

struct ContinuousSystem {
  std::vector<EdgeCharData> data;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
};

// Unknowns (a_e, b_e) at columns 2i, 2i+1. Value and derivative of u_e at a
// vertex: at e(0): (0, 1) and (-1, 0); at e(1): (S1, C1) and (dS1, dC1).
// Rows: one Dirichlet row per boundary vertex in flat order, then per
// interior vertex three continuity rows against its right edge and one
// Kirchhoff row.
ContinuousSystem build_continuous(const Region& region, double lambda,
                                  const std::function<EdgeCharData(int)>&
                                      edge_data) {
  const int E = region.edge_count();
  const int M = region.boundary_count();
  const int N = region.n();

  ContinuousSystem sys;
  sys.data.resize(E);
  const double free_s = sinc_sqrt(lambda), free_c = cos_sqrt(lambda);
  for (int i = 0; i < E; ++i) {
    sys.data[i] = region.is_boundary_edge(region.edge_at(i))
                      ? EdgeCharData{lambda, free_s, free_c, free_c,
                                     -lambda * free_s}
                      : edge_data(i);
  }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * E, 2 * E);
  int row = 0;
  auto value_coeffs = [&](EdgeId e, VertexId v, double& ca, double& cb) {
    const int i = region.edge_index(e);
    if (e.origin == v) {
      ca = 0.0;
      cb = 1.0;
    } else {
      ca = sys.data[i].S1;
      cb = sys.data[i].C1;
    }
  };

  for (int b = 0; b < M; ++b) {
    const VertexId v = region.boundary_vertex(b);
    const EdgeId e = region.boundary_edge(v);
    double ca, cb;
    value_coeffs(e, v, ca, cb);
    const int i = region.edge_index(e);
    A(row, 2 * i) = ca;
    A(row, 2 * i + 1) = cb;
    ++row;
  }

  for (int n2 = 0; n2 <= N; ++n2) {
    for (int n1 = 0; n1 <= N; ++n1) {
      const VertexId v{n1, n2};
      const auto edges = region.incident_edges(v);
      double ca0, cb0;
      value_coeffs(edges[0], v, ca0, cb0);
      const int i0 = region.edge_index(edges[0]);
      for (int s = 1; s < 4; ++s) {
        double ca, cb;
        value_coeffs(edges[s], v, ca, cb);
        const int i = region.edge_index(edges[s]);
        A(row, 2 * i) = ca;
        A(row, 2 * i + 1) = cb;
        A(row, 2 * i0) -= ca0;
        A(row, 2 * i0 + 1) -= cb0;
        ++row;
      }
      for (const EdgeId e : edges) {
        const int i = region.edge_index(e);
        if (e.origin == v) {
          A(row, 2 * i) += -1.0;
        } else {
          A(row, 2 * i) += sys.data[i].dS1;
          A(row, 2 * i + 1) += sys.data[i].dC1;
        }
      }
      ++row;
    }
  }

  sys.lu.compute(A);
  if (!(sys.lu.rcond() > 1.0 / kKappaMax))
    throw NumericalError(ErrorCode::IllConditioned,
                         "continuous oracle: lambda collides with the "
                         "spectrum of the edge operator");
  return sys;
}

struct ContinuousEval {
  DNMatrix matrix;
  double rcond = 0.0;
  int det_sign = 0;
};

ContinuousEval continuous_eval(const Region& region, double lambda,
                               const std::function<EdgeCharData(int)>&
                                   edge_data) {
  const int E = region.edge_count();
  const int M = region.boundary_count();
  const ContinuousSystem sys = build_continuous(region, lambda, edge_data);

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(2 * E, M);
  for (int b = 0; b < M; ++b) rhs(b, b) = 1.0;
  const Eigen::MatrixXd sol = sys.lu.solve(rhs);

  ContinuousEval out;
  out.matrix = DNMatrix{lambda, Eigen::MatrixXd(M, M)};
  for (int b = 0; b < M; ++b) {
    const VertexId v = region.boundary_vertex(b);
    const EdgeId e = region.boundary_edge(v);
    const int i = region.edge_index(e);
    for (int j = 0; j < M; ++j) {
      const double a = sol(2 * i, j), bb = sol(2 * i + 1, j);
      out.matrix.entries(b, j) =
          (e.origin == v) ? -a : a * sys.data[i].dS1 + bb * sys.data[i].dC1;
    }
  }
  out.rcond = sys.lu.rcond();
  int sign = static_cast<int>(sys.lu.permutationP().determinant());
  for (int i = 0; i < 2 * E; ++i) {
    const double d = sys.lu.matrixLU()(i, i);
    if (d < 0.0) sign = -sign;
    if (d == 0.0) sign = 0;
  }
  out.det_sign = sign;
  return out;
}

DNMatrix continuous_impl(const Region& region, double lambda,
                         const std::function<EdgeCharData(int)>& edge_data) {
  return continuous_eval(region, lambda, edge_data).matrix;
}

}  // namespace

EdgeExpansion continuous_oracle_solution(const Region& region,
                                         const PotentialTable& table,
                                         double lambda,
                                         const Eigen::VectorXd& f) {
  if (f.size() != region.boundary_count())
    throw std::invalid_argument("continuous_oracle_solution: bad f size");
  const ContinuousSystem sys = build_continuous(
      region, lambda, [&](int i) { return shoot(table.at(i), lambda); });
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * region.edge_count());
  rhs.head(region.boundary_count()) = f;
  const Eigen::VectorXd sol = sys.lu.solve(rhs);
  EdgeExpansion out;
  out.lambda = lambda;
  out.a.resize(region.edge_count());
  out.b.resize(region.edge_count());
  for (int i = 0; i < region.edge_count(); ++i) {
    out.a[i] = sol[2 * i];
    out.b[i] = sol[2 * i + 1];
  }
  return out;
}

DNMatrix continuous_oracle_lambda_E(const Region& region,
                                    const PotentialTable& table, double lambda) {
  return continuous_impl(region, lambda, [&](int i) {
    return shoot(table.at(i), lambda);
  });
}

DNMatrix continuous_oracle_lambda_E(const Region& region,
                                    const EdgeSolvers& solvers, double lambda) {
  return continuous_impl(region, lambda,
                         [&](int i) { return solvers.at(i).at(lambda); });
}

double ExceptionalSet::dist_T0(double lambda) {
  return dist_to_half_pi_squares(lambda);
}

ExceptionalSet exceptional_set(const Region& region, const PotentialTable& table,
                               double window_lo, double window_hi) {
  ExceptionalSet set;
  set.window_lo = window_lo;
  set.window_hi = window_hi;
  set.edge_dirichlet.resize(region.edge_count());
  const double step = 2.4674011002723395;  // pi^2 / 4
  for (int i = 0; i < region.edge_count(); ++i) {
    Shooter sh(table.at(i));
    auto f = [&](double lam) -> std::optional<double> { return sh.at(lam).S1; };
    double prev_l = window_lo, prev_f = sh.at(window_lo).S1;
    for (double lam = window_lo + step; prev_l < window_hi; lam += step) {
      const double x = std::min(lam, window_hi);
      const double fx = sh.at(x).S1;
      if ((prev_f < 0.0) != (fx < 0.0))
        set.edge_dirichlet[i].push_back(
            refine_root(f, prev_l, x, prev_f, fx, 1e-10 * std::max(1.0, x)));
      prev_l = x;
      prev_f = fx;
      if (x >= window_hi) break;
    }
  }
  return set;
}

namespace {

Admissibility admissible_impl(const Region& region, double lambda,
                              const std::function<VertexCoeffs()>& assemble) {
  if (ExceptionalSet::dist_T0(lambda) <= kDeltaT)
    return {false, "within delta_T of the exceptional set T0"};
  try {
    const VertexCoeffs coeffs = assemble();
    DirichletSolver solver(region, coeffs);
    (void)solver;
  } catch (const NumericalError& err) {
    return {false, err.what()};
  }
  return {true, ""};
}

}  // namespace

Admissibility admissible(const Region& region, const PotentialTable& table,
                         double lambda) {
  return admissible_impl(region, lambda,
                         [&] { return assemble_coeffs(region, table, lambda); });
}

Admissibility admissible(const Region& region, const EdgeSolvers& solvers,
                         double lambda) {
  return admissible_impl(region, lambda, [&] {
    return assemble_coeffs(region, solvers, lambda);
  });
}

ForwardOracle::ForwardOracle(Region region, PotentialTable table)
    : region_(std::move(region)),
      table_(std::move(table)),
      solvers_(region_, table_) {}

Admissibility ForwardOracle::check(double lambda) const {
  return admissible(region_, solvers_, lambda);
}

DNMatrix ForwardOracle::edge_dn(double lambda, OracleQuery kind) const {
  if (kind == OracleQuery::Grid) {
    const Admissibility adm = check(lambda);
    if (!adm.ok)
      throw NumericalError(ErrorCode::InadmissibleLambda,
                           "oracle at lambda = " + std::to_string(lambda) +
                               ": " + adm.reason);
  }
  // Refinement queries keep the hard guards (edge psi, conditioning of both
  // systems) via the exceptions thrown below, but may enter the delta_T
  // neighborhood of T0.
  return continuous_oracle_lambda_E(region_, solvers_, lambda);
}

std::vector<double> ForwardOracle::admissible_grid(double lo, double hi,
                                                   int count) const {
  std::vector<double> grid;
  if (count <= 0 || !(hi > lo)) return grid;
  const int candidates = count + std::max(count / 4, 8);
  const double step = (hi - lo) / candidates;
  for (int i = 0; i < candidates && static_cast<int>(grid.size()) < count; ++i) {
    const double lam = lo + (i + 0.5) * step;
    if (check(lam).ok) grid.push_back(lam);
  }
  return grid;
}

DNMatrix conjugate_boundary(const DNMatrix& in, const std::vector<int>& sigma) {
  DNMatrix out{in.lambda, Eigen::MatrixXd(in.entries.rows(), in.entries.cols())};
  for (int i = 0; i < in.entries.rows(); ++i)
    for (int j = 0; j < in.entries.cols(); ++j)
      out.entries(i, j) = in.entries(sigma[i], sigma[j]);
  return out;
}

namespace {

struct GridSlot {
  bool evaluated = false;
  bool dropped = false;
  std::string reason;
  DNMatrix matrix;
  double rcond = 0.0;
  int det_sign = 0;
};

}  // namespace

DNSampleFile sample_edge_dn_grid(const Region& region,
                                 const PotentialTable& table, double lo,
                                 double hi, const DNGridOptions& opts) {
  if (!(hi > lo)) throw std::invalid_argument("sample_edge_dn_grid: bad window");
  const int count =
      std::max(2, static_cast<int>(std::ceil((hi - lo) * opts.per_unit_density)));
  const EdgeSolvers solvers(region, table);

  std::vector<GridSlot> slots(count);
  std::vector<double> lams(count);
  for (int i = 0; i < count; ++i)
    lams[i] = lo + (i + 0.5) * (hi - lo) / count;

  parallel_for(count, opts.workers, [&](int i) {
    GridSlot& slot = slots[i];
    const Admissibility adm = admissible(region, solvers, lams[i]);
    if (!adm.ok) {
      slot.dropped = true;
      slot.reason = adm.reason;
      return;
    }
    try {
      const ContinuousEval eval = continuous_eval(region, lams[i], [&](int e) {
        return solvers.at(e).at(lams[i]);
      });
      slot.evaluated = true;
      slot.matrix = eval.matrix;
      slot.rcond = eval.rcond;
      slot.det_sign = eval.det_sign;
      if (eval.rcond < opts.rcond_floor) {
        slot.dropped = true;
        slot.reason = "conditioning dip near the continuous spectrum";
      }
    } catch (const NumericalError& err) {
      slot.dropped = true;
      slot.reason = err.what();
    }
  });

  // Pole moat: a determinant sign change between consecutive evaluated
  // samples brackets an eigenvalue of the continuous operator; interpolation
  // stencils must not straddle it.
  std::vector<double> pole_sites;
  int prev = -1;
  for (int i = 0; i < count; ++i) {
    if (!slots[i].evaluated || slots[i].det_sign == 0) continue;
    if (prev >= 0 && slots[prev].det_sign * slots[i].det_sign < 0)
      pole_sites.push_back(0.5 * (lams[prev] + lams[i]));
    prev = i;
  }
  for (int i = 0; i < count; ++i) {
    if (slots[i].evaluated && slots[i].dropped &&
        slots[i].rcond < opts.rcond_floor)
      pole_sites.push_back(lams[i]);
  }
  for (double p : pole_sites) {
    for (int i = 0; i < count; ++i) {
      if (slots[i].dropped || !slots[i].evaluated) continue;
      if (std::abs(lams[i] - p) <= opts.pole_moat) {
        slots[i].dropped = true;
        slots[i].reason = "within the pole moat of the continuous spectrum";
      }
    }
  }

  // Sliver runs squeezed between exclusion zones cannot carry a full
  // interpolation stencil; drop them as well.
  constexpr int kMinRun = 8;
  int run_start = -1;
  auto flush_run = [&](int end) {
    if (run_start >= 0 && end - run_start < kMinRun) {
      for (int j = run_start; j < end; ++j) {
        slots[j].dropped = true;
        slots[j].reason = "sliver run between exclusion zones";
      }
    }
    run_start = -1;
  };
  for (int i = 0; i < count; ++i) {
    const bool kept = slots[i].evaluated && !slots[i].dropped;
    if (kept && run_start < 0) run_start = i;
    if (!kept) flush_run(i);
  }
  flush_run(count);

  DNSampleFile file;
  file.N = region.n();
  file.payload = opts.payload;
  for (int i = 0; i < count; ++i) {
    if (slots[i].dropped) {
      file.dropped.emplace_back(lams[i], slots[i].reason);
    } else if (slots[i].evaluated) {
      file.lambdas.push_back(lams[i]);
      file.matrices.push_back(std::move(slots[i].matrix.entries));
    }
  }
  return file;
}

DNSampleFile sample_edge_dn_list(const Region& region,
                                 const PotentialTable& table,
                                 const std::vector<double>& lambdas,
                                 const std::string& payload, int workers) {
  std::vector<double> lams = lambdas;
  std::sort(lams.begin(), lams.end());
  const EdgeSolvers solvers(region, table);
  std::vector<GridSlot> slots(lams.size());
  parallel_for(static_cast<int>(lams.size()), workers, [&](int i) {
    const Admissibility adm = admissible(region, solvers, lams[i]);
    if (!adm.ok) {
      slots[i].dropped = true;
      slots[i].reason = adm.reason;
      return;
    }
    try {
      slots[i].matrix = continuous_oracle_lambda_E(region, solvers, lams[i]);
      slots[i].evaluated = true;
    } catch (const NumericalError& err) {
      slots[i].dropped = true;
      slots[i].reason = err.what();
    }
  });
  DNSampleFile file;
  file.N = region.n();
  file.payload = payload;
  for (std::size_t i = 0; i < lams.size(); ++i) {
    if (slots[i].dropped) {
      file.dropped.emplace_back(lams[i], slots[i].reason);
    } else if (slots[i].evaluated) {
      file.lambdas.push_back(lams[i]);
      file.matrices.push_back(std::move(slots[i].matrix.entries));
    }
  }
  return file;
}

RotatedOracle::RotatedOracle(const Region& region, const DNOracle& base)
    : base_(base), sigma_(rotation_boundary_permutation(region)) {}

DNMatrix RotatedOracle::edge_dn(double lambda, OracleQuery kind) const {
  return conjugate_boundary(base_.edge_dn(lambda, kind), sigma_);
}

}  // namespace qglat
