#include "qglat/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "qglat/edge_ode.hpp"
#include "qglat/errors.hpp"
#include "qglat/numerics.hpp"
#include "qglat/vertex_system.hpp"

namespace qglat {

namespace {

constexpr double kPi = 3.141592653589793;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string edge_label(EdgeId e) {
  return "(" + std::to_string(e.origin.n1) + "," + std::to_string(e.origin.n2) +
         (e.dir == EdgeDir::Right ? ")-R" : ")-U");
}

double coeff_of(const SymmetricPotential& q, int i) {
  if (i == 0) return q.constant_term();
  return i <= q.cos_coeffs().size() ? q.cos_coeffs()[i - 1] : 0.0;
}

// Coefficient-space L2 distance, matching the L2(0,1) norm of the difference.
double coeff_l2_distance(const SymmetricPotential& a, const SymmetricPotential& b) {
  const int d = static_cast<int>(
      std::max(a.cos_coeffs().size(), b.cos_coeffs().size()));
  double acc = 0.0;
  const double d0 = coeff_of(a, 0) - coeff_of(b, 0);
  acc += d0 * d0;
  for (int i = 1; i <= d; ++i) {
    const double di = coeff_of(a, i) - coeff_of(b, i);
    acc += 0.5 * di * di;
  }
  return std::sqrt(acc);
}

SymmetricPotential average_potentials(const SymmetricPotential& a,
                                      const SymmetricPotential& b) {
  const int d = static_cast<int>(
      std::max(a.cos_coeffs().size(), b.cos_coeffs().size()));
  const double c0 = 0.5 * (coeff_of(a, 0) + coeff_of(b, 0));
  if (d == 0) return SymmetricPotential::constant(c0);
  Eigen::VectorXd c(d);
  for (int i = 1; i <= d; ++i) c[i - 1] = 0.5 * (coeff_of(a, i) + coeff_of(b, i));
  return SymmetricPotential::from_cosine(c0, c);
}

}  // namespace

int MaskedFamily::retained() const {
  int n = 0;
  for (auto m : mask) n += (m != 0);
  return n;
}

MaskedFamily recovered_psi_ratio(const std::vector<double>& lambdas,
                                 const std::vector<double>& u_num,
                                 const std::vector<double>& u_den,
                                 const std::vector<double>& psi_known,
                                 const std::vector<std::uint8_t>& base_mask) {
  const std::size_t n = lambdas.size();
  if (u_num.size() != n || u_den.size() != n || psi_known.size() != n ||
      base_mask.size() != n)
    throw NumericalError(ErrorCode::MaskMismatch,
                         "recovered_psi_ratio: ragged inputs");
  MaskedFamily out{lambdas, std::vector<double>(n, 0.0),
                   std::vector<std::uint8_t>(n, 0)};
  int kept = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!base_mask[i]) continue;
    if (!std::isfinite(psi_known[i]) || !std::isfinite(u_num[i])) continue;
    if (std::abs(u_den[i]) < kEpsDen) continue;
    out.values[i] = -(u_num[i] / u_den[i]) * psi_known[i];
    out.mask[i] = 1;
    ++kept;
  }
  if (kept == 0)
    throw NumericalError(ErrorCode::UninformativeLambda,
                         "recovered_psi_ratio: every sample masked");
  return out;
}

MaskedFamily isolate_weyl(const MaskedFamily& qv, const MaskedFamily& w1,
                          const MaskedFamily& w2, const MaskedFamily& w3) {
  for (const MaskedFamily* f : {&w1, &w2, &w3}) {
    if (f->lambdas != qv.lambdas || f->mask != qv.mask)
      throw NumericalError(ErrorCode::MaskMismatch,
                           "isolate_weyl: families on different masks");
  }
  MaskedFamily out{qv.lambdas, std::vector<double>(qv.values.size(), 0.0),
                   qv.mask};
  for (std::size_t i = 0; i < qv.values.size(); ++i) {
    if (qv.mask[i])
      out.values[i] = 4.0 * qv.values[i] - w1.values[i] - w2.values[i] -
                      w3.values[i];
  }
  return out;
}

const SymmetricPotential* ReconResult::potential_for(const Region& region,
                                                     EdgeId e) const {
  const auto& slot = potentials[region.edge_index(e)];
  return slot ? &*slot : nullptr;
}

namespace {

struct Frame {
  bool rotated = false;
  const char* name = "upper";
};

// Per-frame working state: recovered potentials and their sampled psi /
// Weyl tables over the master grid, all indexed in the frame's coordinates.
struct SweepState {
  const Region& region;
  const DNOracle& oracle;
  const ReconOptions& opts;
  Frame frame;
  std::vector<int> sigma;  // boundary permutation (rotated frame)
  double tau_root = kTauRoot;

  std::vector<double> grid;
  std::vector<DNMatrix> lambda_v;  // frame view, per grid index

  std::vector<std::optional<SymmetricPotential>> recovered;
  std::vector<std::shared_ptr<Shooter>> shooters;
  Eigen::MatrixXd psi_table;   // edge x grid, NaN absent
  Eigen::MatrixXd weyl_table;  // edge x grid, NaN absent

  std::vector<EdgeRecovery> edges;
  std::vector<StepDiagnostics> steps;

  SweepState(const Region& r, const DNOracle& o, const ReconOptions& op)
      : region(r), oracle(o), opts(op) {
    recovered.resize(r.edge_count());
    shooters.resize(r.edge_count());
  }
};

DNMatrix frame_edge_dn(const SweepState& st, double lambda) {
  DNMatrix le = st.oracle.edge_dn(lambda, OracleQuery::Refinement);
  if (st.frame.rotated) le = conjugate_boundary(le, st.sigma);
  return le;
}

// Fill the cached table rows for the boundary edges (free closed forms).
void fill_boundary_rows(SweepState& st) {
  const int n_grid = static_cast<int>(st.grid.size());
  st.psi_table = Eigen::MatrixXd::Constant(st.region.edge_count(), n_grid, kNaN);
  st.weyl_table =
      Eigen::MatrixXd::Constant(st.region.edge_count(), n_grid, kNaN);
  for (int e = 0; e < st.region.edge_count(); ++e) {
    if (!st.region.is_boundary_edge(st.region.edge_at(e))) continue;
    for (int g = 0; g < n_grid; ++g) {
      const double s = sinc_sqrt(st.grid[g]);
      if (std::abs(s) < kEpsDen) continue;  // row entry stays NaN
      st.psi_table(e, g) = s;
      st.weyl_table(e, g) = cos_sqrt(st.grid[g]) / s;
    }
  }
}

// Coefficients at grid sample g from the cached tables, restricted to
// boundary edges plus interior edges in bands >= min_band. Throws
// NearEigenvalue when a needed entry is below eps_den or absent.
VertexCoeffs coeffs_from_tables(const SweepState& st, int g, int min_band) {
  VertexCoeffs c = empty_coeffs(st.region, st.grid[g]);
  for (int e = 0; e < st.region.edge_count(); ++e) {
    const EdgeId edge = st.region.edge_at(e);
    const bool boundary = st.region.is_boundary_edge(edge);
    if (!boundary) {
      if (edge.band() < min_band) continue;
      if (!st.recovered[e]) continue;
    }
    const double psi = st.psi_table(e, g);
    if (!std::isfinite(psi) || std::abs(psi) < kEpsDen)
      throw NumericalError(ErrorCode::NearEigenvalue,
                           "table psi below eps_den on " + edge_label(edge));
    c.psi[e] = psi;
    c.weyl_term[e] = st.weyl_table(e, g);
  }
  finalize_vertex_terms(st.region, c);
  return c;
}

// Coefficients at an arbitrary lambda (refinement queries), same edge set.
std::optional<VertexCoeffs> coeffs_at_lambda(const SweepState& st, double lambda,
                                             int min_band) {
  VertexCoeffs c = empty_coeffs(st.region, lambda);
  const double s_free = sinc_sqrt(lambda);
  if (std::abs(s_free) < kEpsDen) return std::nullopt;
  const double w_free = cos_sqrt(lambda) / s_free;
  for (int e = 0; e < st.region.edge_count(); ++e) {
    const EdgeId edge = st.region.edge_at(e);
    if (st.region.is_boundary_edge(edge)) {
      c.psi[e] = s_free;
      c.weyl_term[e] = w_free;
      continue;
    }
    if (edge.band() < min_band || !st.recovered[e]) continue;
    const EdgeCharData d = st.shooters[e]->at(lambda);
    if (std::abs(d.S1) < kEpsDen) return std::nullopt;
    c.psi[e] = d.S1;
    c.weyl_term[e] = d.dS1 / d.S1;
  }
  finalize_vertex_terms(st.region, c);
  return c;
}

std::optional<VertexField> field_at_lambda(const SweepState& st, double lambda,
                                           int k) {
  try {
    const auto coeffs = coeffs_at_lambda(st, lambda, k);
    if (!coeffs) return std::nullopt;
    const DNMatrix lv = lambda_V_from_E(frame_edge_dn(st, lambda));
    return special_solution_above_line(st.region, *coeffs, lv, k);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

void compress_family(const MaskedFamily& fam, std::vector<double>& lams,
                     std::vector<double>& vals) {
  lams.clear();
  vals.clear();
  for (std::size_t i = 0; i < fam.lambdas.size(); ++i) {
    if (!fam.mask[i]) continue;
    lams.push_back(fam.lambdas[i]);
    vals.push_back(fam.values[i]);
  }
}

void restrict_to(MaskedFamily& fam, const std::vector<std::uint8_t>& mask) {
  for (std::size_t i = 0; i < fam.mask.size(); ++i)
    fam.mask[i] = fam.mask[i] && mask[i];
}

// One diagonal step of the sweep: build the special solutions for level k,
// recover both endpoint edges from eigenvalues, then run the two inward
// chains. The chains overlap at one position, giving a per-diagonal
// consistency check.
void run_step(SweepState& st, int k) {
  const Region& region = st.region;
  const auto diag = diagonal_vertices(region, k);
  const int m = static_cast<int>(diag.size()) - 2;
  const int n_grid = static_cast<int>(st.grid.size());

  StepDiagnostics dg;
  dg.k = k;
  dg.sweep = st.frame.name;

  std::vector<std::uint8_t> mask(n_grid, 0);
  std::vector<VertexField> fields(n_grid);
  parallel_for(n_grid, st.opts.workers, [&](int g) {
    try {
      const VertexCoeffs coeffs = coeffs_from_tables(st, g, k);
      fields[g] = special_solution_above_line(region, coeffs, st.lambda_v[g], k);
      mask[g] = 1;
    } catch (const NumericalError&) {
      mask[g] = 0;
    }
  });

  dg.retained = static_cast<int>(std::count(mask.begin(), mask.end(), 1));
  dg.dropped = n_grid - dg.retained;
  if (dg.retained < st.opts.min_retained)
    throw NumericalError(ErrorCode::ResampleRequest,
                         "step k=" + std::to_string(k) + " (" + st.frame.name +
                             "): only " + std::to_string(dg.retained) +
                             " lambda samples survived; resample the grid");

  // Lemma SS2 check: the special solutions vanish at the interior neighbors
  // of the Bottom/Left sides, so -(Lambda_V f) must be tiny there.
  const int M = region.boundary_count();
  const int l0 = region.boundary_flat({Side::Left, 0});
  const int b0 = region.boundary_flat({Side::Bottom, 0});
  for (int g = 0; g < n_grid; ++g) {
    if (!mask[g]) continue;
    const Eigen::VectorXd f = fields[g].values.tail(M);
    const Eigen::VectorXd r = st.lambda_v[g].entries * f;
    for (int i = 0; i <= region.n(); ++i) {
      dg.below_line_leak = std::max(dg.below_line_leak, std::abs(r[b0 + i]));
      dg.below_line_leak = std::max(dg.below_line_leak, std::abs(r[l0 + i]));
    }
  }

  auto u_of = [&](VertexId v) {
    std::vector<double> out(n_grid, 0.0);
    for (int g = 0; g < n_grid; ++g)
      if (mask[g]) out[g] = fields[g].at(region, v);
    return out;
  };

  std::vector<double> psi_free(n_grid);
  for (int g = 0; g < n_grid; ++g) psi_free[g] = sinc_sqrt(st.grid[g]);

  auto table_row = [&](const Eigen::MatrixXd& table, EdgeId e) {
    const int idx = region.edge_index(e);
    std::vector<double> out(n_grid);
    for (int g = 0; g < n_grid; ++g) out[g] = table(idx, g);
    return out;
  };

  auto ratio_evaluator = [&st, &region, k](VertexId num, VertexId den,
                                           std::function<double(double)> psi) {
    return PsiEvaluator([=, &st, &region](double lam) -> std::optional<double> {
      const auto field = field_at_lambda(st, lam, k);
      if (!field) return std::nullopt;
      const double ud = field->at(region, den);
      if (std::abs(ud) < kEpsDen) return std::nullopt;
      return -(field->at(region, num) / ud) * psi(lam);
    });
  };

  auto free_psi = [](double lam) { return sinc_sqrt(lam); };

  // Registers a recovery; a second recovery of the same edge within this
  // frame is averaged against the first and the discrepancy logged.
  auto register_edge = [&](EdgeId e, const RecoveryResult& res,
                           const char* route, double mismatch) {
    const int idx = region.edge_index(e);
    if (!st.recovered[idx]) {
      st.recovered[idx] = res.q;
      EdgeRecovery rec;
      rec.edge = e;
      rec.q = res.q;
      rec.route = route;
      rec.sweep = st.frame.name;
      rec.k = k;
      rec.fit_residual2 = res.residual2;
      rec.converged = res.converged;
      rec.family_mismatch = mismatch;
      st.edges.push_back(rec);
    } else {
      const double disc = coeff_l2_distance(*st.recovered[idx], res.q);
      const SymmetricPotential avg =
          average_potentials(*st.recovered[idx], res.q);
      st.recovered[idx] = avg;
      for (auto& rec : st.edges) {
        if (rec.edge == e) {
          rec.q = avg;
          rec.route = rec.route + "+" + route;
          rec.overlap_discrepancy = disc;
          rec.fit_residual2 = std::max(rec.fit_residual2, res.residual2);
          rec.converged = rec.converged && res.converged;
          rec.family_mismatch = std::max(rec.family_mismatch, mismatch);
          break;
        }
      }
    }
    // (Re)fill the sampled tables from the registered potential; entries at
    // near-eigenvalue lambdas stay absent and are filtered at later steps.
    auto shooter = std::make_shared<Shooter>(*st.recovered[idx]);
    st.shooters[idx] = shooter;
    for (int g = 0; g < n_grid; ++g) {
      const EdgeCharData d = shooter->at(st.grid[g]);
      if (std::abs(d.S1) < kEpsDen) {
        st.psi_table(idx, g) = kNaN;
        st.weyl_table(idx, g) = kNaN;
      } else {
        st.psi_table(idx, g) = d.S1;
        st.weyl_table(idx, g) = d.dS1 / d.S1;
      }
    }
  };

  // Spectrum route: zeros of the ratio-recovered psi are the Dirichlet
  // eigenvalues of the unknown edge.
  auto recover_spectrum_edge = [&](EdgeId e, const MaskedFamily& fam,
                                   const PsiEvaluator& eval) {
    const int count = st.opts.basis_dim + 3;
    std::vector<double> lams, vals;
    compress_family(fam, lams, vals);
    const PsiSampleEigenvalues found =
        eigenvalues_from_psi_samples(lams, vals, eval, st.tau_root);
    if (static_cast<int>(found.eigenvalues.size()) < count)
      throw NumericalError(
          ErrorCode::WindowExhausted,
          "step k=" + std::to_string(k) + ", edge " + edge_label(e) + ": " +
              std::to_string(found.eigenvalues.size()) + " of " +
              std::to_string(count) +
              " eigenvalues in the working window (potential may exceed "
              "q_bound)");
    if (found.coverage_warning)
      dg.notes.push_back("edge " + edge_label(e) +
                         ": eigenvalue count below the Weyl-law estimate");
    SpectrumTarget target;
    target.eigs.assign(found.eigenvalues.begin(),
                       found.eigenvalues.begin() + count);
    const RecoveryResult res =
        recover_from_spectrum(target, st.opts.basis_dim, st.opts.fit);
    if (!res.converged)
      dg.notes.push_back("edge " + edge_label(e) +
                         ": spectrum fit stalled at residual2 = " +
                         std::to_string(res.residual2));
    Shooter check(res.q);
    double mismatch = 0.0;
    for (int g = 0; g < n_grid; ++g)
      if (fam.mask[g])
        mismatch = std::max(mismatch,
                            std::abs(fam.values[g] - check.at(st.grid[g]).S1));
    register_edge(e, res, "spectrum", mismatch);
  };

  // Weyl route: fit the isolated psi'(1)/psi(1) family.
  auto recover_weyl_edge = [&](EdgeId e, const MaskedFamily& fam) {
    std::vector<int> usable;
    for (int g = 0; g < n_grid; ++g)
      if (fam.mask[g] && std::abs(fam.values[g]) <= st.opts.fit.m_cap)
        usable.push_back(g);
    const int need = 3 * (st.opts.basis_dim + 1);
    if (static_cast<int>(usable.size()) < need)
      throw NumericalError(ErrorCode::ResampleRequest,
                           "step k=" + std::to_string(k) + ", edge " +
                               edge_label(e) +
                               ": too few usable Weyl samples");
    const int n_fit =
        std::min<int>(static_cast<int>(usable.size()), std::max(12, need + 3));
    WeylTarget target;
    for (int i = 0; i < n_fit; ++i) {
      const int g = usable[static_cast<std::size_t>(
          std::lround(static_cast<double>(i) * (usable.size() - 1) /
                      std::max(1, n_fit - 1)))];
      target.lambdas.push_back(st.grid[g]);
      target.values.push_back(fam.values[g]);
    }
    const RecoveryResult res =
        recover_from_weyl(target, st.opts.basis_dim, st.opts.fit);
    if (!res.converged)
      dg.notes.push_back("edge " + edge_label(e) +
                         ": weyl fit stalled at residual2 = " +
                         std::to_string(res.residual2));
    Shooter check(res.q);
    double mismatch = 0.0;
    for (std::size_t i = 0; i < target.lambdas.size(); ++i) {
      const EdgeCharData d = check.at(target.lambdas[i]);
      if (std::abs(d.S1) >= kEpsDen)
        mismatch = std::max(mismatch,
                            std::abs(target.values[i] - d.dS1 / d.S1));
    }
    register_edge(e, res, "weyl", mismatch);
  };

  // q_{v,lambda} at a diagonal vertex from the vertex equation: only the two
  // above-diagonal neighbors contribute because u vanishes below the line.
  auto qv_family = [&](int l) {
    const VertexId alpha = diag[l];
    const std::vector<double> pu = table_row(st.psi_table, up_edge(alpha));
    const std::vector<double> pr = table_row(st.psi_table, right_edge(alpha));
    MaskedFamily fam{st.grid, std::vector<double>(n_grid, 0.0),
                     std::vector<std::uint8_t>(n_grid, 0)};
    for (int g = 0; g < n_grid; ++g) {
      if (!mask[g]) continue;
      if (!std::isfinite(pu[g]) || !std::isfinite(pr[g])) continue;
      const double ua = fields[g].at(region, alpha);
      if (std::abs(ua) < kEpsDen) continue;
      const double up = fields[g].at(region, above(alpha));
      const double right = fields[g].at(region, right_of(alpha));
      fam.values[g] = (up / pu[g] + right / pr[g]) / (4.0 * ua);
      fam.mask[g] = 1;
    }
    if (fam.retained() == 0)
      throw NumericalError(ErrorCode::UninformativeLambda,
                           "step k=" + std::to_string(k) +
                               ": q_v family empty at chain position " +
                               std::to_string(l));
    return fam;
  };

  auto weyl_family = [&](EdgeId e, const std::vector<std::uint8_t>& on_mask) {
    const std::vector<double> row = table_row(st.weyl_table, e);
    MaskedFamily fam{st.grid, std::vector<double>(n_grid, 0.0),
                     std::vector<std::uint8_t>(n_grid, 0)};
    for (int g = 0; g < n_grid; ++g) {
      if (!on_mask[g] || !std::isfinite(row[g])) continue;
      fam.values[g] = row[g];
      fam.mask[g] = 1;
    }
    return fam;
  };

  // Weyl isolation at chain position l for the named unknown edge; the other
  // three incident edges are already recovered or boundary.
  auto isolated_weyl_at = [&](int l, EdgeId known1, EdgeId known2,
                              EdgeId known3) {
    MaskedFamily qv = qv_family(l);
    MaskedFamily w1 = weyl_family(known1, qv.mask);
    MaskedFamily w2 = weyl_family(known2, qv.mask);
    MaskedFamily w3 = weyl_family(known3, qv.mask);
    std::vector<std::uint8_t> common = qv.mask;
    for (int g = 0; g < n_grid; ++g)
      common[g] = common[g] && w1.mask[g] && w2.mask[g] && w3.mask[g];
    restrict_to(qv, common);
    restrict_to(w1, common);
    restrict_to(w2, common);
    restrict_to(w3, common);
    return isolate_weyl(qv, w1, w2, w3);
  };

  // Endpoint ratio families (psi1)-(psi4): against the known boundary psi.
  const MaskedFamily left1 = recovered_psi_ratio(
      st.grid, u_of(diag[1]), u_of(diag[0]), psi_free, mask);
  const MaskedFamily down_m = recovered_psi_ratio(
      st.grid, u_of(diag[m]), u_of(diag[m + 1]), psi_free, mask);

  if (m == 1) {
    // Paper's k = 2N case: both edges of the single interior diagonal vertex
    // come from eigenvalues.
    recover_spectrum_edge(left_edge(diag[1]), left1,
                          ratio_evaluator(diag[1], diag[0], free_psi));
    recover_spectrum_edge(down_edge(diag[1]), down_m,
                          ratio_evaluator(diag[1], diag[2], free_psi));
    st.steps.push_back(dg);
    return;
  }

  const int mid = (m + 1) / 2;  // chains meet (and overlap) here

  // Left-to-right chain: left edges from ratio zeros, down edges from Weyl
  // isolation.
  {
    MaskedFamily fam = left1;
    PsiEvaluator eval = ratio_evaluator(diag[1], diag[0], free_psi);
    for (int l = 1; l <= mid; ++l) {
      recover_spectrum_edge(left_edge(diag[l]), fam, eval);
      const MaskedFamily wd = isolated_weyl_at(
          l, left_edge(diag[l]), up_edge(diag[l]), right_edge(diag[l]));
      recover_weyl_edge(down_edge(diag[l]), wd);
      if (l + 1 <= mid) {
        const auto shooter = st.shooters[region.edge_index(down_edge(diag[l]))];
        fam = recovered_psi_ratio(st.grid, u_of(diag[l + 1]), u_of(diag[l]),
                                  table_row(st.psi_table, down_edge(diag[l])),
                                  mask);
        eval = ratio_evaluator(diag[l + 1], diag[l], [shooter](double lam) {
          return shooter->at(lam).S1;
        });
      }
    }
  }

  // Mirrored right-to-left chain: down edges from ratio zeros, left edges
  // from Weyl isolation.
  {
    MaskedFamily fam = down_m;
    PsiEvaluator eval = ratio_evaluator(diag[m], diag[m + 1], free_psi);
    for (int l = m; l >= mid; --l) {
      recover_spectrum_edge(down_edge(diag[l]), fam, eval);
      const MaskedFamily wl = isolated_weyl_at(
          l, down_edge(diag[l]), up_edge(diag[l]), right_edge(diag[l]));
      recover_weyl_edge(left_edge(diag[l]), wl);
      if (l - 1 >= mid) {
        const auto shooter = st.shooters[region.edge_index(left_edge(diag[l]))];
        fam = recovered_psi_ratio(st.grid, u_of(diag[l - 1]), u_of(diag[l]),
                                  table_row(st.psi_table, left_edge(diag[l])),
                                  mask);
        eval = ratio_evaluator(diag[l - 1], diag[l], [shooter](double lam) {
          return shooter->at(lam).S1;
        });
      }
    }
  }

  st.steps.push_back(dg);
}

void dump_frontier(const SweepState& st, int failed_k, const std::string& path,
                   const std::string& error) {
  if (path.empty()) return;
  nlohmann::json j;
  j["frame"] = st.frame.name;
  j["failed_k"] = failed_k;
  j["error"] = error;
  j["recovered"] = nlohmann::json::array();
  for (const auto& rec : st.edges) {
    nlohmann::json e;
    e["edge"] = {rec.edge.origin.n1, rec.edge.origin.n2,
                 rec.edge.dir == EdgeDir::Right ? "right" : "up"};
    std::vector<double> coeffs{rec.q.constant_term()};
    for (int i = 0; i < rec.q.cos_coeffs().size(); ++i)
      coeffs.push_back(rec.q.cos_coeffs()[i]);
    e["coeffs"] = coeffs;
    e["route"] = rec.route;
    e["k"] = rec.k;
    j["recovered"].push_back(e);
  }
  std::ofstream out(path);
  if (out) out << j.dump(2) << "\n";
}

}  // namespace

ReconResult reconstruct_all(const Region& region, const DNOracle& oracle,
                            const ReconOptions& opts) {
  if (oracle.region_n() != region.n())
    throw SchemaError("reconstruct_all: oracle N does not match the region");

  const double hi = opts.lambda_hi.value_or(
      std::pow((opts.basis_dim + 4) * kPi, 2) + opts.q_bound);
  const int want = opts.grid_size + std::max(opts.grid_size / 4, 8);
  std::vector<double> grid_all =
      oracle.admissible_grid(opts.lambda_lo, hi, want);

  // Pin down the served master grid and its Lambda_E samples once; both
  // frames reuse them.
  std::vector<DNMatrix> master(grid_all.size());
  std::vector<std::uint8_t> served(grid_all.size(), 0);
  parallel_for(static_cast<int>(grid_all.size()), opts.workers, [&](int g) {
    try {
      master[g] = oracle.edge_dn(grid_all[g]);
      served[g] = 1;
    } catch (const NumericalError&) {
      served[g] = 0;
    }
  });
  std::vector<double> grid;
  std::vector<DNMatrix> master_le;
  for (std::size_t g = 0; g < grid_all.size(); ++g) {
    if (!served[g]) continue;
    grid.push_back(grid_all[g]);
    master_le.push_back(std::move(master[g]));
  }
  if (static_cast<int>(grid.size()) < opts.grid_size)
    throw NumericalError(
        ErrorCode::InsufficientGrid,
        "reconstruct_all: oracle served " + std::to_string(grid.size()) +
            " admissible samples; need " + std::to_string(opts.grid_size));

  ReconResult out;
  out.potentials.resize(region.edge_count());
  out.report.N = region.n();
  out.report.basis_dim = opts.basis_dim;
  out.report.oracle_mode = oracle.sampled() ? "file" : "callable";

  const std::vector<int> sigma = rotation_boundary_permutation(region);

  for (const Frame frame : {Frame{false, "upper"}, Frame{true, "rotated"}}) {
    SweepState st(region, oracle, opts);
    st.frame = frame;
    st.sigma = sigma;
    st.tau_root = oracle.sampled() ? opts.tau_root_file : opts.tau_root;
    st.grid = grid;
    st.lambda_v.resize(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const DNMatrix le =
          frame.rotated ? conjugate_boundary(master_le[g], sigma) : master_le[g];
      st.lambda_v[g] = lambda_V_from_E(le);
    }
    fill_boundary_rows(st);

    int current_k = 2 * region.n();
    try {
      for (int k = 2 * region.n(); k >= region.n() + 1; --k) {
        current_k = k;
        run_step(st, k);
      }
    } catch (const std::exception& err) {
      dump_frontier(st, current_k, opts.state_dump_path, err.what());
      throw;
    }

    for (EdgeRecovery rec : st.edges) {
      const EdgeId physical =
          frame.rotated ? rotate_pi(region, rec.edge) : rec.edge;
      rec.edge = physical;
      const int idx = region.edge_index(physical);
      if (out.potentials[idx]) {
        // Cross-sweep overlap (the two sweeps partition the interior edges,
        // so this is unexpected; keep the average and log it).
        const double disc = coeff_l2_distance(*out.potentials[idx], rec.q);
        out.potentials[idx] = average_potentials(*out.potentials[idx], rec.q);
        rec.q = *out.potentials[idx];
        rec.overlap_discrepancy = disc;
        rec.route += "+cross-sweep";
      } else {
        out.potentials[idx] = rec.q;
      }
      out.report.edges.push_back(std::move(rec));
    }
    for (auto& s : st.steps) out.report.steps.push_back(s);
  }

  return out;
}

std::string report_to_json(const ReconReport& report) {
  nlohmann::json j;
  j["N"] = report.N;
  j["basis_dim"] = report.basis_dim;
  j["oracle_mode"] = report.oracle_mode;
  j["edges"] = nlohmann::json::array();
  for (const auto& rec : report.edges) {
    nlohmann::json e;
    e["edge"] = {rec.edge.origin.n1, rec.edge.origin.n2,
                 rec.edge.dir == EdgeDir::Right ? "right" : "up"};
    std::vector<double> coeffs{rec.q.constant_term()};
    for (int i = 0; i < rec.q.cos_coeffs().size(); ++i)
      coeffs.push_back(rec.q.cos_coeffs()[i]);
    e["coeffs"] = coeffs;
    e["route"] = rec.route;
    e["sweep"] = rec.sweep;
    e["k"] = rec.k;
    e["fit_residual2"] = rec.fit_residual2;
    e["converged"] = rec.converged;
    if (rec.overlap_discrepancy)
      e["overlap_discrepancy"] = *rec.overlap_discrepancy;
    e["family_mismatch"] = rec.family_mismatch;
    j["edges"].push_back(e);
  }
  j["steps"] = nlohmann::json::array();
  for (const auto& s : report.steps) {
    nlohmann::json e;
    e["k"] = s.k;
    e["sweep"] = s.sweep;
    e["retained"] = s.retained;
    e["dropped"] = s.dropped;
    e["below_line_leak"] = s.below_line_leak;
    e["notes"] = s.notes;
    j["steps"].push_back(e);
  }
  return j.dump(2);
}

}  // namespace qglat
