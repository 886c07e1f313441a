#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qglat/dn_maps.hpp"
#include "qglat/edge_ode.hpp"
#include "qglat/errors.hpp"
#include "qglat/numerics.hpp"
#include "qglat/vertex_system.hpp"

using namespace qglat;

namespace {

constexpr double kPi = 3.141592653589793;

PotentialTable random_table(const Region& region, std::mt19937& rng,
                            double amplitude, int modes) {
  std::uniform_real_distribution<double> coeff(-amplitude, amplitude);
  PotentialTable table(region);
  for (int i = 0; i < region.edge_count(); ++i) {
    if (!region.is_interior_edge(region.edge_at(i))) continue;
    Eigen::VectorXd c(modes);
    for (int m = 0; m < modes; ++m) c[m] = coeff(rng);
    table.set(region, region.edge_at(i),
              SymmetricPotential::from_cosine(coeff(rng), c));
  }
  return table;
}

double vertex_residual(const Region& region, const VertexCoeffs& coeffs,
                       const VertexField& u, VertexId v) {
  double acc = 0.0;
  for (const EdgeId e : region.incident_edges(v)) {
    const VertexId w = (e.origin == v) ? e.terminus() : e.origin;
    acc += u.at(region, w) / coeffs.psi[region.edge_index(e)];
  }
  return 0.25 * acc - coeffs.qv[region.interior_index(v)] * u.at(region, v);
}

double find_admissible(const Region& region, const PotentialTable& table,
                       double start) {
  for (double lam = start; lam < start + 40.0; lam += 0.37) {
    if (admissible(region, table, lam).ok) return lam;
  }
  REQUIRE(false);
  return 0.0;
}

}  // namespace

TEST_SUITE("vertex_system") {

TEST_CASE("free coefficients at lambda = 1") {
  const Region region = build_region(1);
  const PotentialTable table(region);
  const VertexCoeffs coeffs = assemble_coeffs(region, table, 1.0);
  for (int e = 0; e < region.edge_count(); ++e)
    CHECK(coeffs.psi[e] == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
  for (int vi = 0; vi < region.interior_count(); ++vi)
    CHECK(coeffs.qv[vi] ==
          doctest::Approx(std::cos(1.0) / std::sin(1.0)).epsilon(1e-12));
}

TEST_CASE("free vertex equation reduces to the cos(sqrt(lambda)) average") {
  const Region region = build_region(2);
  const PotentialTable table(region);
  const double lam = 2.0;
  const VertexCoeffs coeffs = assemble_coeffs(region, table, lam);
  // (1/4) sum u(w)/psi - q_v u(v) == [(1/4) sum u(w) - cos(sqrt(lam)) u(v)]/psi
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  VertexField u;
  u.values = Eigen::VectorXd::NullaryExpr(region.vertex_count(),
                                          [&](Eigen::Index) { return val(rng); });
  const VertexId v{1, 1};
  double sum = 0.0;
  for (const EdgeId e : region.incident_edges(v)) {
    const VertexId w = (e.origin == v) ? e.terminus() : e.origin;
    sum += u.at(region, w);
  }
  const double lhs = vertex_residual(region, coeffs, u, v);
  const double rhs =
      (0.25 * sum - cos_sqrt(lam) * u.at(region, v)) / sinc_sqrt(lam);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("q_v is the average of the four incident Weyl values") {
  const Region region = build_region(1);
  std::mt19937 rng(17);
  const PotentialTable table = random_table(region, rng, 1.0, 2);
  const double lam = 2.0;
  const VertexCoeffs coeffs = assemble_coeffs(region, table, lam);
  const VertexId v{0, 1};
  double acc = 0.0;
  for (const EdgeId e : region.incident_edges(v)) {
    const SymmetricPotential& q = table.at(region.edge_index(e));
    acc += weyl(q, lam);
  }
  CHECK(coeffs.qv[region.interior_index(v)] ==
        doctest::Approx(0.25 * acc).epsilon(1e-10));
}

TEST_CASE("near-eigenvalue edge is reported") {
  const Region region = build_region(1);
  const PotentialTable table(region);
  CHECK_THROWS_WITH_AS(assemble_coeffs(region, table, kPi * kPi),
                       doctest::Contains("psi"), NumericalError);
}

TEST_CASE("dirichlet solve basics") {
  const Region region = build_region(0);
  const PotentialTable table(region);
  const double lam = 2.0;
  const VertexCoeffs coeffs = assemble_coeffs(region, table, lam);

  SUBCASE("zero data gives the zero solution") {
    const VertexField u =
        solve_dirichlet(region, coeffs, Eigen::VectorXd::Zero(4));
    CHECK(u.values.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("N=0 closed form") {
    Eigen::VectorXd f(4);
    f << 0.3, -1.2, 0.5, 2.0;
    const VertexField u = solve_dirichlet(region, coeffs, f);
    CHECK(u.at(region, {0, 0}) ==
          doctest::Approx(f.sum() / (4.0 * std::cos(std::sqrt(2.0))))
              .epsilon(1e-12));
  }
}

TEST_CASE("dirichlet solve residual on random potentials") {
  const Region region = build_region(2);
  std::mt19937 rng(99);
  const PotentialTable table = random_table(region, rng, 1.5, 2);
  const double lam = find_admissible(region, table, 1.7);
  const VertexCoeffs coeffs = assemble_coeffs(region, table, lam);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  Eigen::VectorXd f = Eigen::VectorXd::NullaryExpr(
      region.boundary_count(), [&](Eigen::Index) { return val(rng); });
  const VertexField u = solve_dirichlet(region, coeffs, f);
  for (int n2 = 0; n2 <= 2; ++n2)
    for (int n1 = 0; n1 <= 2; ++n1)
      CHECK(std::abs(vertex_residual(region, coeffs, u, {n1, n2})) < 1e-10);
}

TEST_CASE("discrete eigenvalue collision raises the conditioning signal") {
  const Region region = build_region(0);
  const PotentialTable table(region);
  // cos(sqrt(lambda)) = 0 makes the single interior equation vanish.
  const double lam = kPi * kPi / 4.0;
  const VertexCoeffs coeffs = assemble_coeffs(region, table, lam);
  CHECK_THROWS_AS(solve_dirichlet(region, coeffs, Eigen::VectorXd::Ones(4)),
                  NumericalError);
}

TEST_CASE("propagate") {
  SUBCASE("zero data propagates to zero") {
    const Region region = build_region(2);
    const PotentialTable table(region);
    const VertexCoeffs coeffs = assemble_coeffs(region, table, 2.0);
    const VertexField u =
        propagate(region, coeffs, Eigen::VectorXd::Zero(12),
                  Eigen::VectorXd::Zero(3));
    CHECK(u.values.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("agrees with the dense solve on random instances") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
      const int N = trial % 5;
      const Region region = build_region(N);
      const PotentialTable table = random_table(region, rng, 1.2, 2);
      const double lam = find_admissible(region, table, 1.3 + 0.1 * trial);
      const VertexCoeffs coeffs = assemble_coeffs(region, table, lam);
      Eigen::VectorXd f = Eigen::VectorXd::NullaryExpr(
          region.boundary_count(), [&](Eigen::Index) { return val(rng); });
      const VertexField dense = solve_dirichlet(region, coeffs, f);
      Eigen::VectorXd g(N + 1);
      for (int m = 0; m <= N; ++m) g[m] = -dense.at(region, {0, m});
      const VertexField marched = propagate(region, coeffs, f, g);
      CHECK((marched.values - dense.values).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  SUBCASE("missing coefficient under a nonzero value raises a signal") {
    const Region region = build_region(1);
    VertexCoeffs coeffs = empty_coeffs(region, 2.0);
    Eigen::VectorXd f = Eigen::VectorXd::Ones(region.boundary_count());
    CHECK_THROWS_AS(
        propagate(region, coeffs, f, Eigen::VectorXd::Ones(2)),
        NumericalError);
  }
}

TEST_CASE("complete_boundary") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> val(-1.0, 1.0);

  SUBCASE("zero data completes to zero") {
    const Region region = build_region(1);
    const PotentialTable table(region);
    const DNMatrix lv = assemble_lambda_V(region, table, 2.0);
    const Eigen::VectorXd f = complete_boundary(
        region, lv, Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(2));
    CHECK(f.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("recovers a planted right side") {
    const Region region = build_region(2);
    const PotentialTable table = random_table(region, rng, 1.0, 1);
    const double lam = find_admissible(region, table, 2.1);
    const DNMatrix lv = assemble_lambda_V(region, table, lam);
    Eigen::VectorXd f_star = Eigen::VectorXd::NullaryExpr(
        region.boundary_count(), [&](Eigen::Index) { return val(rng); });
    const int l0 = region.boundary_flat({Side::Left, 0});
    const Eigen::VectorXd g = (lv.entries * f_star).segment(l0, 3);
    const Eigen::VectorXd f = complete_boundary(region, lv, f_star, g);
    CHECK((f - f_star).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(((lv.entries * f).segment(l0, 3) - g).cwiseAbs().maxCoeff() < 1e-10);
  }

  SUBCASE("N=0 submatrix is the closed-form scalar") {
    const Region region = build_region(0);
    const PotentialTable table(region);
    const DNMatrix lv = assemble_lambda_V(region, table, 2.0);
    const int l0 = region.boundary_flat({Side::Left, 0});
    const int r0 = region.boundary_flat({Side::Right, 0});
    CHECK(lv.entries(l0, r0) ==
          doctest::Approx(-1.0 / (4.0 * std::cos(std::sqrt(2.0))))
              .epsilon(1e-12));
  }
}

TEST_CASE("special solutions vanish below the diagonal") {
  std::mt19937 rng(404);
  const Region region = build_region(2);
  const PotentialTable table = random_table(region, rng, 1.0, 2);

  for (int k = 3; k <= 4; ++k) {
    const double lam = find_admissible(region, table, 1.9 + 0.3 * k);
    const VertexCoeffs coeffs = assemble_coeffs(region, table, lam);
    const DNMatrix lv = assemble_lambda_V(region, table, lam);
    const VertexField u = special_solution(region, coeffs, lv, k);

    const auto diag = diagonal_vertices(region, k);
    CHECK(u.at(region, diag.front()) == 1.0);

    // The march produces exact zeros below A_k; the dense solve with the
    // completed boundary reproduces the same field to solver accuracy.
    double below = 0.0, scale = u.values.cwiseAbs().maxCoeff();
    for (int n2 = 0; n2 <= 2; ++n2)
      for (int n1 = 0; n1 <= 2; ++n1)
        if (n1 + n2 < k)
          below = std::max(below, std::abs(u.at(region, {n1, n2})));
    CHECK(below == 0.0);

    const Eigen::VectorXd f_completed = complete_boundary(
        region, lv,
        [&] {
          Eigen::VectorXd f1 = Eigen::VectorXd::Zero(region.boundary_count());
          f1[region.boundary_flat(diag.front())] = 1.0;
          return f1;
        }(),
        Eigen::VectorXd::Zero(3));
    const VertexField dense = solve_dirichlet(region, coeffs, f_completed);
    CHECK((dense.values - u.values).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, scale));
  }
}

TEST_CASE("above-line variant matches the full special solution") {
  std::mt19937 rng(777);
  for (int N : {2, 3}) {
    const Region region = build_region(N);
    const PotentialTable table = random_table(region, rng, 1.0, 1);
    for (int k = N + 1; k <= 2 * N; ++k) {
      const double lam = find_admissible(region, table, 2.3 + 0.17 * k);
      const VertexCoeffs coeffs = assemble_coeffs(region, table, lam);
      const DNMatrix lv = assemble_lambda_V(region, table, lam);
      const VertexField full = special_solution(region, coeffs, lv, k);
      const VertexField above = special_solution_above_line(region, coeffs, lv, k);
      const double scale = std::max(1.0, full.values.cwiseAbs().maxCoeff());
      CHECK((full.values - above.values).cwiseAbs().maxCoeff() < 1e-8 * scale);
    }
  }
}

TEST_CASE("corner relation") {
  std::mt19937 rng(52);
  const Region region = build_region(3);
  const PotentialTable table = random_table(region, rng, 1.0, 1);
  const double lam = find_admissible(region, table, 2.0);
  const VertexCoeffs coeffs = assemble_coeffs(region, table, lam);
  const DNMatrix lv = assemble_lambda_V(region, table, lam);

  SUBCASE("residual vanishes on special solutions") {
    for (int k = 4; k <= 6; ++k) {
      const VertexField u = special_solution(region, coeffs, lv, k);
      for (int n1 = 0; n1 <= 3; ++n1) {
        const VertexId a{n1, k - 1 - n1};
        if (!region.is_interior(a)) continue;
        const CornerRelation rel = corner_relation(region, u, coeffs, a);
        if (!rel.informative) continue;
        CHECK(std::abs(rel.residual) < 1e-9);
      }
    }
  }

  SUBCASE("solve-for-unknown returns the planted psi") {
    const VertexField u = special_solution(region, coeffs, lv, 5);
    const VertexId a{1, 3};  // on A_4, below the k=5 diagonal
    const CornerRelation rel = corner_relation(region, u, coeffs, a);
    REQUIRE(rel.informative);
    const double psi_up = coeffs.psi[region.edge_index(up_edge(a))];
    const double psi_right = corner_unknown_psi(rel.u_right, rel.u_up, psi_up);
    // Eq3 determines psi_right from the other three quantities.
    CHECK(1.0 / psi_right ==
          doctest::Approx(-rel.u_up / (psi_up * rel.u_right)).epsilon(1e-12));
    CHECK(psi_right ==
          doctest::Approx(coeffs.psi[region.edge_index(right_edge(a))])
              .epsilon(1e-9));
  }

  SUBCASE("uninformative corner is flagged") {
    VertexField zero;
    zero.values = Eigen::VectorXd::Zero(region.vertex_count());
    const CornerRelation rel = corner_relation(region, zero, coeffs, {1, 3});
    CHECK(!rel.informative);
    CHECK_THROWS_AS(corner_unknown_psi(1.0, 0.0, 0.5), NumericalError);
  }
}

TEST_CASE("edge-to-vertex reduction against the Kirchhoff star") {
  std::mt19937 rng(3000);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  std::uniform_real_distribution<double> energy(0.5, 80.0);
  std::uniform_real_distribution<double> bval(-1.0, 1.0);

  int done = 0;
  while (done < 20) {
    std::array<SymmetricPotential, 4> pots;
    std::array<testing::EndpointData, 4> data;
    std::array<double, 4> f;
    const double lam = energy(rng);
    bool usable = true;
    for (int i = 0; i < 4; ++i) {
      Eigen::VectorXd c(2);
      c << coeff(rng), coeff(rng);
      pots[i] = SymmetricPotential::from_cosine(coeff(rng), c);
      auto qf = [&, i](double z) { return pots[i](z); };
      data[i] = testing::rk4_endpoint(qf, lam, 8192);
      f[i] = bval(rng);
      if (std::abs(data[i].S1) < 1e-4) usable = false;
    }
    if (!usable) continue;
    double den = 0.0;
    for (int i = 0; i < 4; ++i) den += data[i].C1 / data[i].S1;
    if (std::abs(den) < 1e-3) continue;

    const double u_center = testing::star_center_value(data, f);
    // Vertex equation at the center: (1/4) sum f_e/psi_e = q_v u_center with
    // psi_e = S1_e and q_v = (1/4) sum S1'_e/S1_e.
    double lhs = 0.0, qv = 0.0;
    for (int i = 0; i < 4; ++i) {
      lhs += f[i] / data[i].S1;
      qv += data[i].dS1 / data[i].S1;
    }
    CHECK(std::abs(0.25 * lhs - 0.25 * qv * u_center) < 1e-8);
    ++done;
  }
}

}  // TEST_SUITE
