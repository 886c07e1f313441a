#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "qglat/dn_maps.hpp"
#include "qglat/edge_ode.hpp"
#include "qglat/errors.hpp"
#include "qglat/numerics.hpp"

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

std::vector<double> admissible_grid_for(const Region& region,
                                        const PotentialTable& table, int count,
                                        double start) {
  std::vector<double> out;
  for (double lam = start; static_cast<int>(out.size()) < count; lam += 0.83) {
    if (admissible(region, table, lam).ok) out.push_back(lam);
    REQUIRE(lam < 500.0);
  }
  return out;
}

std::string temp_path(const char* name) {
  return std::string("qglat_test_") + name;
}

}  // namespace

TEST_SUITE("dn_maps") {

TEST_CASE("N=0 free Lambda_V closed form") {
  const Region region = build_region(0);
  const PotentialTable table(region);
  const DNMatrix lv = assemble_lambda_V(region, table, 2.0);
  const double expected = -1.0 / (4.0 * std::cos(std::sqrt(2.0)));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(lv.entries(i, j) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("relation conversions are mutually inverse") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  DNMatrix x{7.3, Eigen::MatrixXd::NullaryExpr(
                      8, 8, [&](Eigen::Index, Eigen::Index) { return val(rng); })};
  const DNMatrix back = lambda_V_from_E(lambda_E_from_V(x));
  CHECK((back.entries - x.entries).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("N=0 free relation against the continuous oracle") {
  const Region region = build_region(0);
  const PotentialTable table(region);
  const double lam = 2.0;
  const DNMatrix lv = assemble_lambda_V(region, table, lam);
  const DNMatrix le = continuous_oracle_lambda_E(region, table, lam);
  const DNMatrix expected = lambda_E_from_V(lv);
  CHECK((le.entries - expected.entries).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("relation identity on random potentials") {
  std::mt19937 rng(21);
  for (int N : {0, 1}) {
    const Region region = build_region(N);
    const PotentialTable table = random_table(region, rng, 1.5, 2);
    for (double lam : admissible_grid_for(region, table, 4, 1.1)) {
      const DNMatrix lv = assemble_lambda_V(region, table, lam);
      const DNMatrix le = continuous_oracle_lambda_E(region, table, lam);
      const Eigen::MatrixXd residual =
          lv.entries + cos_sqrt(lam) * Eigen::MatrixXd::Identity(
                                           region.boundary_count(),
                                           region.boundary_count()) -
          sinc_sqrt(lam) * le.entries;
      CHECK(residual.cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("D-N matrices are numerically symmetric") {
  std::mt19937 rng(33);
  const Region region = build_region(2);
  const PotentialTable table = random_table(region, rng, 1.5, 2);
  for (double lam : admissible_grid_for(region, table, 3, 1.7)) {
    const DNMatrix lv = assemble_lambda_V(region, table, lam);
    CHECK((lv.entries - lv.entries.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    const DNMatrix le = continuous_oracle_lambda_E(region, table, lam);
    CHECK((le.entries - le.entries.transpose()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("continuous solution satisfies Kirchhoff, continuity, Dirichlet") {
  std::mt19937 rng(44);
  const Region region = build_region(1);
  const PotentialTable table = random_table(region, rng, 1.0, 2);
  const double lam = admissible_grid_for(region, table, 1, 2.2)[0];
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  Eigen::VectorXd f = Eigen::VectorXd::NullaryExpr(
      region.boundary_count(), [&](Eigen::Index) { return val(rng); });
  const EdgeExpansion sol = continuous_oracle_solution(region, table, lam, f);

  std::vector<EdgeCharData> data(region.edge_count());
  for (int i = 0; i < region.edge_count(); ++i)
    data[i] = shoot(table.at(i), lam);

  auto value_at = [&](EdgeId e, VertexId v) {
    const int i = region.edge_index(e);
    return e.origin == v ? sol.b[i] : sol.a[i] * data[i].S1 + sol.b[i] * data[i].C1;
  };
  auto deriv_at = [&](EdgeId e, VertexId v) {
    const int i = region.edge_index(e);
    return e.origin == v ? -sol.a[i]
                         : sol.a[i] * data[i].dS1 + sol.b[i] * data[i].dC1;
  };

  for (int n2 = 0; n2 <= 1; ++n2) {
    for (int n1 = 0; n1 <= 1; ++n1) {
      const VertexId v{n1, n2};
      const auto edges = region.incident_edges(v);
      double ksum = 0.0;
      for (const EdgeId e : edges) {
        ksum += deriv_at(e, v);
        CHECK(std::abs(value_at(e, v) - value_at(edges[0], v)) < 1e-10);
      }
      CHECK(std::abs(ksum) < 1e-10);
    }
  }
  for (int b = 0; b < region.boundary_count(); ++b) {
    const VertexId v = region.boundary_vertex(b);
    CHECK(std::abs(value_at(region.boundary_edge(v), v) - f[b]) < 1e-10);
  }
}

TEST_CASE("admissibility guards") {
  const Region region = build_region(1);
  const PotentialTable table(region);
  CHECK(!admissible(region, table, kPi * kPi).ok);           // edge eigenvalue
  CHECK(!admissible(region, table, kPi * kPi / 4.0).ok);     // T0: cos = 0
  CHECK(!admissible(region, table, kPi * kPi / 4.0 + 0.03).ok);  // inside delta_T
  const Admissibility ok = admissible(region, table, 2.0);
  CHECK(ok.ok);
  CHECK(ok.reason.empty());
}

TEST_CASE("exceptional set") {
  CHECK(ExceptionalSet::dist_T0(kPi * kPi / 4.0) < 1e-12);
  CHECK(ExceptionalSet::dist_T0(0.0) == 0.0);
  CHECK(ExceptionalSet::dist_T0(2.0) ==
        doctest::Approx(std::min(2.0, kPi * kPi / 4.0 - 2.0)).epsilon(1e-12));

  const Region region = build_region(0);
  const PotentialTable table(region);
  const ExceptionalSet set = exceptional_set(region, table, 0.5, 100.0);
  REQUIRE(set.edge_dirichlet.size() == 4);
  for (const auto& eigs : set.edge_dirichlet) {
    REQUIRE(eigs.size() == 3);
    CHECK(eigs[0] == doctest::Approx(kPi * kPi).epsilon(1e-9));
    CHECK(eigs[2] == doctest::Approx(9.0 * kPi * kPi).epsilon(1e-9));
  }
}

TEST_CASE("forward oracle rejects inadmissible lambda") {
  const Region region = build_region(1);
  const ForwardOracle oracle(region, PotentialTable(region));
  CHECK_THROWS_AS(oracle.edge_dn(kPi * kPi), NumericalError);
  CHECK_NOTHROW(oracle.edge_dn(2.0));
  const auto grid = oracle.admissible_grid(0.5, 40.0, 50);
  CHECK(static_cast<int>(grid.size()) == 50);
  for (double lam : grid) CHECK(oracle.check(lam).ok);
}

TEST_CASE("rotated oracle equals the oracle of the rotated potentials") {
  std::mt19937 rng(66);
  const Region region = build_region(1);
  const PotentialTable table = random_table(region, rng, 1.2, 1);
  PotentialTable rotated(region);
  for (int i = 0; i < region.edge_count(); ++i) {
    const EdgeId e = region.edge_at(i);
    if (!region.is_interior_edge(e)) continue;
    rotated.set(region, rotate_pi(region, e), table.at(i));
  }
  const ForwardOracle base(region, table);
  const ForwardOracle physically_rotated(region, rotated);
  const RotatedOracle view(region, base);
  for (double lam : {1.3, 2.0, 5.2}) {
    const DNMatrix a = view.edge_dn(lam);
    const DNMatrix b = physically_rotated.edge_dn(lam);
    CHECK((a.entries - b.entries).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("sample file round-trips") {
  const Region region = build_region(0);
  const PotentialTable table(region);
  const ForwardOracle oracle(region, table);

  DNSampleFile file;
  file.N = 0;
  for (double lam : oracle.admissible_grid(0.5, 30.0, 40)) {
    file.lambdas.push_back(lam);
    file.matrices.push_back(oracle.edge_dn(lam).entries);
  }
  file.dropped.emplace_back(kPi * kPi / 4.0, "within delta_T of T0");

  SUBCASE("csv payload is bit-exact") {
    file.payload = "csv";
    const std::string path = temp_path("csv.dn");
    write_dn_file(path, file);
    const DNSampleFile back = read_dn_file(path);
    REQUIRE(back.lambdas.size() == file.lambdas.size());
    for (std::size_t i = 0; i < file.lambdas.size(); ++i) {
      CHECK(back.lambdas[i] == file.lambdas[i]);
      CHECK((back.matrices[i] - file.matrices[i]).cwiseAbs().maxCoeff() == 0.0);
    }
    REQUIRE(back.dropped.size() == 1);
    CHECK(back.dropped[0].second == "within delta_T of T0");
    std::remove(path.c_str());
  }

  SUBCASE("binary payload is bit-exact") {
    file.payload = "binary";
    const std::string path = temp_path("bin.dn");
    write_dn_file(path, file);
    const DNSampleFile back = read_dn_file(path);
    REQUIRE(back.lambdas.size() == file.lambdas.size());
    for (std::size_t i = 0; i < file.lambdas.size(); ++i)
      CHECK((back.matrices[i] - file.matrices[i]).cwiseAbs().maxCoeff() == 0.0);
    std::remove(path.c_str());
  }

  SUBCASE("truncated file raises a schema error") {
    file.payload = "csv";
    const std::string path = temp_path("trunc.dn");
    write_dn_file(path, file);
    // Chop the payload mid-row.
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    std::fseek(fp, 0, SEEK_END);
    const long size = std::ftell(fp);
    std::fclose(fp);
    std::string content(size, '\0');
    fp = std::fopen(path.c_str(), "rb");
    REQUIRE(std::fread(content.data(), 1, size, fp) == (std::size_t)size);
    std::fclose(fp);
    content.resize(size - 40);
    fp = std::fopen(path.c_str(), "wb");
    std::fwrite(content.data(), 1, content.size(), fp);
    std::fclose(fp);
    CHECK_THROWS_AS(read_dn_file(path), SchemaError);
    std::remove(path.c_str());
  }

  SUBCASE("garbage header raises a schema error") {
    const std::string path = temp_path("garbage.dn");
    std::FILE* fp = std::fopen(path.c_str(), "w");
    std::fputs("not json at all\n1,2,3\n", fp);
    std::fclose(fp);
    CHECK_THROWS_AS(read_dn_file(path), SchemaError);
    std::remove(path.c_str());
  }
}

TEST_CASE("sampled oracle interpolates the callable oracle") {
  std::mt19937 rng(91);
  const Region region = build_region(1);
  const PotentialTable table = random_table(region, rng, 1.0, 1);
  const ForwardOracle callable(region, table);

  // Production grid at the default density (200 per unit lambda).
  const double lo = 1.0, hi = 6.0;
  DNGridOptions gopts;
  gopts.workers = 1;
  const DNSampleFile file = sample_edge_dn_grid(region, table, lo, hi, gopts);
  CHECK(!file.dropped.empty());  // at least the T0 neighborhood
  const SampledOracle sampled(file);

  SUBCASE("on-sample queries are exact") {
    const double lam = file.lambdas[17];
    CHECK((sampled.edge_dn(lam).entries - file.matrices[17])
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  SUBCASE("off-sample queries reproduce the callable oracle to 1e-6") {
    std::uniform_real_distribution<double> pick(lo + 0.2, hi - 0.2);
    int compared = 0;
    for (int t = 0; t < 20 && compared < 8; ++t) {
      const double lam = pick(rng);
      if (!callable.check(lam).ok) continue;
      DNMatrix a;
      try {
        a = sampled.edge_dn(lam);
      } catch (const NumericalError&) {
        continue;  // lambda fell into a recorded admissibility gap
      }
      const DNMatrix b = callable.edge_dn(lam);
      CHECK((a.entries - b.entries).cwiseAbs().maxCoeff() < 1e-6);
      ++compared;
    }
    CHECK(compared >= 8);
  }
  SUBCASE("uncovered lambda is refused") {
    CHECK_THROWS_AS(sampled.edge_dn(hi + 5.0), NumericalError);
  }
  SUBCASE("subsampled grid stays within the window") {
    const auto grid = sampled.admissible_grid(2.0, 5.0, 37);
    CHECK(static_cast<int>(grid.size()) == 37);
    for (double lam : grid) {
      CHECK(lam >= 2.0);
      CHECK(lam <= 5.0);
    }
  }
}

}  // TEST_SUITE
