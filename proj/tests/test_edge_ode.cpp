#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qglat/edge_ode.hpp"
#include "qglat/errors.hpp"
#include "qglat/numerics.hpp"

using namespace qglat;

namespace {
constexpr double kPi = 3.141592653589793;

SymmetricPotential two_mode(double c0, double c1, double c2) {
  Eigen::VectorXd c(2);
  c << c1, c2;
  return SymmetricPotential::from_cosine(c0, c);
}
}  // namespace

TEST_SUITE("edge_ode") {

TEST_CASE("free potential closed forms") {
  const auto q0 = SymmetricPotential::zero();
  const double lam = kPi * kPi / 4.0;
  const EdgeCharData d = shoot(q0, lam);
  CHECK(d.S1 == doctest::Approx(2.0 / kPi).epsilon(1e-12));
  CHECK(std::abs(d.dS1) < 1e-12);
  CHECK(std::abs(d.C1 - d.dS1) < 1e-12);
  CHECK(std::abs(d.wronskian_residual()) < 1e-12);
}

TEST_CASE("constant potential is an energy shift, hyperbolic branch included") {
  const auto qc = SymmetricPotential::constant(1.0);
  const EdgeCharData d = shoot(qc, -3.0);  // lambda - c = -4
  CHECK(d.S1 == doctest::Approx(std::sinh(2.0) / 2.0).epsilon(1e-12));
  CHECK(d.dS1 == doctest::Approx(std::cosh(2.0)).epsilon(1e-12));
}

TEST_CASE("constant given as dense samples goes through the integrator") {
  Eigen::VectorXd samples = Eigen::VectorXd::Constant(41, 0.7);
  const auto qs = SymmetricPotential::from_samples(samples);
  const EdgeCharData d = shoot(qs, 5.0);
  CHECK(d.S1 == doctest::Approx(sinc_sqrt(5.0 - 0.7)).epsilon(1e-10));
  CHECK(d.dS1 == doctest::Approx(cos_sqrt(5.0 - 0.7)).epsilon(1e-10));
}

TEST_CASE("asymmetric samples are rejected") {
  Eigen::VectorXd samples(3);
  samples << 0.0, 1.0, 0.5;
  CHECK_THROWS_AS(SymmetricPotential::from_samples(samples),
                  std::invalid_argument);
}

TEST_CASE("cosine potential endpoint data matches the half-step integrator") {
  Eigen::VectorXd c(1);
  c << 1.0;
  const auto q = SymmetricPotential::from_cosine(0.0, c);
  auto qf = [&](double z) { return q(z); };
  const EdgeCharData d = shoot(q, 10.0);
  const testing::EndpointData o = testing::rk4_endpoint(qf, 10.0, 4096);
  CHECK(d.S1 == doctest::Approx(o.S1).epsilon(1e-8));
  CHECK(d.dS1 == doctest::Approx(o.dS1).epsilon(1e-8));
  CHECK(d.C1 == doctest::Approx(o.C1).epsilon(1e-8));
  CHECK(d.dC1 == doctest::Approx(o.dC1).epsilon(1e-8));
}

TEST_CASE("shoot agrees with half-step integration on random potentials") {
  std::mt19937 rng(71);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  std::uniform_real_distribution<double> energy(0.5, 150.0);
  for (int trial = 0; trial < 5; ++trial) {
    const auto q = two_mode(coeff(rng), coeff(rng), coeff(rng));
    auto qf = [&](double z) { return q(z); };
    const double lam = energy(rng);
    const EdgeCharData d = shoot(q, lam);
    const testing::EndpointData o = testing::rk4_endpoint(qf, lam, 8192);
    CHECK(std::abs(d.S1 - o.S1) < 1e-8 * std::max(1.0, std::abs(o.S1)));
    CHECK(std::abs(d.dS1 - o.dS1) < 1e-8 * std::max(1.0, std::abs(o.dS1)));
  }
}

TEST_CASE("Wronskian and symmetry invariants on random (q, lambda)") {
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> coeff(-3.0, 3.0);
  std::uniform_real_distribution<double> energy(-5.0, 200.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd c(3);
    c << coeff(rng), coeff(rng), coeff(rng);
    const auto q = SymmetricPotential::from_cosine(coeff(rng), c);
    const EdgeCharData d = shoot(q, energy(rng));
    CHECK(std::abs(d.wronskian_residual()) < 1e-8);
    CHECK(std::abs(d.C1 - d.dS1) < 1e-8);
  }
}

TEST_CASE("char_psi values") {
  const auto q0 = SymmetricPotential::zero();
  CHECK(std::abs(char_psi(q0, kPi * kPi)) < 1e-9);
  CHECK(char_psi(q0, 1e-12) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(char_psi(SymmetricPotential::constant(2.0), 2.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dirichlet eigenvalues of the free edge and a shifted edge") {
  const auto eigs = dirichlet_eigenvalues(SymmetricPotential::zero(), 3);
  REQUIRE(eigs.size() == 3);
  CHECK(eigs[0] == doctest::Approx(kPi * kPi).epsilon(1e-10));
  CHECK(eigs[1] == doctest::Approx(4 * kPi * kPi).epsilon(1e-10));
  CHECK(eigs[2] == doctest::Approx(9 * kPi * kPi).epsilon(1e-10));

  const auto shifted = dirichlet_eigenvalues(SymmetricPotential::constant(1.5), 2);
  CHECK(shifted[0] == doctest::Approx(kPi * kPi + 1.5).epsilon(1e-10));
  CHECK(shifted[1] == doctest::Approx(4 * kPi * kPi + 1.5).epsilon(1e-10));
}

TEST_CASE("eigenvalues match the 2000-point Numerov discretization") {
  const auto q = two_mode(1.0, 0.5, 0.0);
  auto qf = [&](double z) { return q(z); };
  const auto eigs = dirichlet_eigenvalues(q, 5);
  const auto oracle =
      testing::numerov_dirichlet_eigs(qf, 5, -1.0, 49.0 * kPi * kPi);
  for (int i = 0; i < 5; ++i)
    CHECK(eigs[i] == doctest::Approx(oracle[i]).epsilon(1e-6));
}

TEST_CASE("eigenvalue asymptotics stay within the L2 bound") {
  const auto q = two_mode(1.0, 0.5, -0.3);
  const auto eigs = dirichlet_eigenvalues(q, 10);
  const double bound = q.l2_norm() + 1.0;
  for (int n = 3; n <= 10; ++n)
    CHECK(std::abs(eigs[n - 1] - n * n * kPi * kPi - 1.0) <= bound);
}

TEST_CASE("window-exhausted signal on a too-small scan window") {
  EigenvalueScanOptions opts;
  opts.window = {{0.0, 5.0}};  // pi^2 is outside
  CHECK_THROWS_AS(dirichlet_eigenvalues(SymmetricPotential::zero(), 1, opts),
                  NumericalError);
}

TEST_CASE("weyl function values and guards") {
  const auto q0 = SymmetricPotential::zero();
  CHECK(std::abs(weyl(q0, kPi * kPi / 4.0)) < 1e-12);
  CHECK(weyl(q0, 1.0) ==
        doctest::Approx(std::cos(1.0) / std::sin(1.0)).epsilon(1e-12));
  // shift identity for constants
  CHECK(weyl(SymmetricPotential::constant(2.5), 7.0) ==
        doctest::Approx(free_weyl(7.0 - 2.5)).epsilon(1e-12));
  CHECK_THROWS_AS(weyl(q0, kPi * kPi), NumericalError);
}

TEST_CASE("shooter matches the one-off path and caches across lambda") {
  const auto q = two_mode(0.3, -0.8, 0.2);
  const Shooter sh(q);
  for (double lam : {0.7, 13.0, 90.0}) {
    const EdgeCharData a = sh.at(lam);
    const EdgeCharData b = shoot(q, lam);
    CHECK(a.S1 == b.S1);
    CHECK(a.dC1 == b.dC1);
  }
}

TEST_CASE("integration failure on absurd energies") {
  CHECK_THROWS_AS(shoot(two_mode(0.0, 1.0, 0.0), 1e18), NumericalError);
}

TEST_CASE("eigenvalue tracking near previous estimates") {
  const auto q = two_mode(0.8, 0.4, -0.2);
  const Shooter sh(q);
  const auto exact = dirichlet_eigenvalues(sh, 4);
  std::vector<double> guesses;
  for (double e : exact) guesses.push_back(e + 0.1);
  const auto tracked = dirichlet_eigenvalues_near(sh, guesses);
  for (int i = 0; i < 4; ++i)
    CHECK(tracked[i] == doctest::Approx(exact[i]).epsilon(1e-9));
}

}  // TEST_SUITE
