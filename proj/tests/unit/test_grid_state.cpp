#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "qcl/errors.hpp"
#include "qcl/grid.hpp"
#include "qcl/initial.hpp"
#include "qcl/state.hpp"
#include "qcl/units.hpp"

using namespace qcl;

TEST_CASE("grid rejects sizes that are not powers of two or too small") {
  CHECK_THROWS_AS(make_grid(-1.0, 1.0, 100), ConfigError);
  CHECK_THROWS_AS(make_grid(-1.0, 1.0, 8), ConfigError);
  CHECK_THROWS_AS(make_grid(1.0, 1.0, 64), ConfigError);
  CHECK_THROWS_AS(make_grid(2.0, -1.0, 64), ConfigError);
  CHECK_NOTHROW(make_grid(-1.0, 1.0, 16));
}

TEST_CASE("grid coordinates, spacing and periodic wrap") {
  const auto g = make_grid(-20.0, 20.0, 1024);
  CHECK(g.dx() == doctest::Approx(40.0 / 1024));
  CHECK(g.x(0) == -20.0);
  CHECK(g.x(1023) == doctest::Approx(20.0 - 40.0 / 1024));
  CHECK(g.wrap(20.0) == doctest::Approx(-20.0));
  CHECK(g.wrap(21.0) == doctest::Approx(-19.0));
  CHECK(g.wrap(-20.5) == doctest::Approx(19.5));
  CHECK(g.contains(-20.0));
  CHECK_FALSE(g.contains(20.0));
  CHECK(g.index_of(g.x(17)) == 17);
}

TEST_CASE("wavenumbers are in FFT order with the Nyquist mode at n/2") {
  const auto g = make_grid(0.0, 2.0 * std::numbers::pi, 16);
  const auto k = g.wavenumbers();
  REQUIRE(k.size() == 16);
  CHECK(k[0] == 0.0);
  CHECK(k[1] == doctest::Approx(1.0));
  CHECK(k[7] == doctest::Approx(7.0));
  CHECK(std::abs(k[8]) == doctest::Approx(8.0));
  CHECK(k[15] == doctest::Approx(-1.0));
  CHECK(g.nyquist() == doctest::Approx(8.0));
}

TEST_CASE("gaussian packet has the requested moments") {
  const auto g = make_grid(-20.0, 20.0, 1024);
  const auto psi = gaussian_packet(g, 3.0, 1.0, 0.0);
  const auto rho = psi.density();
  double m0 = 0, m1 = 0, m2 = 0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    m0 += rho[j] * g.dx();
    m1 += rho[j] * g.x(j) * g.dx();
    m2 += rho[j] * g.x(j) * g.x(j) * g.dx();
  }
  CHECK(m0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m1 == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(std::sqrt(m2 - m1 * m1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("gaussian packet matches the closed form at t = 0") {
  const auto g = make_grid(-20.0, 20.0, 512);
  const auto psi = gaussian_packet(g, -2.0, 1.5, 0.7);
  double err = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    err = std::max(err, std::abs(psi.values[j] - oracle::free_gaussian(g.x(j), 0.0, -2.0, 1.5, 0.7)));
  }
  CHECK(err < 1e-12);
}

TEST_CASE("gaussian packet guards resolution and containment") {
  const auto g = make_grid(-10.0, 10.0, 64);
  CHECK_THROWS_AS(gaussian_packet(g, 0.0, 0.1, 0.0), ConfigError);
  CHECK_THROWS_AS(gaussian_packet(g, 8.0, 1.0, 0.0), ConfigError);
}

TEST_CASE("harmonic ground state width is sqrt(hbar / 2 m omega)") {
  const auto g = make_grid(-10.0, 10.0, 256);
  const auto psi = harmonic_ground_state(g, 2.0);
  const auto rho = psi.density();
  double m2 = 0;
  for (std::size_t j = 0; j < g.size(); ++j) m2 += rho[j] * g.x(j) * g.x(j) * g.dx();
  CHECK(std::sqrt(m2) == doctest::Approx(std::sqrt(1.0 / 4.0)).epsilon(1e-10));
}

TEST_CASE("plane wave is normalized and rejects modes beyond Nyquist") {
  const auto g = make_grid(0.0, 8.0, 32);
  CHECK(plane_wave(g, 3).norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(plane_wave(g, 17), ConfigError);
}

TEST_CASE("superposition checks shapes and cancellation") {
  const auto g1 = make_grid(-10.0, 10.0, 256);
  const auto g2 = make_grid(-10.0, 10.0, 128);
  const auto a = gaussian_packet(g1, -2.0, 1.0, 0.0);
  const auto b = gaussian_packet(g2, 2.0, 1.0, 0.0);
  CHECK_THROWS_AS(superpose(1.0, a, 1.0, b), ShapeError);
  CHECK_THROWS_AS(superpose(1.0, a, -1.0, a), DegenerateStateError);
  auto c = gaussian_packet(g1, 2.0, 1.0, 0.0);
  c.t = 1.0;
  CHECK_THROWS_AS(superpose(1.0, a, 1.0, c), ShapeError);
  c.t = 0.0;
  CHECK(superpose(1.0, a, cplx{0.0, 1.0}, c).norm() == doctest::Approx(1.0));
}

TEST_CASE("normalize rejects the zero state") {
  auto psi = plane_wave(make_grid(0.0, 1.0, 16), 0);
  for (auto& v : psi.values) v = 0.0;
  CHECK_THROWS_AS(normalize(psi), DegenerateStateError);
}

TEST_CASE("product state factorizes and is normalized") {
  const auto g = make_grid(-6.0, 6.0, 128);
  const auto a = harmonic_ground_state(g, 1.0);
  const auto b = gaussian_packet(g, 0.5, 0.8, 0.0);
  const auto p = product_state(a, b);
  CHECK(p.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(p.at(10, 20) - a.values[10] * b.values[20]) < 1e-15);
}

TEST_CASE("physical parameters validate positivity") {
  CHECK_NOTHROW(PhysicalParams::natural().validate());
  CHECK_THROWS_AS((PhysicalParams{-1.0, 1.0, 1.0}.validate()), ConfigError);
  const auto si = PhysicalParams::si_units(1e-3);
  CHECK(si.hbar == doctest::Approx(oracle::codata::hbar));
  CHECK(si.boltzmann == doctest::Approx(oracle::codata::k_b));
}

TEST_CASE("natural units map time and energy consistently") {
  const NaturalUnits u(si::electron_mass, 1e-9);
  const double t = si::electron_mass * 1e-18 / si::hbar;
  CHECK(u.time_s() == doctest::Approx(t));
  CHECK(u.energy_j() * u.time_s() == doctest::Approx(si::hbar));
  CHECK(u.from_si_time(u.to_si_time(2.5)) == doctest::Approx(2.5));
  CHECK(u.from_si_temperature(u.temperature_k()) == doctest::Approx(1.0));
}
