#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "qcl/errors.hpp"
#include "qcl/initial.hpp"
#include "qcl/observables.hpp"
#include "qcl/propagator.hpp"

using namespace qcl;

TEST_CASE("gaussian moments") {
  const auto g = make_grid(-20.0, 20.0, 1024);
  const auto o = observables(gaussian_packet(g, 3.0, 1.0, 0.0), PhysicalParams{}, FreePotential{});
  CHECK(o.norm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(o.mean_x == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(o.sigma_x == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(o.mean_p) < 1e-6);
}

TEST_CASE("kinetic energy of a moving gaussian is (p0^2 + hbar^2 / 4 sigma^2) / 2m") {
  const auto g = make_grid(-20.0, 20.0, 1024);
  const PhysicalParams p{1.0, 2.0, 1.0};
  const auto o = observables(gaussian_packet(g, 0.0, 0.8, 1.5, p), p, FreePotential{});
  CHECK(o.mean_p == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(o.energy == doctest::Approx((1.5 * 1.5 + 1.0 / (4.0 * 0.64)) / 4.0).epsilon(1e-10));
}

TEST_CASE("plane wave momentum is hbar k") {
  const auto g = make_grid(0.0, 10.0, 64);
  const PhysicalParams p{0.3, 1.0, 1.0};
  const auto o = observables(plane_wave(g, 5), p, FreePotential{});
  CHECK(o.mean_p == doctest::Approx(0.3 * 2.0 * std::numbers::pi * 5.0 / 10.0).epsilon(1e-12));
}

TEST_CASE("harmonic ground state energy is hbar omega / 2") {
  const auto g = make_grid(-10.0, 10.0, 256);
  const auto o = observables(harmonic_ground_state(g, 1.0), PhysicalParams{}, HarmonicPotential{1.0, 0.0});
  CHECK(o.energy == doctest::Approx(0.5).epsilon(1e-6));
  const auto o2 = observables(harmonic_ground_state(g, 2.5), PhysicalParams{}, HarmonicPotential{2.5, 0.0});
  CHECK(o2.energy == doctest::Approx(1.25).epsilon(1e-6));
}

TEST_CASE("boundary leakage counts the edge bands") {
  const auto g = make_grid(0.0, 16.0, 16);
  // x = 0..3 and x = 13..15 lie within 4 of an edge.
  CHECK(boundary_leakage(plane_wave(g, 0), 0.25) == doctest::Approx(7.0 / 16.0));
  const auto wide = make_grid(-20.0, 20.0, 1024);
  CHECK(boundary_leakage(gaussian_packet(wide, 0.0, 1.0, 0.0)) < 1e-30);
}

TEST_CASE("single gaussian has no fringes") {
  const auto g = make_grid(-20.0, 20.0, 1024);
  CHECK_FALSE(fringe_visibility(gaussian_packet(g, 0.0, 1.0, 0.0), -3.0, 3.0).has_value());
  CHECK_THROWS_AS(fringe_visibility(gaussian_packet(g, 0.0, 1.0, 0.0), 3.0, -3.0), DomainError);
  CHECK_THROWS_AS(fringe_visibility(gaussian_packet(g, 0.0, 1.0, 0.0), -30.0, 3.0), DomainError);
}

TEST_CASE("overlapping free packets interfere with near-unit visibility") {
  const auto g = make_grid(-20.0, 20.0, 1024);
  const auto psi0 = superpose(1.0, gaussian_packet(g, -5.0, 1.0, 2.0), 1.0, gaussian_packet(g, 5.0, 1.0, -2.0));
  EvolutionConfig cfg;
  cfg.dt = 2.5e-3;
  cfg.n_steps = 1000;
  cfg.record_every = 1000;
  const auto rec = evolve(psi0, cfg);
  const auto vis = fringe_visibility(rec.final_state, -3.0, 3.0);
  REQUIRE(vis.has_value());

  std::vector<double> x(g.size()), rho(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    x[j] = g.x(j);
    rho[j] = std::norm(oracle::free_gaussian(x[j], 2.5, -5.0, 1.0, 2.0) + oracle::free_gaussian(x[j], 2.5, 5.0, 1.0, -2.0));
  }
  const double ref = oracle::visibility(x, rho, -3.0, 3.0);
  CHECK(*vis > 0.9);
  CHECK(*vis == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("density difference is the sup norm") {
  const auto g = make_grid(-20.0, 20.0, 256);
  const auto a = gaussian_packet(g, 0.0, 1.0, 0.0);
  auto b = a;
  b.values[128] *= 2.0;
  CHECK(density_linf_difference(a, b) == doctest::Approx(3.0 * std::norm(a.values[128])));
  CHECK_THROWS_AS(density_linf_difference(a, gaussian_packet(make_grid(-20.0, 20.0, 512), 0.0, 1.0, 0.0)), ShapeError);
}
