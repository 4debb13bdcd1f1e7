#include "qcl/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qcl/errors.hpp"

namespace qcl {

Observables observables(const WaveState& psi, const PhysicalParams& params,
                        std::span<const double> potential_values, Spectral1d& spectral) {
  const double dx = psi.grid.dx();
  Observables o;
  double m0 = 0.0, m1 = 0.0, pot = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    const double rho = std::norm(psi.values[j]);
    m0 += rho;
    m1 += rho * psi.grid.x(j);
    pot += rho * potential_values[j];
  }
  o.norm = m0 * dx;
  o.mean_x = m1 / m0;
  double var = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    const double d = psi.grid.x(j) - o.mean_x;
    var += std::norm(psi.values[j]) * d * d;
  }
  o.sigma_x = std::sqrt(var / m0);
  const auto k = spectral.wavenumber_moments(psi.values);
  o.mean_p = params.hbar * k.mean_k;
  const double kinetic = params.hbar * params.hbar * k.mean_k2 / (2.0 * params.mass);
  o.energy = kinetic + pot / m0;
  return o;
}

Observables observables(const WaveState& psi, const PhysicalParams& params,
                        const PotentialSpec& potential) {
  Spectral1d spectral(psi.grid);
  const auto v = evaluate(potential, psi.grid, params);
  return observables(psi, params, v, spectral);
}

double boundary_leakage(const WaveState& psi, double edge_fraction) {
  const double band = edge_fraction * psi.grid.length();
  double mass = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    const double x = psi.grid.x(j);
    if (x - psi.grid.x_min() < band || psi.grid.x_max() - x < band) mass += std::norm(psi.values[j]);
  }
  return mass * psi.grid.dx();
}

std::optional<double> fringe_visibility(const WaveState& psi, double a, double b) {
  if (!(b > a) || a < psi.grid.x_min() || b > psi.grid.x_max()) {
    throw DomainError("fringe_visibility: window must be a non-empty interval inside the domain");
  }
  const auto rho = psi.density();
  const std::size_t n = rho.size();
  double rho_max = -std::numeric_limits<double>::infinity();
  double rho_min = std::numeric_limits<double>::infinity();
  std::size_t minima = 0;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double x = psi.grid.x(j);
    if (x < a || x > b) continue;
    const double l = rho[j - 1], c = rho[j], r = rho[j + 1];
    if (c > l && c > r) rho_max = std::max(rho_max, c);
    if (c < l && c < r) {
      rho_min = std::min(rho_min, c);
      ++minima;
    }
  }
  if (minima < 2 || !std::isfinite(rho_max)) return std::nullopt;
  return (rho_max - rho_min) / (rho_max + rho_min);
}

double density_linf_difference(const WaveState& psi, const WaveState& phi) {
  if (psi.size() != phi.size()) throw ShapeError("density_linf_difference: size mismatch");
  double m = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j)
    m = std::max(m, std::abs(std::norm(psi.values[j]) - std::norm(phi.values[j])));
  return m;
}

}  // namespace qcl
