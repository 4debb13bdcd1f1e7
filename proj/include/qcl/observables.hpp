#pragma once

#include <optional>
#include <span>

#include "qcl/potential.hpp"
#include "qcl/spectral.hpp"
#include "qcl/state.hpp"
#include "qcl/units.hpp"

namespace qcl {

struct Observables {
  double norm = 0.0;
  double mean_x = 0.0;
  double mean_p = 0.0;
  double sigma_x = 0.0;
  double energy = 0.0;  // kinetic + integral of rho V
};

/// Position moments by quadrature on rho; momentum and kinetic energy by
/// spectral quadrature.
Observables observables(const WaveState& psi, const PhysicalParams& params,
                        std::span<const double> potential_values, Spectral1d& spectral);
Observables observables(const WaveState& psi, const PhysicalParams& params,
                        const PotentialSpec& potential);

/// Probability within `edge_fraction` of the domain length from either edge.
double boundary_leakage(const WaveState& psi, double edge_fraction = 0.05);

/// (rho_max - rho_min) / (rho_max + rho_min) over the local extrema of rho
/// inside [a, b], found by 3-point comparison. Empty when the window holds
/// fewer than two interior minima.
std::optional<double> fringe_visibility(const WaveState& psi, double a, double b);

/// max_j | |psi_j|^2 - |phi_j|^2 |
double density_linf_difference(const WaveState& psi, const WaveState& phi);

}  // namespace qcl
