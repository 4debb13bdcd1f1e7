#pragma once

#include <cstddef>
#include <vector>

#include "qcl/spectral.hpp"
#include "qcl/state.hpp"
#include "qcl/units.hpp"

namespace qcl {

inline constexpr double kDefaultNodeEpsilon = 1e-8;

/// Madelung fields of psi = R exp(i S / hbar).
///
/// Denominators R and |psi| are floored at epsilon * max R; points where the
/// floor is active are flagged in node_mask. Q uses the dealiased spectral
/// Laplacian of R. S is unwrapped left to right and is defined up to one
/// additive constant.
struct PolarFields {
  std::vector<double> R;
  std::vector<double> S;
  std::vector<double> Q;
  std::vector<double> v;
  std::vector<bool> node_mask;

  std::size_t size() const { return R.size(); }
  /// Share of grid points that are regularized.
  double node_fraction() const;
  /// Share of grid points that are regularized yet lie between the first and
  /// last unregularized point, i.e. nodes inside the support rather than the
  /// empty tails of the domain.
  double interior_node_fraction() const;
};

/// PolarFields::interior_node_fraction() for a bare mask.
double interior_node_fraction(const std::vector<bool>& mask);

PolarFields decompose(const WaveState& psi, const PhysicalParams& params,
                      double epsilon = kDefaultNodeEpsilon);
PolarFields decompose(const WaveState& psi, const PhysicalParams& params, double epsilon,
                      Spectral1d& spectral);

/// Q = -(hbar^2 / 2m) R'' / max(R, epsilon max R). Marks floored points in `mask` if given.
void quantum_potential(std::span<const double> amplitude, const PhysicalParams& params,
                       double epsilon, Spectral1d& spectral, std::span<double> out,
                       std::vector<bool>* mask = nullptr);

/// v = (hbar/m) Im(psi'/psi) with |psi| floored at epsilon max |psi|.
std::vector<double> velocity_field(const WaveState& psi, const PhysicalParams& params,
                                   double epsilon, Spectral1d& spectral);

/// j = (hbar/m) Im(psi* psi')
std::vector<double> probability_current(const WaveState& psi, const PhysicalParams& params,
                                        Spectral1d& spectral);

/// L2 norm of (rho2 - rho1)/(t2 - t1) + d/dx of the midpoint current.
double continuity_residual(const WaveState& psi_t1, const WaveState& psi_t2,
                           const PhysicalParams& params);
double continuity_residual(const WaveState& psi_t1, const WaveState& psi_t2,
                           const PhysicalParams& params, Spectral1d& spectral);

/// arg(values) with +-2 pi corrections wherever consecutive samples jump by more than pi.
std::vector<double> unwrap_phase(std::span<const cplx> values);

}  // namespace qcl
