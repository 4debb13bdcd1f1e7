#pragma once

#include <cstddef>

#include "qcl/grid.hpp"
#include "qcl/state.hpp"
#include "qcl/units.hpp"

namespace qcl {

/// Normalized psi ~ exp(-(x-x0)^2 / 4 sigma^2) exp(i p0 x / hbar), so that
/// <x> = x0 and the position spread is sigma. Requires sigma >= 4 dx and
/// x0 +- 5 sigma inside the domain.
WaveState gaussian_packet(const SpatialGrid& grid, double x0, double sigma, double p0,
                          const PhysicalParams& params = {});

/// Ground state of V = m omega^2 (x - center)^2 / 2.
WaveState harmonic_ground_state(const SpatialGrid& grid, double omega, double center = 0.0,
                                const PhysicalParams& params = {});

/// exp(i k x) / sqrt(L) with k = 2 pi mode / L.
WaveState plane_wave(const SpatialGrid& grid, int mode);

/// Normalized a*psi1 + b*psi2. Grids and times must match.
WaveState superpose(cplx a, const WaveState& psi1, cplx b, const WaveState& psi2);

/// Psi(x1, x2) = psi1(x1) psi2(x2).
TwoParticleState product_state(const WaveState& psi1, const WaveState& psi2);

inline constexpr double kDegenerateNorm = 1e-12;

}  // namespace qcl
