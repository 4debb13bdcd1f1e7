#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "qcl/grid.hpp"

namespace qcl {

using cplx = std::complex<double>;

/// Resolution diagnostics attached to a state by the propagators.
struct StepDiagnostics {
  double node_fraction = 0.0;    // interior regularized points / n
  double spectral_tail = 0.0;    // |psi_k|^2 share above the dealiasing cutoff
  bool caustic = false;

  bool operator==(const StepDiagnostics&) const = default;
};

struct WaveState {
  SpatialGrid grid;
  std::vector<cplx> values;
  double t = 0.0;
  StepDiagnostics diagnostics{};

  std::size_t size() const { return values.size(); }
  double norm() const;  // sum |psi_j|^2 dx
  std::vector<double> density() const;
};

/// Two particles on a tensor grid; values are row-major with x1 as the slow index.
struct TwoParticleState {
  SpatialGrid grid1;
  SpatialGrid grid2;
  std::vector<cplx> values;
  double t = 0.0;
  StepDiagnostics diagnostics{};

  std::size_t n1() const { return grid1.size(); }
  std::size_t n2() const { return grid2.size(); }
  cplx& at(std::size_t i, std::size_t j) { return values[i * grid2.size() + j]; }
  const cplx& at(std::size_t i, std::size_t j) const { return values[i * grid2.size() + j]; }
  double cell() const { return grid1.dx() * grid2.dx(); }
  double norm() const;
  std::vector<double> density() const;
};

/// Rescales in place so that sum |psi|^2 dx = 1. Throws DegenerateStateError on a zero state.
void normalize(WaveState& psi);
void normalize(TwoParticleState& psi);

}  // namespace qcl
