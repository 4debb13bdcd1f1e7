#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qcl/grid.hpp"
#include "qcl/state.hpp"
#include "qcl/units.hpp"

namespace qcl {

inline constexpr std::size_t kMaxDensityMatrixAxis = 256;

/// rho(x_j, x_k) stored row-major.
struct DensityMatrixState {
  SpatialGrid grid;
  std::vector<cplx> rho;
  double t = 0.0;
  std::vector<std::string> warnings;

  std::size_t n() const { return grid.size(); }
  cplx& at(std::size_t j, std::size_t k) { return rho[j * grid.size() + k]; }
  const cplx& at(std::size_t j, std::size_t k) const { return rho[j * grid.size() + k]; }
  cplx trace() const;  // sum rho(x_j, x_j) dx
  double hermiticity_error() const;  // max |rho_jk - conj(rho_kj)|
  std::vector<double> abs_values() const;
};

/// High-temperature master equation
///   d rho/dt = -gamma (x - x')(d_x - d_x') rho - D (x - x')^2 rho,
///   D = 2 m gamma k_B T / hbar^2.
struct MasterParams {
  double gamma = 1.0;
  double temperature = 0.5;
  PhysicalParams constants{};

  double decoherence_coefficient() const;
  double thermal_wavelength() const;
  void validate() const;
};

/// rho = psi psi*. Throws ResourceError beyond kMaxDensityMatrixAxis points.
DensityMatrixState from_pure(const WaveState& psi);

/// The decoherence term is applied exactly, elementwise. The drift term, if
/// requested, is one explicit upwind step along the x - x' direction.
DensityMatrixState master_step(const DensityMatrixState& rho, const MasterParams& params,
                               double dt, bool include_drift);

/// Mean |rho| over elements with ||x_j - x_k| - separation| <= half_width.
double mean_coherence(const DensityMatrixState& rho, double separation, double half_width);

struct CoherenceBin {
  double separation = 0.0;
  double tau = 0.0;  // 1/e time, NaN when unresolved
  bool resolved = false;
};

struct CoherenceFit {
  std::vector<CoherenceBin> bins;
  double exponent = 0.0;     // slope of log tau against log separation
  double coefficient = 0.0;  // C in tau = C / separation^2, least squares in log space
  std::size_t resolved = 0;
};

/// 1/e times of the mean coherence per separation bin, interpolated
/// log-linearly between snapshots, plus a power-law fit over resolved bins.
/// half_width <= 0 selects dx/2.
CoherenceFit coherence_halftime(std::span<const DensityMatrixState> history,
                                std::span<const double> separations, double half_width = 0.0);

}  // namespace qcl
