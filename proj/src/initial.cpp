#include "qcl/initial.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qcl/errors.hpp"

namespace qcl {

WaveState gaussian_packet(const SpatialGrid& grid, double x0, double sigma, double p0,
                          const PhysicalParams& params) {
  params.validate();
  if (!(sigma >= 4.0 * grid.dx())) {
    std::ostringstream msg;
    msg << "packet width sigma=" << sigma << " is under-resolved (needs >= 4 dx = "
        << 4.0 * grid.dx() << ")";
    throw ConfigError(msg.str());
  }
  if (x0 - 5.0 * sigma < grid.x_min() || x0 + 5.0 * sigma > grid.x_max()) {
    std::ostringstream msg;
    msg << "packet support x0 +- 5 sigma = [" << x0 - 5.0 * sigma << ", " << x0 + 5.0 * sigma
        << "] leaves the domain";
    throw ConfigError(msg.str());
  }
  WaveState psi{grid, std::vector<cplx>(grid.size()), 0.0};
  const double k0 = p0 / params.hbar;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double d = grid.x(j) - x0;
    psi.values[j] = std::polar(std::exp(-d * d / (4.0 * sigma * sigma)), k0 * grid.x(j));
  }
  normalize(psi);
  return psi;
}

WaveState harmonic_ground_state(const SpatialGrid& grid, double omega, double center,
                                const PhysicalParams& params) {
  if (!(omega > 0.0)) throw ConfigError("ground state needs omega > 0");
  const double sigma = std::sqrt(params.hbar / (2.0 * params.mass * omega));
  return gaussian_packet(grid, center, sigma, 0.0, params);
}

WaveState plane_wave(const SpatialGrid& grid, int mode) {
  if (std::abs(mode) >= static_cast<int>(grid.size() / 2)) {
    throw ConfigError("plane-wave mode " + std::to_string(mode) + " is beyond the Nyquist limit");
  }
  const double k = 2.0 * std::numbers::pi * mode / grid.length();
  const double amp = 1.0 / std::sqrt(grid.length());
  WaveState psi{grid, std::vector<cplx>(grid.size()), 0.0};
  for (std::size_t j = 0; j < grid.size(); ++j) psi.values[j] = std::polar(amp, k * grid.x(j));
  return psi;
}

WaveState superpose(cplx a, const WaveState& psi1, cplx b, const WaveState& psi2) {
  if (!(psi1.grid == psi2.grid) || psi1.values.size() != psi2.values.size()) {
    throw ShapeError("superpose: states live on different grids");
  }
  if (psi1.t != psi2.t) throw ShapeError("superpose: states have different time stamps");
  WaveState out{psi1.grid, std::vector<cplx>(psi1.size()), psi1.t};
  for (std::size_t j = 0; j < out.size(); ++j) out.values[j] = a * psi1.values[j] + b * psi2.values[j];
  if (out.norm() < kDegenerateNorm) {
    throw DegenerateStateError("superposition cancels to a zero state");
  }
  normalize(out);
  return out;
}

TwoParticleState product_state(const WaveState& psi1, const WaveState& psi2) {
  if (psi1.t != psi2.t) throw ShapeError("product_state: time stamps differ");
  TwoParticleState out{psi1.grid, psi2.grid, std::vector<cplx>(psi1.size() * psi2.size()), psi1.t};
  for (std::size_t i = 0; i < psi1.size(); ++i)
    for (std::size_t j = 0; j < psi2.size(); ++j) out.at(i, j) = psi1.values[i] * psi2.values[j];
  return out;
}

}  // namespace qcl
