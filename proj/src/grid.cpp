#include "qcl/grid.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qcl/errors.hpp"
#include "qcl/state.hpp"
#include "qcl/units.hpp"

namespace qcl {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::DegenerateState: return "degenerate-state";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::NumericalBlowup: return "numerical-blowup";
    case ErrorKind::Resource: return "resource";
    case ErrorKind::Schema: return "schema";
  }
  return "unknown";
}

SpatialGrid make_grid(double x_min, double x_max, std::size_t n_points) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min)) {
    std::ostringstream msg;
    msg << "grid bounds must satisfy x_max > x_min (got " << x_min << ", " << x_max << ")";
    throw ConfigError(msg.str());
  }
  if (n_points < kMinGridPoints || !std::has_single_bit(n_points)) {
    throw ConfigError("grid size must be a power of two >= 16 (got " +
                      std::to_string(n_points) + ")");
  }
  return SpatialGrid(x_min, x_max, n_points);
}

std::size_t SpatialGrid::index_of(double x) const {
  const auto n = static_cast<long long>(n_);
  auto j = static_cast<long long>(std::llround((x - x_min_) / dx()));
  j %= n;
  if (j < 0) j += n;
  return static_cast<std::size_t>(j);
}

double SpatialGrid::wrap(double x) const {
  const double L = length();
  double y = std::fmod(x - x_min_, L);
  if (y < 0.0) y += L;
  if (y >= L) y -= L;
  return x_min_ + y;
}

std::vector<double> SpatialGrid::coordinates() const {
  std::vector<double> xs(n_);
  for (std::size_t j = 0; j < n_; ++j) xs[j] = x(j);
  return xs;
}

std::vector<double> SpatialGrid::wavenumbers() const {
  std::vector<double> k(n_);
  const double base = 2.0 * std::numbers::pi / length();
  const auto half = static_cast<long long>(n_ / 2);
  for (std::size_t j = 0; j < n_; ++j) {
    auto m = static_cast<long long>(j);
    if (m >= half) m -= static_cast<long long>(n_);
    k[j] = base * static_cast<double>(m);
  }
  return k;
}

double SpatialGrid::nyquist() const { return std::numbers::pi / dx(); }

double WaveState::norm() const {
  double s = 0.0;
  for (const auto& v : values) s += std::norm(v);
  return s * grid.dx();
}

std::vector<double> WaveState::density() const {
  std::vector<double> rho(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) rho[j] = std::norm(values[j]);
  return rho;
}

double TwoParticleState::norm() const {
  double s = 0.0;
  for (const auto& v : values) s += std::norm(v);
  return s * cell();
}

std::vector<double> TwoParticleState::density() const {
  std::vector<double> rho(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) rho[j] = std::norm(values[j]);
  return rho;
}

namespace {
template <class State>
void normalize_impl(State& psi) {
  const double nrm = psi.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) {
    throw DegenerateStateError("cannot normalize a state with norm " + std::to_string(nrm));
  }
  const double scale = 1.0 / std::sqrt(nrm);
  for (auto& v : psi.values) v *= scale;
}
}  // namespace

void normalize(WaveState& psi) { normalize_impl(psi); }
void normalize(TwoParticleState& psi) { normalize_impl(psi); }

void PhysicalParams::validate() const {
  if (!(hbar > 0.0) || !(mass > 0.0) || !(boltzmann > 0.0)) {
    throw ConfigError("hbar, mass and boltzmann must all be positive");
  }
}

NaturalUnits::NaturalUnits(double mass_kg, double length_m) : mass_kg_(mass_kg), length_m_(length_m) {
  if (!(mass_kg > 0.0) || !(length_m > 0.0)) {
    throw ConfigError("unit scales must be positive");
  }
}

}  // namespace qcl
