#include "qcl/polar.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qcl/errors.hpp"

namespace qcl {
namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0) || epsilon > 1e-3) {
    throw ConfigError("node regularization epsilon must lie in (0, 1e-3]");
  }
}

double max_of(std::span<const double> xs) {
  double m = 0.0;
  for (double x : xs) m = std::max(m, x);
  return m;
}

}  // namespace

double PolarFields::node_fraction() const {
  if (node_mask.empty()) return 0.0;
  const auto masked = std::count(node_mask.begin(), node_mask.end(), true);
  return static_cast<double>(masked) / static_cast<double>(node_mask.size());
}

double PolarFields::interior_node_fraction() const {
  return qcl::interior_node_fraction(node_mask);
}

double interior_node_fraction(const std::vector<bool>& node_mask) {
  const std::size_t n = node_mask.size();
  if (n == 0) return 0.0;
  const auto masked = static_cast<std::size_t>(std::count(node_mask.begin(), node_mask.end(), true));
  if (masked == 0 || masked == n) return masked == n ? 1.0 : 0.0;
  // Longest cyclic run of masked points is the empty exterior of the support.
  std::size_t start = 0;
  while (node_mask[start]) ++start;  // an unmasked point exists
  std::size_t longest = 0;
  std::size_t run = 0;
  for (std::size_t step = 1; step <= n; ++step) {
    if (node_mask[(start + step) % n]) {
      ++run;
      longest = std::max(longest, run);
    } else {
      run = 0;
    }
  }
  return static_cast<double>(masked - longest) / static_cast<double>(n);
}

void quantum_potential(std::span<const double> amplitude, const PhysicalParams& params,
                       double epsilon, Spectral1d& spectral, std::span<double> out,
                       std::vector<bool>* mask) {
  const std::size_t n = amplitude.size();
  const double floor = epsilon * max_of(amplitude);
  spectral.laplacian_dealiased(amplitude, out);
  const double scale = -params.hbar * params.hbar / (2.0 * params.mass);
  if (mask) mask->assign(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    const bool floored = amplitude[j] < floor;
    if (mask && floored) (*mask)[j] = true;
    out[j] = scale * out[j] / (floored ? floor : amplitude[j]);
  }
}

std::vector<double> unwrap_phase(std::span<const cplx> values) {
  std::vector<double> phase(values.size());
  if (values.empty()) return phase;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double offset = 0.0;
  double prev = std::arg(values[0]);
  phase[0] = prev;
  for (std::size_t j = 1; j < values.size(); ++j) {
    const double raw = std::arg(values[j]);
    const double jump = raw - prev;
    if (jump > std::numbers::pi) offset -= two_pi;
    else if (jump < -std::numbers::pi) offset += two_pi;
    phase[j] = raw + offset;
    prev = raw;
  }
  return phase;
}

std::vector<double> velocity_field(const WaveState& psi, const PhysicalParams& params,
                                   double epsilon, Spectral1d& spectral) {
  const std::size_t n = psi.size();
  std::vector<cplx> dpsi(n);
  spectral.derivative(psi.values, dpsi);
  double max_amp = 0.0;
  for (const auto& v : psi.values) max_amp = std::max(max_amp, std::abs(v));
  const double floor = epsilon * max_amp;
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double amp = std::max(std::abs(psi.values[j]), floor);
    v[j] = params.hbar / params.mass * std::imag(dpsi[j] * std::conj(psi.values[j])) / (amp * amp);
  }
  return v;
}

PolarFields decompose(const WaveState& psi, const PhysicalParams& params, double epsilon,
                      Spectral1d& spectral) {
  check_epsilon(epsilon);
  params.validate();
  const std::size_t n = psi.size();
  PolarFields f;
  f.R.resize(n);
  for (std::size_t j = 0; j < n; ++j) f.R[j] = std::abs(psi.values[j]);
  if (max_of(f.R) == 0.0) throw DegenerateStateError("decompose: wave function vanishes identically");

  f.Q.resize(n);
  quantum_potential(f.R, params, epsilon, spectral, f.Q, &f.node_mask);
  f.S = unwrap_phase(psi.values);
  for (auto& s : f.S) s *= params.hbar;
  f.v = velocity_field(psi, params, epsilon, spectral);
  return f;
}

PolarFields decompose(const WaveState& psi, const PhysicalParams& params, double epsilon) {
  Spectral1d spectral(psi.grid);
  return decompose(psi, params, epsilon, spectral);
}

std::vector<double> probability_current(const WaveState& psi, const PhysicalParams& params,
                                        Spectral1d& spectral) {
  std::vector<cplx> dpsi(psi.size());
  spectral.derivative(psi.values, dpsi);
  std::vector<double> j(psi.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    j[i] = params.hbar / params.mass * std::imag(std::conj(psi.values[i]) * dpsi[i]);
  return j;
}

double continuity_residual(const WaveState& psi_t1, const WaveState& psi_t2,
                           const PhysicalParams& params, Spectral1d& spectral) {
  if (!(psi_t1.grid == psi_t2.grid) || psi_t1.size() != psi_t2.size()) {
    throw ShapeError("continuity_residual: states live on different grids");
  }
  const double dt = psi_t2.t - psi_t1.t;
  if (!(dt > 0.0)) throw ShapeError("continuity_residual: needs t2 > t1");

  const auto j1 = probability_current(psi_t1, params, spectral);
  const auto j2 = probability_current(psi_t2, params, spectral);
  const std::size_t n = psi_t1.size();
  std::vector<cplx> jbar(n);
  for (std::size_t i = 0; i < n; ++i) jbar[i] = 0.5 * (j1[i] + j2[i]);
  std::vector<cplx> div(n);
  spectral.derivative(jbar, div);

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double drho = (std::norm(psi_t2.values[i]) - std::norm(psi_t1.values[i])) / dt;
    const double r = drho + div[i].real();
    sum += r * r;
  }
  return std::sqrt(sum * psi_t1.grid.dx());
}

double continuity_residual(const WaveState& psi_t1, const WaveState& psi_t2,
                           const PhysicalParams& params) {
  Spectral1d spectral(psi_t1.grid);
  return continuity_residual(psi_t1, psi_t2, params, spectral);
}

}  // namespace qcl
