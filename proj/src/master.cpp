#include "qcl/master.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qcl/errors.hpp"

namespace qcl {

cplx DensityMatrixState::trace() const {
  cplx sum = 0.0;
  for (std::size_t j = 0; j < n(); ++j) sum += at(j, j);
  return sum * grid.dx();
}

double DensityMatrixState::hermiticity_error() const {
  double err = 0.0;
  for (std::size_t j = 0; j < n(); ++j)
    for (std::size_t k = j; k < n(); ++k) err = std::max(err, std::abs(at(j, k) - std::conj(at(k, j))));
  return err;
}

std::vector<double> DensityMatrixState::abs_values() const {
  std::vector<double> out(rho.size());
  std::transform(rho.begin(), rho.end(), out.begin(), [](const cplx& c) { return std::abs(c); });
  return out;
}

double MasterParams::decoherence_coefficient() const {
  return 2.0 * constants.mass * gamma * constants.boltzmann * temperature /
         (constants.hbar * constants.hbar);
}

double MasterParams::thermal_wavelength() const {
  return constants.hbar / std::sqrt(2.0 * constants.mass * constants.boltzmann * temperature);
}

void MasterParams::validate() const {
  constants.validate();
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be positive");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DomainError("temperature must be positive");
  }
}

DensityMatrixState from_pure(const WaveState& psi) {
  const std::size_t n = psi.grid.size();
  if (n > kMaxDensityMatrixAxis) {
    throw ResourceError("density matrices are limited to 256 grid points per axis");
  }
  DensityMatrixState out{psi.grid, std::vector<cplx>(n * n), psi.t, {}};
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) out.at(j, k) = psi.values[j] * std::conj(psi.values[k]);
  return out;
}

namespace {

void add_warning(std::vector<std::string>& warnings, const std::string& text) {
  if (std::find(warnings.begin(), warnings.end(), text) == warnings.end()) warnings.push_back(text);
}

}  // namespace

DensityMatrixState master_step(const DensityMatrixState& rho, const MasterParams& params,
                               double dt, bool include_drift) {
  params.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("master_step: dt must be positive");
  const std::size_t n = rho.n();
  if (rho.rho.size() != n * n) throw ShapeError("master_step: rho is not n x n");
  const double dx = rho.grid.dx();
  const double d = params.decoherence_coefficient();
  const double span = static_cast<double>(n - 1) * dx;

  DensityMatrixState out = rho;
  if (d * span * span * dt > 1.0) {
    add_warning(out.warnings, "decoherence factor per step exceeds e^-1 at the widest separation");
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double xj = rho.grid.x(j);
    for (std::size_t k = 0; k < n; ++k) {
      const double u = xj - rho.grid.x(k);
      out.at(j, k) *= std::exp(-d * u * u * dt);
    }
  }

  if (include_drift) {
    if (2.0 * params.gamma * span * dt / dx > 1.0) {
      add_warning(out.warnings, "drift step violates the upwind CFL bound");
    }
    const DensityMatrixState src = out;
    for (std::size_t j = 0; j < n; ++j) {
      const double xj = rho.grid.x(j);
      for (std::size_t k = 0; k < n; ++k) {
        const double u = xj - rho.grid.x(k);
        if (u == 0.0) continue;
        const cplx c = src.at(j, k);
        cplx grad;
        if (u > 0.0) {
          const cplx left = j > 0 ? src.at(j - 1, k) : c;
          const cplx right = k + 1 < n ? src.at(j, k + 1) : c;
          grad = (c - left) / dx - (right - c) / dx;
        } else {
          const cplx right = j + 1 < n ? src.at(j + 1, k) : c;
          const cplx left = k > 0 ? src.at(j, k - 1) : c;
          grad = (right - c) / dx - (c - left) / dx;
        }
        out.at(j, k) = c - dt * params.gamma * u * grad;
      }
    }
  }

  for (const auto& c : out.rho) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
      throw NumericalBlowupError(0, "non-finite density matrix element");
    }
  }
  out.t = rho.t + dt;
  return out;
}

double mean_coherence(const DensityMatrixState& rho, double separation, double half_width) {
  const std::size_t n = rho.n();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      const double u = std::abs(rho.grid.x(j) - rho.grid.x(k));
      if (std::abs(u - separation) <= half_width) {
        sum += std::abs(rho.at(j, k));
        ++count;
      }
    }
  }
  if (count == 0) throw DomainError("mean_coherence: no matrix elements at this separation");
  return sum / static_cast<double>(count);
}

CoherenceFit coherence_halftime(std::span<const DensityMatrixState> history,
                                std::span<const double> separations, double half_width) {
  if (history.size() < 3) throw ShapeError("coherence_halftime: need at least 3 snapshots");
  const double hw = half_width > 0.0 ? half_width : 0.5 * history.front().grid.dx();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CoherenceFit fit;
  for (const double sep : separations) {
    CoherenceBin bin{sep, nan, false};
    const double c0 = mean_coherence(history.front(), sep, hw);
    if (c0 > 0.0) {
      const double target = std::log(c0) - 1.0;
      double prev_t = history.front().t;
      double prev_l = std::log(c0);
      for (std::size_t i = 1; i < history.size(); ++i) {
        const double c = mean_coherence(history[i], sep, hw);
        const double l = c > 0.0 ? std::log(c) : -std::numeric_limits<double>::infinity();
        if (l <= target) {
          bin.tau = std::isfinite(l)
                        ? prev_t + (target - prev_l) / (l - prev_l) * (history[i].t - prev_t)
                        : history[i].t;
          bin.tau -= history.front().t;
          bin.resolved = true;
          break;
        }
        prev_t = history[i].t;
        prev_l = l;
      }
    }
    fit.bins.push_back(bin);
  }

  std::vector<double> lx, ly;
  for (const auto& b : fit.bins) {
    if (b.resolved && b.separation > 0.0 && b.tau > 0.0) {
      lx.push_back(std::log(b.separation));
      ly.push_back(std::log(b.tau));
    }
  }
  fit.resolved = lx.size();
  fit.exponent = nan;
  fit.coefficient = nan;
  if (!lx.empty()) {
    double c = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) c += ly[i] + 2.0 * lx[i];
    fit.coefficient = std::exp(c / static_cast<double>(lx.size()));
  }
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx > 0.0) fit.exponent = sxy / sxx;
  }
  return fit;
}

}  // namespace qcl
