#include "qcl/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qcl/errors.hpp"
#include "qcl/observables.hpp"

namespace qcl {

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Blowup: return "blowup";
    case RunStatus::Caustic: return "caustic";
  }
  return "unknown";
}

void EvolutionConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("evolution dt must be positive");
  if (record_every == 0) throw ConfigError("record_every must be >= 1");
  if (!(epsilon > 0.0) || epsilon > 1e-3) throw ConfigError("epsilon must lie in (0, 1e-3]");
  if (!(caustic_spectral_tail > 0.0) || !(caustic_node_fraction > 0.0)) {
    throw ConfigError("caustic thresholds must be positive");
  }
  qcl::validate(potential);
}

double EvolutionConfig::stability_limit(const SpatialGrid& grid, const PhysicalParams& params) {
  return grid.dx() * grid.dx() * params.mass / (params.hbar * std::numbers::pi);
}

Propagator::Propagator(const SpatialGrid& grid, EvolutionConfig config, PhysicalParams params)
    : grid_(grid), config_(std::move(config)), params_(params), spectral_(grid),
      potential_(), amplitude_(grid.size()), q_(grid.size()), mask_(grid.size()) {
  config_.validate();
  params_.validate();
  potential_ = evaluate(config_.potential, grid_, params_);
}

double Propagator::lambda_mid(double t) const {
  if (!config_.schedule) return 0.0;
  return lambda_at(*config_.schedule, t + 0.5 * config_.dt);
}

void Propagator::potential_kick(WaveState& psi, double lambda, std::vector<bool>* mask) {
  const std::size_t n = psi.size();
  const double factor = -0.5 * config_.dt / params_.hbar;
  if (config_.schedule) {
    for (std::size_t j = 0; j < n; ++j) amplitude_[j] = std::abs(psi.values[j]);
    quantum_potential(amplitude_, params_, config_.epsilon, spectral_, q_, mask);
    for (std::size_t j = 0; j < n; ++j)
      psi.values[j] *= std::polar(1.0, factor * (potential_[j] - lambda * q_[j]));
    return;
  }
  for (std::size_t j = 0; j < n; ++j) psi.values[j] *= std::polar(1.0, factor * potential_[j]);
  if (mask) {
    double max_amp = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      amplitude_[j] = std::abs(psi.values[j]);
      max_amp = std::max(max_amp, amplitude_[j]);
    }
    const double floor = config_.epsilon * max_amp;
    mask->assign(n, false);
    for (std::size_t j = 0; j < n; ++j) (*mask)[j] = amplitude_[j] < floor;
  }
}

void Propagator::step(WaveState& psi, std::size_t step_index) {
  if (!(psi.grid == grid_)) throw ShapeError("Propagator::step: state is on a different grid");
  const double lambda = lambda_mid(psi.t);
  potential_kick(psi, lambda, nullptr);
  spectral_.kinetic_step(psi.values, params_.hbar, params_.mass, config_.dt);
  potential_kick(psi, lambda, &mask_);
  psi.t += config_.dt;

  for (const auto& v : psi.values) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      std::ostringstream msg;
      msg << "non-finite wave function after step " << step_index << " (t=" << psi.t << ")";
      throw NumericalBlowupError(step_index, msg.str());
    }
  }
  psi.diagnostics.node_fraction = interior_node_fraction(mask_);
  psi.diagnostics.spectral_tail = spectral_.spectral_tail(psi.values);
  psi.diagnostics.caustic = psi.diagnostics.spectral_tail > config_.caustic_spectral_tail ||
                            psi.diagnostics.node_fraction > config_.caustic_node_fraction;
}

WaveState step(const WaveState& state, const EvolutionConfig& config, double t,
               const PhysicalParams& params) {
  Propagator prop(state.grid, config, params);
  WaveState out = state;
  out.t = t;
  prop.step(out);
  return out;
}

EvolutionRecord evolve(const WaveState& state, const EvolutionConfig& config,
                       const PhysicalParams& params, const StepObserver& observer) {
  Propagator prop(state.grid, config, params);
  EvolutionRecord rec{{}, state, RunStatus::Completed, {}, 0, {}};
  if (config.schedule && config.dt > EvolutionConfig::stability_limit(state.grid, params)) {
    std::ostringstream msg;
    msg << "dt=" << config.dt << " exceeds dx^2 m/(hbar pi)="
        << EvolutionConfig::stability_limit(state.grid, params)
        << "; the lambda-term recomputation may be inaccurate";
    rec.warnings.push_back(msg.str());
  }

  const auto make_row = [&](const WaveState& s, double residual) {
    const auto o = observables(s, params, prop.potential_values(), prop.spectral());
    RecordRow row;
    row.t = s.t;
    row.lambda = config.schedule ? lambda_at(*config.schedule, s.t) : 0.0;
    row.norm = o.norm;
    row.mean_x = o.mean_x;
    row.mean_p = o.mean_p;
    row.sigma_x = o.sigma_x;
    row.energy = o.energy;
    row.continuity_residual = residual;
    row.boundary_leakage = boundary_leakage(s);
    row.node_fraction = s.diagnostics.node_fraction;
    return row;
  };

  WaveState psi = state;
  WaveState prev = state;
  rec.rows.push_back(make_row(psi, 0.0));
  bool first_residual_pending = config.n_steps > 0;

  for (std::size_t s = 0; s < config.n_steps; ++s) {
    prev = psi;
    try {
      prop.step(psi, s);
    } catch (const NumericalBlowupError& e) {
      rec.status = RunStatus::Blowup;
      rec.message = e.what();
      rec.final_state = prev;
      return rec;
    }
    rec.steps_taken = s + 1;
    if (observer) observer(prev, psi, s);

    const bool caustic = psi.diagnostics.caustic;
    const bool due = (s + 1) % config.record_every == 0 || s + 1 == config.n_steps || caustic;
    if (first_residual_pending || due) {
      const double residual = continuity_residual(prev, psi, params, prop.spectral());
      if (first_residual_pending) {
        rec.rows.front().continuity_residual = residual;
        first_residual_pending = false;
      }
      if (due) rec.rows.push_back(make_row(psi, residual));
    }
    if (caustic) {
      std::ostringstream msg;
      msg << "caustic detected at t=" << psi.t << " (spectral tail "
          << psi.diagnostics.spectral_tail << ", interior node fraction "
          << psi.diagnostics.node_fraction << ")";
      rec.status = RunStatus::Caustic;
      rec.message = msg.str();
      break;
    }
  }
  rec.final_state = psi;
  return rec;
}

}  // namespace qcl
