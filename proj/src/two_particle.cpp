#include "qcl/two_particle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qcl/errors.hpp"

namespace qcl {

void TwoParticleConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("two-particle dt must be positive");
  if (record_every == 0) throw ConfigError("record_every must be >= 1");
  if (!(epsilon > 0.0) || epsilon > 1e-3) throw ConfigError("epsilon must lie in (0, 1e-3]");
  if (!(masses[0] > 0.0) || !(masses[1] > 0.0) || !(hbar > 0.0)) {
    throw ConfigError("masses and hbar must be positive");
  }
  for (const auto& p : potentials) qcl::validate(p);
}

TwoParticlePropagator::TwoParticlePropagator(const SpatialGrid& grid1, const SpatialGrid& grid2,
                                             TwoParticleConfig config)
    : grid1_(grid1), grid2_(grid2), config_(std::move(config)),
      spectral_((grid1.size() > kMaxTwoParticleAxis || grid2.size() > kMaxTwoParticleAxis)
                    ? throw ResourceError("two-particle grids are limited to 256 x 256 points")
                    : grid1,
                grid2) {
  config_.validate();
  const std::size_t n1 = grid1.size(), n2 = grid2.size();
  const PhysicalParams p1{config_.hbar, config_.masses[0], 1.0};
  const PhysicalParams p2{config_.hbar, config_.masses[1], 1.0};
  const auto v1 = evaluate(config_.potentials[0], grid1, p1);
  const auto v2 = evaluate(config_.potentials[1], grid2, p2);
  v_.resize(n1 * n2);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j) v_[i * n2 + j] = v1[i] + v2[j];
  amplitude_.resize(n1 * n2);
  d11_.resize(n1 * n2);
  d22_.resize(n1 * n2);
  q1_.resize(n1 * n2);
  q2_.resize(n1 * n2);
}

void TwoParticlePropagator::partial_potentials(const TwoParticleState& psi) {
  double max_amp = 0.0;
  for (std::size_t idx = 0; idx < psi.values.size(); ++idx) {
    amplitude_[idx] = std::abs(psi.values[idx]);
    max_amp = std::max(max_amp, amplitude_[idx]);
  }
  const double floor = config_.epsilon * max_amp;
  spectral_.partial_laplacians_dealiased(amplitude_, d11_, d22_);
  const double s1 = -config_.hbar * config_.hbar / (2.0 * config_.masses[0]);
  const double s2 = -config_.hbar * config_.hbar / (2.0 * config_.masses[1]);
  masked_ = 0;
  for (std::size_t idx = 0; idx < amplitude_.size(); ++idx) {
    const bool floored = amplitude_[idx] < floor;
    masked_ += floored ? 1 : 0;
    const double r = floored ? floor : amplitude_[idx];
    q1_[idx] = s1 * d11_[idx] / r;
    q2_[idx] = s2 * d22_[idx] / r;
  }
}

void TwoParticlePropagator::kick(TwoParticleState& psi, double lambda1, double lambda2,
                                 bool track_mask) {
  const double factor = -0.5 * config_.dt / config_.hbar;
  if (lambda1 == 0.0 && lambda2 == 0.0) {
    // lambda * Q vanishes identically; skip the transforms.
    for (std::size_t idx = 0; idx < psi.values.size(); ++idx)
      psi.values[idx] *= std::polar(1.0, factor * v_[idx]);
    if (track_mask) {
      double max_amp = 0.0;
      for (const auto& v : psi.values) max_amp = std::max(max_amp, std::abs(v));
      masked_ = 0;
      for (const auto& v : psi.values) masked_ += std::abs(v) < config_.epsilon * max_amp ? 1 : 0;
    }
    return;
  }
  partial_potentials(psi);
  for (std::size_t idx = 0; idx < psi.values.size(); ++idx) {
    const double heff = v_[idx] - lambda1 * q1_[idx] - lambda2 * q2_[idx];
    psi.values[idx] *= std::polar(1.0, factor * heff);
  }
}

void TwoParticlePropagator::step(TwoParticleState& psi, std::size_t step_index) {
  if (!(psi.grid1 == grid1_) || !(psi.grid2 == grid2_)) {
    throw ShapeError("TwoParticlePropagator::step: state is on a different grid");
  }
  const double tm = psi.t + 0.5 * config_.dt;
  const double l1 = lambda_at(config_.schedules[0], tm);
  const double l2 = lambda_at(config_.schedules[1], tm);
  kick(psi, l1, l2, false);
  spectral_.kinetic_step(psi.values, config_.hbar, config_.masses[0], config_.masses[1], config_.dt);
  kick(psi, l1, l2, true);
  psi.t += config_.dt;
  for (const auto& v : psi.values) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      std::ostringstream msg;
      msg << "non-finite two-particle wave function after step " << step_index;
      throw NumericalBlowupError(step_index, msg.str());
    }
  }
  psi.diagnostics.node_fraction =
      static_cast<double>(masked_) / static_cast<double>(psi.values.size());
  psi.diagnostics.spectral_tail = spectral_.spectral_tail(psi.values);
  psi.diagnostics.caustic = psi.diagnostics.spectral_tail > config_.caustic_spectral_tail;
}

TwoParticleCoupling TwoParticlePropagator::coupling(const TwoParticleState& psi, double t) {
  partial_potentials(psi);
  TwoParticleCoupling c;
  c.lambdas = {lambda_at(config_.schedules[0], t), lambda_at(config_.schedules[1], t)};
  double q1 = 0.0, q2 = 0.0;
  for (std::size_t idx = 0; idx < psi.values.size(); ++idx) {
    const double rho = std::norm(psi.values[idx]);
    q1 += rho * q1_[idx];
    q2 += rho * q2_[idx];
  }
  c.mean_q = {q1 * psi.cell(), q2 * psi.cell()};
  try {
    c.effective = effective_lambda(c.lambdas, c.mean_q);
  } catch (const DegenerateStateError&) {
    c.degenerate = true;
    c.effective.value = std::numeric_limits<double>::quiet_NaN();
    c.effective.in_unit_range = false;
  }
  return c;
}

TwoParticleState step_two_particle(const TwoParticleState& state, const TwoParticleConfig& config,
                                   double t) {
  TwoParticlePropagator prop(state.grid1, state.grid2, config);
  TwoParticleState out = state;
  out.t = t;
  prop.step(out);
  return out;
}

TwoParticleRecord evolve_two_particle(const TwoParticleState& state,
                                      const TwoParticleConfig& config) {
  TwoParticlePropagator prop(state.grid1, state.grid2, config);
  TwoParticleRecord rec{{}, state, RunStatus::Completed, {}, 0};
  const auto rho0 = state.density();

  const auto make_row = [&](const TwoParticleState& s) {
    TwoParticleRow row;
    row.t = s.t;
    const auto c = prop.coupling(s, s.t);
    row.lambda1 = c.lambdas[0];
    row.lambda2 = c.lambdas[1];
    row.lambda_eff = c.degenerate ? c.effective.value : c.effective.clamped();
    const std::size_t n1 = s.n1(), n2 = s.n2();
    double m0 = 0.0, x1 = 0.0, x2 = 0.0, xx1 = 0.0, xx2 = 0.0, drift = 0.0;
    for (std::size_t i = 0; i < n1; ++i) {
      const double a = s.grid1.x(i);
      for (std::size_t j = 0; j < n2; ++j) {
        const double b = s.grid2.x(j);
        const double rho = std::norm(s.at(i, j));
        m0 += rho;
        x1 += rho * a;
        x2 += rho * b;
        xx1 += rho * a * a;
        xx2 += rho * b * b;
        drift = std::max(drift, std::abs(rho - rho0[i * n2 + j]));
      }
    }
    row.norm = m0 * s.cell();
    row.mean_x1 = x1 / m0;
    row.mean_x2 = x2 / m0;
    row.sigma_x1 = std::sqrt(std::max(0.0, xx1 / m0 - row.mean_x1 * row.mean_x1));
    row.sigma_x2 = std::sqrt(std::max(0.0, xx2 / m0 - row.mean_x2 * row.mean_x2));
    row.density_drift = drift;
    return row;
  };

  TwoParticleState psi = state;
  rec.rows.push_back(make_row(psi));
  for (std::size_t s = 0; s < config.n_steps; ++s) {
    TwoParticleState prev = psi;
    try {
      prop.step(psi, s);
    } catch (const NumericalBlowupError& e) {
      rec.status = RunStatus::Blowup;
      rec.message = e.what();
      rec.final_state = prev;
      return rec;
    }
    rec.steps_taken = s + 1;
    const bool caustic = psi.diagnostics.caustic;
    if ((s + 1) % config.record_every == 0 || s + 1 == config.n_steps || caustic) {
      rec.rows.push_back(make_row(psi));
    }
    if (caustic) {
      rec.status = RunStatus::Caustic;
      rec.message = "caustic detected at t=" + std::to_string(psi.t);
      break;
    }
  }
  rec.final_state = psi;
  return rec;
}

}  // namespace qcl
