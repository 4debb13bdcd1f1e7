#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "qcl/polar.hpp"
#include "qcl/potential.hpp"
#include "qcl/propagator.hpp"
#include "qcl/schedule.hpp"
#include "qcl/spectral.hpp"
#include "qcl/state.hpp"
#include "qcl/units.hpp"

namespace qcl {

inline constexpr std::size_t kMaxTwoParticleAxis = 256;

/// Two distinguishable particles with V(x1, x2) = V1(x1) + V2(x2) and
/// per-particle couplings lambda_i(t).
struct TwoParticleConfig {
  double dt = 1e-3;
  std::size_t n_steps = 0;
  std::array<LambdaSchedule, 2> schedules{};
  std::array<PotentialSpec, 2> potentials{FreePotential{}, FreePotential{}};
  std::array<double, 2> masses{1.0, 1.0};
  double hbar = 1.0;
  std::size_t record_every = 1;
  double epsilon = kDefaultNodeEpsilon;
  double caustic_spectral_tail = 1e-6;

  void validate() const;
};

/// Density-weighted partial quantum potentials and the scalar effective lambda.
struct TwoParticleCoupling {
  std::array<double, 2> lambdas{};
  std::array<double, 2> mean_q{};
  EffectiveLambda effective{};
  bool degenerate = false;  // sum of <Q_i> vanished
};

struct TwoParticleRow {
  double t = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda_eff = 0.0;
  double norm = 0.0;
  double mean_x1 = 0.0;
  double mean_x2 = 0.0;
  double sigma_x1 = 0.0;
  double sigma_x2 = 0.0;
  double density_drift = 0.0;  // L-infinity change of |Psi|^2 since t = 0
};

struct TwoParticleRecord {
  std::vector<TwoParticleRow> rows;
  TwoParticleState final_state;
  RunStatus status = RunStatus::Completed;
  std::string message;
  std::size_t steps_taken = 0;
};

class TwoParticlePropagator {
 public:
  TwoParticlePropagator(const SpatialGrid& grid1, const SpatialGrid& grid2,
                        TwoParticleConfig config);

  void step(TwoParticleState& psi, std::size_t step_index = 0);

  /// Q_i = -(hbar^2 / 2 m_i) d_i^2 R / R on the full grid, then density-weighted means.
  TwoParticleCoupling coupling(const TwoParticleState& psi, double t);
  const TwoParticleConfig& config() const { return config_; }

 private:
  void kick(TwoParticleState& psi, double lambda1, double lambda2, bool track_mask);
  void partial_potentials(const TwoParticleState& psi);

  SpatialGrid grid1_;
  SpatialGrid grid2_;
  TwoParticleConfig config_;
  Spectral2d spectral_;
  std::vector<double> v_;
  std::vector<double> amplitude_;
  std::vector<double> d11_, d22_;
  std::vector<double> q1_, q2_;
  std::size_t masked_ = 0;
};

TwoParticleState step_two_particle(const TwoParticleState& state, const TwoParticleConfig& config,
                                   double t);

TwoParticleRecord evolve_two_particle(const TwoParticleState& state,
                                      const TwoParticleConfig& config);

}  // namespace qcl
