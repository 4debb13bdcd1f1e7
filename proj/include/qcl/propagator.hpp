#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qcl/polar.hpp"
#include "qcl/potential.hpp"
#include "qcl/schedule.hpp"
#include "qcl/spectral.hpp"
#include "qcl/state.hpp"
#include "qcl/units.hpp"

namespace qcl {

struct EvolutionConfig {
  double dt = 1e-3;
  std::size_t n_steps = 0;
  /// Coupling of the -lambda(t) Q term. Empty disables the term entirely.
  std::optional<LambdaSchedule> schedule;
  PotentialSpec potential = FreePotential{};
  std::size_t record_every = 1;
  double epsilon = kDefaultNodeEpsilon;
  /// A step is flagged as a caustic when the spectral tail or the interior
  /// node fraction exceeds these.
  double caustic_spectral_tail = 1e-6;
  double caustic_node_fraction = 0.05;

  /// Throws ConfigError.
  void validate() const;
  /// dx^2 m / (hbar pi): beyond this the lambda-term recomputation is unreliable.
  static double stability_limit(const SpatialGrid& grid, const PhysicalParams& params);
};

struct RecordRow {
  double t = 0.0;
  double lambda = 0.0;
  double norm = 0.0;
  double mean_x = 0.0;
  double mean_p = 0.0;
  double sigma_x = 0.0;
  double energy = 0.0;
  double continuity_residual = 0.0;
  double boundary_leakage = 0.0;
  double node_fraction = 0.0;

  bool operator==(const RecordRow&) const = default;
};

enum class RunStatus { Completed, Blowup, Caustic };
const char* to_string(RunStatus status);

struct EvolutionRecord {
  std::vector<RecordRow> rows;
  WaveState final_state;
  RunStatus status = RunStatus::Completed;
  std::string message;
  std::size_t steps_taken = 0;
  std::vector<std::string> warnings;
};

/// Called after every successful step with the states on either side of it.
using StepObserver =
    std::function<void(const WaveState& before, const WaveState& after, std::size_t step)>;

/// Strang-split integrator for
///   i hbar psi_t = (-hbar^2/2m psi'' + V - lambda(t) Q[|psi|]) psi.
/// Each step: half potential kick with Q from the current amplitude, exact
/// kinetic step in Fourier space, half kick with Q from the new amplitude.
/// lambda is sampled at the step midpoint for both kicks.
class Propagator {
 public:
  Propagator(const SpatialGrid& grid, EvolutionConfig config, PhysicalParams params = {});

  /// Advances psi by one dt starting at psi.t. Throws NumericalBlowupError.
  void step(WaveState& psi, std::size_t step_index = 0);

  double lambda_mid(double t) const;
  const EvolutionConfig& config() const { return config_; }
  const PhysicalParams& params() const { return params_; }
  const std::vector<double>& potential_values() const { return potential_; }
  Spectral1d& spectral() { return spectral_; }

 private:
  void potential_kick(WaveState& psi, double lambda, std::vector<bool>* mask);

  SpatialGrid grid_;
  EvolutionConfig config_;
  PhysicalParams params_;
  Spectral1d spectral_;
  std::vector<double> potential_;
  std::vector<double> amplitude_;
  std::vector<double> q_;
  std::vector<bool> mask_;
};

WaveState step(const WaveState& state, const EvolutionConfig& config, double t,
               const PhysicalParams& params = {});

/// Runs config.n_steps steps, recording a row every record_every steps and
/// at the end. Blowups and caustics stop the run and return what was recorded.
EvolutionRecord evolve(const WaveState& state, const EvolutionConfig& config,
                       const PhysicalParams& params = {}, const StepObserver& observer = {});

}  // namespace qcl
