#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "qcl/grid.hpp"
#include "qcl/polar.hpp"
#include "qcl/spectral.hpp"
#include "qcl/state.hpp"
#include "qcl/units.hpp"

namespace qcl {

/// Uniform doubles in [0, 1) from the top 53 bits of mt19937_64 output.
/// Unlike std::uniform_real_distribution this is identical on every platform.
class Rng {
 public:
  static constexpr const char* kName = "mt19937_64-53bit";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// CDF of |psi|^2 treated as constant on the cell [x_j - dx/2, x_j + dx/2),
/// with cell 0 split across both ends of the periodic domain.
class DensityCdf {
 public:
  explicit DensityCdf(const WaveState& psi);

  double cdf(double x) const;       // x is wrapped into [x_min, x_max)
  double quantile(double u) const;  // inverse of cdf for u in [0, 1]
  const SpatialGrid& grid() const { return grid_; }

 private:
  SpatialGrid grid_;
  std::vector<double> knots_;       // segment boundaries, n + 2 entries
  std::vector<double> cumulative_;  // normalized cdf at knots_
};

struct TrajectoryEnsemble {
  SpatialGrid grid;
  std::vector<double> positions;
  double t = 0.0;
  std::uint64_t rng_seed = 0;
  std::size_t attempted_steps = 0;  // trajectory-steps, summed over the ensemble
  std::size_t frozen_steps = 0;     // trajectory-steps skipped at nodes
  std::size_t wraps = 0;

  std::size_t size() const { return positions.size(); }
  double frozen_fraction() const;
};

/// Inverse-CDF sampling of |psi|^2, deterministic in `seed`.
TrajectoryEnsemble sample_initial(const WaveState& psi, std::size_t n_traj, std::uint64_t seed);

/// Velocity and node mask only; enough for advance(). S and Q are left empty.
PolarFields guidance_fields(const WaveState& psi, const PhysicalParams& params, double epsilon,
                            Spectral1d& spectral);

/// Midpoint rule on the guidance law dx/dt = v(x, t) with v linearly
/// interpolated in space and averaged between the snapshots at t and t + dt.
/// Trajectories whose stencil touches a node (or yields a non-finite velocity)
/// are frozen for the step and counted.
TrajectoryEnsemble advance(const TrajectoryEnsemble& ens, const PolarFields& fields_t,
                           const PolarFields& fields_next, double dt);

/// Kolmogorov-Smirnov distance between the positions and |psi|^2.
double equivariance_statistic(const TrajectoryEnsemble& ens, const WaveState& psi);
double ks_distance(std::span<const double> samples, const DensityCdf& cdf);

/// Ordered by `initial`, the number of adjacent pairs whose order has flipped in `current`.
std::size_t ordering_violations(std::span<const double> initial, std::span<const double> current);

struct KsSample {
  double t = 0.0;
  double ks = 0.0;
};

/// Co-evolves an ensemble with a propagating wave function. Pass it to
/// evolve() through std::ref; it reuses the velocity field of the previous
/// step as the start-of-step snapshot.
class TrajectoryTracker {
 public:
  TrajectoryTracker(TrajectoryEnsemble ensemble, const WaveState& initial, PhysicalParams params,
                    double epsilon, std::size_t record_every);

  void operator()(const WaveState& before, const WaveState& after, std::size_t step);

  const TrajectoryEnsemble& ensemble() const { return ensemble_; }
  const std::vector<double>& initial_positions() const { return initial_; }
  const std::vector<KsSample>& ks_history() const { return ks_; }
  const std::vector<double>& history_times() const { return history_t_; }
  const std::vector<std::vector<double>>& history() const { return history_; }
  double max_ks() const;
  /// Records the final state unless it was already recorded.
  void finalize(const WaveState& psi);

 private:
  void record(const WaveState& psi);

  TrajectoryEnsemble ensemble_;
  std::vector<double> initial_;
  PhysicalParams params_;
  double epsilon_;
  std::size_t record_every_;
  Spectral1d spectral_;
  PolarFields current_;
  std::vector<KsSample> ks_;
  std::vector<double> history_t_;
  std::vector<std::vector<double>> history_;
};

}  // namespace qcl
