#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qcl/master.hpp"
#include "qcl/propagator.hpp"
#include "qcl/record.hpp"
#include "qcl/schedule.hpp"
#include "qcl/two_particle.hpp"
#include "qcl/units.hpp"

namespace qcl {

struct GridSpec {
  double x_min = -20.0;
  double x_max = 20.0;
  std::size_t n_points = 1024;
};

struct GaussianRecipe {
  double x0 = 0.0;
  double sigma = 1.0;
  double p0 = 0.0;
};
struct GroundStateRecipe {
  double omega = 1.0;
  double center = 0.0;
};
struct PlaneWaveRecipe {
  int mode = 0;
};
using PureRecipe = std::variant<GaussianRecipe, GroundStateRecipe, PlaneWaveRecipe>;

struct SuperpositionTerm {
  cplx weight{1.0, 0.0};
  PureRecipe state;
};
/// One pure recipe, or a normalized sum of weighted recipes.
struct InitialStateSpec {
  std::vector<SuperpositionTerm> terms;
};

struct TrajectorySpec {
  std::size_t count = 10000;
  std::uint64_t seed = 1;
  std::size_t export_count = 200;
};

/// A named alternative schedule; every variant runs from the same initial state.
struct ScheduleVariant {
  std::string name = "main";
  std::optional<LambdaSchedule> schedule;
};

struct WaveExperiment {
  GridSpec grid;
  PhysicalParams params;
  InitialStateSpec initial;
  EvolutionConfig evolution;
  std::vector<ScheduleVariant> variants;
  std::optional<TrajectorySpec> trajectories;
  std::optional<std::pair<double, double>> fringe_window;
  bool snapshot_final = false;
};

struct TwoParticleExperiment {
  GridSpec grid;
  std::array<PureRecipe, 2> states;
  TwoParticleConfig config;
};

struct MasterExperiment {
  GridSpec grid;
  InitialStateSpec initial;
  MasterParams params;
  double dt = 1e-3;
  std::size_t n_steps = 0;
  std::size_t record_every = 1;
  bool include_drift = false;
  std::vector<double> separations;
  std::size_t snapshot_every = 0;  // |rho| matrices exported every k records; 0 exports none
};

struct CalculatorExperiment {
  DecoherenceParams params;
};

/// One expectation on a metric: |value - target| within rel_tol*|target| or
/// abs_tol, and/or value inside [min, max].
struct Check {
  std::string metric;
  std::optional<double> target;
  std::optional<double> rel_tol;
  std::optional<double> abs_tol;
  std::optional<double> min;
  std::optional<double> max;
};

/// Per-run numerical hygiene limits; violations set exit code 4.
struct InvariantLimits {
  double norm_drift = 1e-8;
  double continuity_residual = 1e-3;
  double boundary_leakage = 1e-6;
  double frozen_fraction = 1e-3;
  double ks_distance = 0.03;
};

struct ExperimentSpec {
  std::string name;
  std::string description;
  std::variant<WaveExperiment, TwoParticleExperiment, MasterExperiment, CalculatorExperiment> body;
  std::vector<Check> checks;
  InvariantLimits limits;

  std::string kind() const;
};

/// Strict parse: unknown or mistyped keys raise SchemaError naming the key path.
ExperimentSpec parse_experiment(const nlohmann::json& doc);
/// Fully resolved configuration with every default materialized.
nlohmann::json to_json(const ExperimentSpec& spec);

std::vector<std::string> builtin_names();
bool is_builtin(const std::string& name);
nlohmann::json builtin_json(const std::string& name);
/// Built-in name, or path to a JSON experiment file.
ExperimentSpec load_experiment(const std::string& name_or_path);

WaveState build_state(const InitialStateSpec& spec, const SpatialGrid& grid,
                      const PhysicalParams& params);

struct RunOptions {
  std::filesystem::path output_dir;       // empty: nothing is written
  std::optional<std::uint64_t> seed;      // overrides the trajectory seed
  std::optional<std::size_t> trajectories;  // forces co-evolved trajectories with this count
  std::size_t jobs = 1;                   // worker threads for schedule variants
};

/// Executes the experiment, evaluates invariants and checks, and writes the
/// record under output_dir/<name> when output_dir is set. Library errors are
/// captured in the record (status "error") rather than thrown.
RunRecord run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

/// Replaces the variants of a wave experiment with constant-lambda runs.
ExperimentSpec make_lambda_scan(const ExperimentSpec& spec, const std::vector<double>& values);

/// CLI exit-code contract.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitBlowup = 3,
  kExitInvariant = 4,
};

std::filesystem::path default_output_dir();  // $QCLIMIT_OUTPUT_DIR or ./qclimit-runs

}  // namespace qcl
