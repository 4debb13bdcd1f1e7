#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qcl/errors.hpp"
#include "qcl/experiment.hpp"
#include "qcl/record.hpp"
#include "qcl/schedule.hpp"

namespace {

void print_record(const qcl::RunRecord& rec, const std::filesystem::path& out) {
  std::cout << rec.name << " [" << rec.kind << "] status=" << rec.status << " exit=" << rec.exit_code
            << '\n';
  if (!rec.message.empty()) std::cout << "  message: " << rec.message << '\n';
  for (const auto& w : rec.warnings) std::cout << "  warning: " << w << '\n';
  for (const auto& [k, v] : rec.metrics) std::cout << "  " << k << " = " << qcl::format_double(v) << '\n';
  for (const auto& c : rec.checks) {
    std::cout << "  " << (c.passed ? "ok   " : "FAIL ") << c.name << " = " << qcl::format_double(c.value)
              << "  (" << c.expectation << ")\n";
  }
  if (!out.empty()) std::cout << "  written to " << (out / rec.name).string() << '\n';
}

int report_error(const std::exception& e) {
  if (const auto* s = dynamic_cast<const qcl::SchemaError*>(&e)) {
    std::cerr << "error: schema: " << s->what() << '\n';
    return qcl::kExitConfig;
  }
  if (const auto* q = dynamic_cast<const qcl::Error*>(&e)) {
    std::cerr << "error: " << qcl::to_string(q->kind()) << ": " << q->what() << '\n';
    return q->kind() == qcl::ErrorKind::NumericalBlowup ? qcl::kExitBlowup : qcl::kExitConfig;
  }
  std::cerr << "error: " << e.what() << '\n';
  return qcl::kExitConfig;
}

std::filesystem::path resolve_out(const std::string& flag, bool no_write) {
  if (no_write) return {};
  return flag.empty() ? qcl::default_output_dir() : std::filesystem::path(flag);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-to-classical limit experiments"};
  app.require_subcommand(1);

  std::string spec_arg, out_dir;
  bool no_write = false;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  std::size_t count = 10000;

  auto* run = app.add_subcommand("run", "Run a built-in experiment or a JSON experiment file");
  run->add_option("spec", spec_arg, "Built-in name or path")->required();
  run->add_option("--out", out_dir, "Output directory (default $QCLIMIT_OUTPUT_DIR or ./qclimit-runs)");
  run->add_flag("--no-write", no_write, "Do not write any files");
  run->add_option("--jobs", jobs, "Worker threads for schedule variants")->check(CLI::PositiveNumber);
  auto* run_seed = run->add_option("--seed", seed, "Trajectory seed override");

  double mass = 0, temp = 0, gamma = 0, dx = 0;
  bool as_json = false;
  auto* deco = app.add_subcommand("decoherence", "Decoherence time in SI units");
  deco->add_option("--mass", mass, "Mass in kg")->required();
  deco->add_option("--temp", temp, "Temperature in K")->required();
  deco->add_option("--gamma", gamma, "Relaxation rate 1/tau_R in 1/s")->required();
  deco->add_option("--dx", dx, "Separation in m")->required();
  deco->add_flag("--json", as_json, "Print JSON");

  auto* traj = app.add_subcommand("trajectories", "Run an experiment with co-evolved trajectories");
  traj->add_option("spec", spec_arg, "Built-in name or path")->required();
  traj->add_option("--count", count, "Number of trajectories")->check(CLI::PositiveNumber);
  auto* traj_seed = traj->add_option("--seed", seed, "Sampling seed");
  traj->add_option("--out", out_dir, "Output directory");
  traj->add_flag("--no-write", no_write, "Do not write any files");

  std::string param = "lambda";
  std::vector<double> values;
  auto* scan = app.add_subcommand("scan", "Sweep constant lambda over a wave experiment");
  scan->add_option("spec", spec_arg, "Built-in name or path")->required();
  scan->add_option("--param", param, "Parameter to sweep")->check(CLI::IsMember({"lambda"}));
  scan->add_option("--values", values, "Comma-separated values")->delimiter(',')->required();
  scan->add_option("--jobs", jobs, "Parallel worker slots")->check(CLI::PositiveNumber);
  scan->add_option("--out", out_dir, "Output directory");
  scan->add_flag("--no-write", no_write, "Do not write any files");

  auto* list = app.add_subcommand("list", "List built-in experiments");
  auto* show = app.add_subcommand("show", "Print the fully resolved configuration");
  show->add_option("spec", spec_arg, "Built-in name or path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qcl::kExitConfig;
  }

  try {
    if (*list) {
      for (const auto& name : qcl::builtin_names()) {
        const auto spec = qcl::load_experiment(name);
        std::cout << name << "  (" << spec.kind() << ")  " << spec.description << '\n';
      }
      return qcl::kExitOk;
    }
    if (*show) {
      std::cout << qcl::to_json(qcl::load_experiment(spec_arg)).dump(2) << '\n';
      return qcl::kExitOk;
    }
    if (*deco) {
      const qcl::DecoherenceParams p{mass, temp, gamma, dx};
      const auto d = qcl::decoherence_time(p, qcl::PhysicalParams::si_units(mass));
      if (as_json) {
        nlohmann::json j{{"thermal_wavelength_m", d.thermal_wavelength},
                         {"tau_r_s", d.tau_r},
                         {"tau_d_s", d.tau_d},
                         {"ratio", d.ratio}};
        std::cout << j.dump(2) << '\n';
      } else {
        std::printf("thermal_wavelength_m = %.6e\ntau_r_s = %.6e\ntau_d_s = %.6e\nratio = %.6e\n",
                    d.thermal_wavelength, d.tau_r, d.tau_d, d.ratio);
      }
      return qcl::kExitOk;
    }

    qcl::RunOptions opts;
    opts.output_dir = resolve_out(out_dir, no_write);
    opts.jobs = jobs;
    qcl::ExperimentSpec spec = qcl::load_experiment(spec_arg);
    if (*run && run_seed->count() > 0) opts.seed = seed;
    if (*traj) {
      opts.trajectories = count;
      if (traj_seed->count() > 0) opts.seed = seed;
    }
    if (*scan) spec = qcl::make_lambda_scan(spec, values);
    const auto rec = qcl::run_experiment(spec, opts);
    print_record(rec, opts.output_dir);
    return rec.exit_code;
  } catch (const std::exception& e) {
    return report_error(e);
  }
}
