// Acceptance criteria 1-9. One PASS/FAIL line per criterion; exit status is
// non-zero when any criterion fails.

#include <array>
#include <chrono>
#include <optional>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.hpp"
#include "qcl/experiment.hpp"
#include "qcl/initial.hpp"
#include "qcl/observables.hpp"
#include "qcl/polar.hpp"
#include "qcl/propagator.hpp"
#include "qcl/trajectories.hpp"
#include "qcl/two_particle.hpp"

using namespace qcl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct HygieneEntry {
  std::string run;
  double norm_drift = 0.0;
  double continuity = 0.0;
  double leakage = 0.0;
};

std::vector<HygieneEntry> hygiene;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

void track(const std::string& run, const EvolutionRecord& rec) {
  HygieneEntry h{run};
  for (const auto& r : rec.rows) {
    h.norm_drift = std::max(h.norm_drift, std::abs(r.norm - rec.rows.front().norm));
    h.continuity = std::max(h.continuity, r.continuity_residual);
    h.leakage = std::max(h.leakage, r.boundary_leakage);
  }
  hygiene.push_back(h);
}

struct WaveSetup {
  WaveExperiment body;
  WaveState psi0;
  EvolutionConfig config;
};

WaveSetup wave_builtin(const std::string& name, std::size_t variant = 0) {
  const auto spec = load_experiment(name);
  const auto& body = std::get<WaveExperiment>(spec.body);
  const auto grid = make_grid(body.grid.x_min, body.grid.x_max, body.grid.n_points);
  WaveSetup s{body, build_state(body.initial, grid, body.params), body.evolution};
  s.config.schedule = body.variants.at(variant).schedule;
  return s;
}

double within_factor(double value, double target) { return std::abs(std::log10(value / target)); }

Outcome decoherence_ratio() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string cmd =
      std::string(QCLIMIT_CLI) + " decoherence --mass 1e-3 --temp 300 --gamma 1e-17 --dx 1e-2 --json";
  std::string out;
  if (FILE* pipe = popen(cmd.c_str(), "r")) {
    char buf[256];
    while (std::fgets(buf, sizeof buf, pipe)) out += buf;
    if (pclose(pipe) != 0) return {false, "decoherence subcommand exited non-zero"};
  } else {
    return {false, "could not launch " + cmd};
  }
  const double dt = seconds_since(t0);
  const auto j = nlohmann::json::parse(out);
  const double ratio = j.at("ratio").get<double>();
  const double tau_d = j.at("tau_d_s").get<double>();
  const bool ok = within_factor(ratio, 1e-40) <= 1.0 && within_factor(tau_d, 1e-23) <= 1.0 && dt < 1.0;
  return {ok, "tau_D/tau_R=" + fmt(ratio) + " (1e-40 within x10), tau_D=" + fmt(tau_d) +
                  " s (1e-23 within x10), " + fmt(dt) + " s"};
}

double quantum_limit_error(double dt_scale, std::optional<EvolutionRecord>* keep = nullptr) {
  auto s = wave_builtin("free-dispersion-quantum");
  const double horizon = s.config.dt * static_cast<double>(s.config.n_steps);
  s.config.dt /= dt_scale;
  s.config.n_steps = static_cast<std::size_t>(std::llround(horizon / s.config.dt));
  s.config.record_every = static_cast<std::size_t>(std::llround(s.config.record_every * dt_scale));
  const auto rec = evolve(s.psi0, s.config, s.body.params);
  const auto& r = std::get<GaussianRecipe>(s.body.initial.terms[0].state);
  const double expected = oracle::free_gaussian_sigma(rec.final_state.t, r.sigma, s.body.params.hbar, s.body.params.mass);
  if (keep) *keep = rec;
  return std::abs(rec.rows.back().sigma_x - expected) / expected;
}

Outcome quantum_limit() {
  const auto t0 = std::chrono::steady_clock::now();
  auto s = wave_builtin("free-dispersion-quantum");
  const auto& r = std::get<GaussianRecipe>(s.body.initial.terms[0].state);
  const double horizon = 2.0 * s.body.params.mass * r.sigma * r.sigma / s.body.params.hbar;
  std::optional<EvolutionRecord> kept;
  const double err = quantum_limit_error(1.0, &kept);
  const auto& rec = *kept;
  const double dt = seconds_since(t0);
  track("quantum limit", rec);
  const bool ok = s.psi0.size() == 1024 && std::abs(rec.final_state.t - horizon) < 1e-9 &&
                  rec.status == RunStatus::Completed && err < 1e-3 && dt < 10.0;
  return {ok, "N=" + std::to_string(s.psi0.size()) + ", t=" + fmt(rec.final_state.t) + ", sigma=" +
                  fmt(rec.rows.back().sigma_x) + ", relative error " + fmt(err) + " (< 1e-3), " + fmt(dt) + " s"};
}

Outcome classical_limit() {
  const auto t0 = std::chrono::steady_clock::now();
  auto s = wave_builtin("free-rigid-classical");
  const auto rec = evolve(s.psi0, s.config, s.body.params);
  const double dt = seconds_since(t0);
  track("classical limit", rec);
  const auto& r = std::get<GaussianRecipe>(s.body.initial.terms[0].state);
  const double t = rec.final_state.t;
  const double x_expected = r.x0 + r.p0 * t / s.body.params.mass;
  const double sig_err = std::abs(rec.rows.back().sigma_x / r.sigma - 1.0);
  const double x_err = std::abs(rec.rows.back().mean_x - x_expected) / std::abs(x_expected);
  const bool ok = rec.status == RunStatus::Completed && sig_err < 1e-3 && x_err < 1e-3 && dt < 10.0 &&
                  std::abs(t - 2.0 * s.body.params.mass * r.sigma * r.sigma / s.body.params.hbar) < 1e-9;
  return {ok, "sigma/sigma0-1=" + fmt(sig_err) + ", <x> relative error " + fmt(x_err) + " (both < 1e-3), " +
                  fmt(dt) + " s"};
}

Outcome stationarity() {
  const auto t0 = std::chrono::steady_clock::now();
  auto s = wave_builtin("harmonic-stationary");
  const auto rec = evolve(s.psi0, s.config, s.body.params);
  const double dt = seconds_since(t0);
  track("stationarity", rec);
  const double omega = std::get<HarmonicPotential>(s.config.potential).omega;
  const double period = 2.0 * std::numbers::pi / omega;
  const double drift = density_linf_difference(rec.final_state, s.psi0);
  const double e0 = 0.5 * s.body.params.hbar * omega;
  const auto v = evaluate(s.config.potential, s.psi0.grid, s.body.params);
  double worst = 0.0;
  for (const WaveState* st : std::array<const WaveState*, 2>{&s.psi0, &rec.final_state}) {
    const auto f = decompose(*st, s.body.params);
    const double rmax = *std::max_element(f.R.begin(), f.R.end());
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (f.R[j] > 1e-6 * rmax) worst = std::max(worst, std::abs(f.Q[j] + v[j] - e0) / e0);
    }
  }
  const bool ok = std::abs(rec.final_state.t - period) < 1e-9 && drift < 1e-6 && worst < 1e-4 && dt < 30.0;
  return {ok, "density drift " + fmt(drift) + " (< 1e-6), max |Q+V-hbar w/2|/(hbar w/2) " + fmt(worst) +
                  " (< 1e-4), " + fmt(dt) + " s"};
}

Outcome equivariance() {
  const auto t0 = std::chrono::steady_clock::now();
  auto s = wave_builtin("free-dispersion-quantum");
  TrajectoryTracker tracker(sample_initial(s.psi0, 10000, 1), s.psi0, s.body.params, s.config.epsilon,
                            s.config.record_every);
  const auto rec = evolve(s.psi0, s.config, s.body.params, std::ref(tracker));
  tracker.finalize(rec.final_state);
  const double dt = seconds_since(t0);
  track("equivariance", rec);
  const double frozen = tracker.ensemble().frozen_fraction();
  const bool ok = tracker.ensemble().size() == 10000 && tracker.max_ks() < 0.03 && frozen < 1e-3 && dt < 60.0;
  return {ok, std::to_string(tracker.ensemble().size()) + " trajectories, max KS " + fmt(tracker.max_ks()) +
                  " over " + std::to_string(tracker.ks_history().size()) + " times (< 0.03), frozen " +
                  fmt(frozen) + " (< 1e-3), " + fmt(dt) + " s"};
}

Outcome interference() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = load_experiment("interference-suppression");
  const auto& body = std::get<WaveExperiment>(spec.body);
  const auto [a, b] = *body.fringe_window;
  std::ostringstream detail;
  bool ok = true;
  for (std::size_t i = 0; i < body.variants.size(); ++i) {
    auto s = wave_builtin("interference-suppression", i);
    const auto rec = evolve(s.psi0, s.config, s.body.params);
    track("interference/" + body.variants[i].name, rec);
    const bool reached = rec.status == RunStatus::Completed;
    const auto vis = fringe_visibility(rec.final_state, a, b);
    double drift = 0.0;
    for (const auto& r : rec.rows) drift = std::max(drift, std::abs(r.norm - rec.rows.front().norm));
    const bool quantum = body.variants[i].name == "quantum";
    const bool vis_ok = reached && vis && (quantum ? *vis > 0.9 : *vis < 0.2);
    ok = ok && vis_ok && drift < 1e-8;
    detail << body.variants[i].name << ": ";
    if (reached) {
      detail << "visibility " << (vis ? fmt(*vis) : std::string("n/a")) << (quantum ? " (> 0.9)" : " (< 0.2)");
    } else {
      detail << "stopped at t=" << fmt(rec.final_state.t) << " (" << to_string(rec.status)
             << ") before the packets overlap; visibility at stop " << (vis ? fmt(*vis) : std::string("n/a"));
    }
    detail << ", norm drift " << fmt(drift) << "; ";
  }
  const double dt = seconds_since(t0);
  ok = ok && dt < 60.0;
  detail << fmt(dt) << " s";
  return {ok, detail.str()};
}

Outcome master_scaling() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = load_experiment("decoherence-scaling");
  const auto& body = std::get<MasterExperiment>(spec.body);
  const auto rec = run_experiment(spec);
  const double dt = seconds_since(t0);
  const auto& c = body.params.constants;
  const double lt = c.hbar / std::sqrt(2.0 * c.mass * c.boltzmann * body.params.temperature);
  int within = 0;
  std::vector<double> lx, ly;
  for (const double sep : body.separations) {
    const double tau = rec.metric("tau." + format_double(sep));
    const double expected = (lt / sep) * (lt / sep) / body.params.gamma;
    if (std::isfinite(tau)) {
      if (std::abs(tau - expected) / expected < 0.05) ++within;
      lx.push_back(std::log(sep));
      ly.push_back(std::log(tau));
    }
  }
  double slope = std::nan("");
  if (lx.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(ly.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
    slope = sxy / sxx;
  }
  const bool ok = within >= 4 && std::abs(slope + 2.0) <= 0.1 && dt < 30.0;
  return {ok, std::to_string(within) + "/" + std::to_string(body.separations.size()) +
                  " bins within 5% (>= 4), exponent " + fmt(slope) + " (-2 +- 0.1), " + fmt(dt) + " s"};
}

Outcome two_particle() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = load_experiment("two-particle-product");
  const auto& body = std::get<TwoParticleExperiment>(spec.body);
  const auto grid = make_grid(body.grid.x_min, body.grid.x_max, body.grid.n_points);
  const auto& s1 = std::get<GroundStateRecipe>(body.states[0]);
  const auto& s2 = std::get<GroundStateRecipe>(body.states[1]);
  const auto psi = product_state(harmonic_ground_state(grid, s1.omega), harmonic_ground_state(grid, s2.omega));
  const auto rec = evolve_two_particle(psi, body.config);
  const double drift = rec.rows.back().density_drift;
  double norm_drift = 0.0;
  for (const auto& r : rec.rows) norm_drift = std::max(norm_drift, std::abs(r.norm - rec.rows.front().norm));
  hygiene.push_back({"two-particle", norm_drift, 0.0, 0.0});

  // Hand-computed sum_i lambda_i <Q_i> / sum_i <Q_i>.
  const double equal = (0.2 * 1.0 + 0.8 * 1.0) / (1.0 + 1.0);
  const double weighted = (0.2 * 3.0 + 0.8 * 1.0) / (3.0 + 1.0);
  const double e_equal = effective_lambda(std::vector<double>{0.2, 0.8}, std::vector<double>{1.0, 1.0}).value;
  const double e_weighted = effective_lambda(std::vector<double>{0.2, 0.8}, std::vector<double>{3.0, 1.0}).value;

  // The same 3:1 weighting arises from ground states with omega 3 and 1, since <Q> = hbar omega / 4.
  TwoParticleConfig cfg = body.config;
  cfg.schedules = {LambdaSchedule::constant(0.2), LambdaSchedule::constant(0.8)};
  cfg.potentials = {HarmonicPotential{3.0, 0.0}, HarmonicPotential{1.0, 0.0}};
  TwoParticlePropagator prop(grid, grid, cfg);
  const double e_state =
      prop.coupling(product_state(harmonic_ground_state(grid, 3.0), harmonic_ground_state(grid, 1.0)), 0.0).effective.value;
  const double dt = seconds_since(t0);

  const bool ok = rec.status == RunStatus::Completed && drift < 1e-5 && std::abs(equal - 0.5) < 1e-15 &&
                  std::abs(weighted - 0.35) < 1e-15 && std::abs(e_equal - equal) < 1e-12 &&
                  std::abs(e_weighted - weighted) < 1e-12 && std::abs(e_state - weighted) < 1e-6 &&
                  grid.size() == 128 && dt < 120.0;
  return {ok, "density drift per period " + fmt(drift) + " (< 1e-5), lambda_eff equal " + fmt(e_equal) +
                  ", 3:1 " + fmt(e_weighted) + ", from omega 3:1 states " + fmt(e_state) + ", " + fmt(dt) + " s"};
}

Outcome numerics_hygiene() {
  std::ostringstream detail;
  bool ok = true;
  std::vector<std::string> bad;
  for (const auto& h : hygiene) {
    const bool good = h.norm_drift < 1e-8 && h.continuity < 1e-3 && h.leakage < 1e-6;
    if (!good) {
      bad.push_back(h.run + " (norm " + fmt(h.norm_drift) + ", continuity " + fmt(h.continuity) + ", leakage " +
                    fmt(h.leakage) + ")");
    }
    ok = ok && good;
  }
  const double e1 = quantum_limit_error(1.0);
  const double e2 = quantum_limit_error(2.0);
  const double ratio = e1 / e2;
  ok = ok && ratio >= 3.0;
  detail << hygiene.size() - bad.size() << "/" << hygiene.size() << " runs within norm 1e-8, continuity 1e-3, leakage 1e-6";
  for (const auto& b : bad) detail << "; over limit: " << b;
  detail << "; dt-halving on the quantum limit: error " << fmt(e1) << " -> " << fmt(e2) << ", reduction x" << fmt(ratio)
         << " (>= 3)";
  return {ok, detail.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"decoherence ratio", decoherence_ratio},
      {"quantum limit", quantum_limit},
      {"classical limit", classical_limit},
      {"stationarity", stationarity},
      {"equivariance", equivariance},
      {"interference suppression", interference},
      {"master-equation scaling", master_scaling},
      {"two-particle", two_particle},
      {"numerics hygiene", numerics_hygiene},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << i + 1 << "  " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failures) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
