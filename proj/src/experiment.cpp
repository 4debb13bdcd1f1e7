#include "qcl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "qcl/errors.hpp"
#include "qcl/initial.hpp"
#include "qcl/observables.hpp"
#include "qcl/polar.hpp"
#include "qcl/trajectories.hpp"

namespace qcl {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Strict view of one JSON object: every key must be consumed before finish().
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SchemaError(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) throw SchemaError(at(key), "missing required key");
    used_.push_back(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) throw SchemaError(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw SchemaError(at(key), "expected a finite number");
    return d;
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }
  std::optional<double> optional_number(const std::string& key) {
    if (!has(key) || j_.at(key).is_null()) {
      if (has(key)) used_.push_back(key);
      return std::nullopt;
    }
    return number(key);
  }

  std::size_t count(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw SchemaError(at(key), "expected a non-negative integer");
    }
    return v.get<std::size_t>();
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    return has(key) ? count(key) : fallback;
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_number_integer()) throw SchemaError(at(key), "expected an integer");
    return v.get<int>();
  }

  std::string string(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) throw SchemaError(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_boolean()) throw SchemaError(at(key), "expected true or false");
    return v.get<bool>();
  }

  Reader object(const std::string& key) { return Reader(raw(key), at(key)); }

  const json& array(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) throw SchemaError(at(key), "expected an array");
    return v;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        throw SchemaError(at(key), "unknown key");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> used_;
};

template <class F>
auto validated(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
}

// ---- parsing -------------------------------------------------------------

GridSpec parse_grid(Reader r) {
  GridSpec g;
  g.x_min = r.number("x_min", g.x_min);
  g.x_max = r.number("x_max", g.x_max);
  g.n_points = r.count("n_points", g.n_points);
  r.finish();
  validated(r.path(), [&] { return make_grid(g.x_min, g.x_max, g.n_points); });
  return g;
}

PhysicalParams parse_physics(Reader r) {
  PhysicalParams p;
  p.hbar = r.number("hbar", p.hbar);
  p.mass = r.number("mass", p.mass);
  p.boltzmann = r.number("boltzmann", p.boltzmann);
  r.finish();
  validated(r.path(), [&] { p.validate(); return 0; });
  return p;
}

PureRecipe parse_recipe(Reader r) {
  const std::string type = r.string("type");
  PureRecipe out;
  if (type == "gaussian") {
    GaussianRecipe g;
    g.x0 = r.number("x0", g.x0);
    g.sigma = r.number("sigma", g.sigma);
    g.p0 = r.number("p0", g.p0);
    out = g;
  } else if (type == "ground_state") {
    GroundStateRecipe g;
    g.omega = r.number("omega", g.omega);
    g.center = r.number("center", g.center);
    out = g;
  } else if (type == "plane_wave") {
    out = PlaneWaveRecipe{r.integer("mode", 0)};
  } else {
    throw SchemaError(r.at("type"), "unknown state type '" + type + "'");
  }
  r.finish();
  return out;
}

cplx parse_weight(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw SchemaError(path, "expected a number or [re, im]");
}

InitialStateSpec parse_initial(const json& j, const std::string& path) {
  Reader r(j, path);
  InitialStateSpec spec;
  if (r.has("type") && j.at("type") == "superposition") {
    r.string("type");
    const auto& terms = r.array("terms");
    if (terms.empty()) throw SchemaError(r.at("terms"), "needs at least one term");
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const std::string tp = r.at("terms") + "[" + std::to_string(i) + "]";
      Reader t(terms[i], tp);
      SuperpositionTerm term;
      if (t.has("weight")) term.weight = parse_weight(t.raw("weight"), t.at("weight"));
      term.state = parse_recipe(t.object("state"));
      t.finish();
      spec.terms.push_back(std::move(term));
    }
    r.finish();
    return spec;
  }
  spec.terms.push_back({cplx{1.0, 0.0}, parse_recipe(Reader(j, path))});
  return spec;
}

PotentialSpec parse_potential(Reader r) {
  const std::string type = r.string("type");
  PotentialSpec out;
  if (type == "free") {
    out = FreePotential{};
  } else if (type == "harmonic") {
    HarmonicPotential h;
    h.omega = r.number("omega", h.omega);
    h.center = r.number("center", h.center);
    out = h;
  } else if (type == "barrier") {
    BarrierPotential b;
    b.height = r.number("height", b.height);
    b.width = r.number("width", b.width);
    b.center = r.number("center", b.center);
    out = b;
  } else {
    throw SchemaError(r.at("type"), "unknown potential type '" + type + "'");
  }
  r.finish();
  validated(r.path(), [&] { validate(out); return 0; });
  return out;
}

std::optional<LambdaSchedule> parse_schedule(const json& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  Reader r(j, path);
  const std::string type = r.string("type");
  std::optional<LambdaSchedule> out;
  validated(path, [&] {
    if (type == "constant") {
      out = LambdaSchedule::constant(r.number("value"));
    } else if (type == "exponential") {
      out = LambdaSchedule::exponential(r.number("tau"));
    } else if (type == "linear_ramp") {
      out = LambdaSchedule::linear_ramp(r.number("t_start", 0.0), r.number("t_end"));
    } else {
      throw SchemaError(r.at("type"), "unknown schedule type '" + type + "'");
    }
    return 0;
  });
  r.finish();
  return out;
}

std::vector<Check> parse_checks(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  std::vector<Check> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    Reader r(j[i], path + "[" + std::to_string(i) + "]");
    Check c;
    c.metric = r.string("metric");
    c.target = r.optional_number("target");
    c.rel_tol = r.optional_number("rel_tol");
    c.abs_tol = r.optional_number("abs_tol");
    c.min = r.optional_number("min");
    c.max = r.optional_number("max");
    r.finish();
    if (!c.target && !c.min && !c.max) {
      throw SchemaError(r.at("metric"), "check needs a target, min or max");
    }
    if (c.target && !c.rel_tol && !c.abs_tol) {
      throw SchemaError(r.at("target"), "target needs rel_tol or abs_tol");
    }
    out.push_back(std::move(c));
  }
  return out;
}

InvariantLimits parse_limits(Reader r) {
  InvariantLimits l;
  l.norm_drift = r.number("norm_drift", l.norm_drift);
  l.continuity_residual = r.number("continuity_residual", l.continuity_residual);
  l.boundary_leakage = r.number("boundary_leakage", l.boundary_leakage);
  l.frozen_fraction = r.number("frozen_fraction", l.frozen_fraction);
  l.ks_distance = r.number("ks_distance", l.ks_distance);
  r.finish();
  return l;
}

WaveExperiment parse_wave(Reader& r) {
  WaveExperiment w;
  w.grid = parse_grid(r.object("grid"));
  if (r.has("physics")) w.params = parse_physics(r.object("physics"));
  w.initial = parse_initial(r.raw("initial"), r.at("initial"));
  if (r.has("potential")) w.evolution.potential = parse_potential(r.object("potential"));

  Reader ev = r.object("evolution");
  w.evolution.dt = ev.number("dt");
  w.evolution.n_steps = ev.count("n_steps");
  w.evolution.record_every = ev.count("record_every", w.evolution.record_every);
  w.evolution.epsilon = ev.number("epsilon", w.evolution.epsilon);
  w.evolution.caustic_spectral_tail =
      ev.number("caustic_spectral_tail", w.evolution.caustic_spectral_tail);
  w.evolution.caustic_node_fraction =
      ev.number("caustic_node_fraction", w.evolution.caustic_node_fraction);
  ev.finish();
  validated(ev.path(), [&] { w.evolution.validate(); return 0; });

  if (r.has("schedule") && r.has("variants")) {
    throw SchemaError(r.at("variants"), "give either schedule or variants, not both");
  }
  if (r.has("variants")) {
    const auto& vs = r.array("variants");
    if (vs.empty()) throw SchemaError(r.at("variants"), "needs at least one variant");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      Reader v(vs[i], r.at("variants") + "[" + std::to_string(i) + "]");
      ScheduleVariant sv;
      sv.name = v.string("name");
      if (sv.name.empty() || sv.name.find_first_of("/\\. ,") != std::string::npos) {
        throw SchemaError(v.at("name"), "variant names must be non-empty without '/', '.', ',' or spaces");
      }
      for (const auto& other : w.variants) {
        if (other.name == sv.name) throw SchemaError(v.at("name"), "duplicate variant name");
      }
      sv.schedule = parse_schedule(v.raw("schedule"), v.at("schedule"));
      v.finish();
      w.variants.push_back(std::move(sv));
    }
  } else {
    ScheduleVariant sv;
    sv.schedule = r.has("schedule") ? parse_schedule(r.raw("schedule"), r.at("schedule"))
                                    : std::optional<LambdaSchedule>(LambdaSchedule::constant(0.0));
    w.variants.push_back(std::move(sv));
  }

  if (r.has("trajectories") && !r.raw("trajectories").is_null()) {
    Reader t = r.object("trajectories");
    TrajectorySpec ts;
    ts.count = t.count("count", ts.count);
    ts.seed = t.count("seed", ts.seed);
    ts.export_count = t.count("export_count", ts.export_count);
    t.finish();
    if (ts.count == 0) throw SchemaError(t.at("count"), "must be at least 1");
    w.trajectories = ts;
  }
  if (r.has("outputs")) {
    Reader o = r.object("outputs");
    if (o.has("fringe_window") && !o.raw("fringe_window").is_null()) {
      const auto& fw = o.array("fringe_window");
      if (fw.size() != 2 || !fw[0].is_number() || !fw[1].is_number() ||
          !(fw[0].get<double>() < fw[1].get<double>())) {
        throw SchemaError(o.at("fringe_window"), "expected [a, b] with a < b");
      }
      w.fringe_window = std::pair{fw[0].get<double>(), fw[1].get<double>()};
    }
    w.snapshot_final = o.boolean("snapshot_final", w.snapshot_final);
    o.finish();
  }
  validated(r.at("initial"), [&] {
    return build_state(w.initial, make_grid(w.grid.x_min, w.grid.x_max, w.grid.n_points), w.params);
  });
  return w;
}

TwoParticleExperiment parse_two_particle(Reader& r) {
  TwoParticleExperiment tp;
  tp.grid = parse_grid(r.object("grid"));
  validated(r.at("grid"), [&] {
    if (tp.grid.n_points > kMaxTwoParticleAxis) {
      throw ResourceError("two-particle grids are limited to 256 points per axis");
    }
    return 0;
  });
  tp.config.hbar = r.number("hbar", tp.config.hbar);
  const auto& ps = r.array("particles");
  if (ps.size() != 2) throw SchemaError(r.at("particles"), "expected exactly two particles");
  for (std::size_t i = 0; i < 2; ++i) {
    Reader p(ps[i], r.at("particles") + "[" + std::to_string(i) + "]");
    tp.states[i] = parse_recipe(p.object("state"));
    tp.config.masses[i] = p.number("mass", 1.0);
    if (p.has("potential")) tp.config.potentials[i] = parse_potential(p.object("potential"));
    if (p.has("schedule")) {
      auto s = parse_schedule(p.raw("schedule"), p.at("schedule"));
      if (!s) throw SchemaError(p.at("schedule"), "two-particle schedules cannot be null");
      tp.config.schedules[i] = *s;
    }
    p.finish();
  }
  Reader ev = r.object("evolution");
  tp.config.dt = ev.number("dt");
  tp.config.n_steps = ev.count("n_steps");
  tp.config.record_every = ev.count("record_every", tp.config.record_every);
  tp.config.epsilon = ev.number("epsilon", tp.config.epsilon);
  tp.config.caustic_spectral_tail =
      ev.number("caustic_spectral_tail", tp.config.caustic_spectral_tail);
  ev.finish();
  validated(ev.path(), [&] { tp.config.validate(); return 0; });
  return tp;
}

MasterExperiment parse_master(Reader& r) {
  MasterExperiment m;
  m.grid = parse_grid(r.object("grid"));
  validated(r.at("grid"), [&] {
    if (m.grid.n_points > kMaxDensityMatrixAxis) {
      throw ResourceError("density matrices are limited to 256 points per axis");
    }
    return 0;
  });
  if (r.has("physics")) m.params.constants = parse_physics(r.object("physics"));
  m.initial = parse_initial(r.raw("initial"), r.at("initial"));
  Reader bath = r.object("bath");
  m.params.gamma = bath.number("gamma", m.params.gamma);
  m.params.temperature = bath.number("temperature", m.params.temperature);
  m.include_drift = bath.boolean("include_drift", m.include_drift);
  bath.finish();
  validated(bath.path(), [&] { m.params.validate(); return 0; });

  Reader ev = r.object("evolution");
  m.dt = ev.number("dt");
  m.n_steps = ev.count("n_steps");
  m.record_every = ev.count("record_every", m.record_every);
  ev.finish();
  if (!(m.dt > 0.0)) throw SchemaError(ev.at("dt"), "must be positive");
  if (m.record_every == 0) throw SchemaError(ev.at("record_every"), "must be at least 1");

  const auto& seps = r.array("separations");
  for (std::size_t i = 0; i < seps.size(); ++i) {
    if (!seps[i].is_number() || !(seps[i].get<double>() > 0.0)) {
      throw SchemaError(r.at("separations") + "[" + std::to_string(i) + "]",
                        "expected a positive number");
    }
    m.separations.push_back(seps[i].get<double>());
  }
  if (r.has("outputs")) {
    Reader o = r.object("outputs");
    m.snapshot_every = o.count("snapshot_every", m.snapshot_every);
    o.finish();
  }
  validated(r.at("initial"), [&] {
    return build_state(m.initial, make_grid(m.grid.x_min, m.grid.x_max, m.grid.n_points),
                       m.params.constants);
  });
  return m;
}

CalculatorExperiment parse_calculator(Reader& r) {
  Reader d = r.object("decoherence");
  CalculatorExperiment c;
  c.params.mass = d.number("mass");
  c.params.temperature = d.number("temperature");
  c.params.gamma = d.number("gamma");
  c.params.separation = d.number("separation");
  d.finish();
  validated(d.path(), [&] { c.params.validate(); return 0; });
  return c;
}

// ---- serialization -------------------------------------------------------

json grid_json(const GridSpec& g) {
  return {{"x_min", g.x_min}, {"x_max", g.x_max}, {"n_points", g.n_points}};
}

json physics_json(const PhysicalParams& p) {
  return {{"hbar", p.hbar}, {"mass", p.mass}, {"boltzmann", p.boltzmann}};
}

json recipe_json(const PureRecipe& r) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GaussianRecipe>) {
          return {{"type", "gaussian"}, {"x0", s.x0}, {"sigma", s.sigma}, {"p0", s.p0}};
        } else if constexpr (std::is_same_v<T, GroundStateRecipe>) {
          return {{"type", "ground_state"}, {"omega", s.omega}, {"center", s.center}};
        } else {
          return {{"type", "plane_wave"}, {"mode", s.mode}};
        }
      },
      r);
}

json initial_json(const InitialStateSpec& s) {
  if (s.terms.size() == 1 && s.terms[0].weight == cplx{1.0, 0.0}) return recipe_json(s.terms[0].state);
  json terms = json::array();
  for (const auto& t : s.terms) {
    terms.push_back({{"weight", {t.weight.real(), t.weight.imag()}}, {"state", recipe_json(t.state)}});
  }
  return {{"type", "superposition"}, {"terms", terms}};
}

json potential_json(const PotentialSpec& p) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FreePotential>) {
          return {{"type", "free"}};
        } else if constexpr (std::is_same_v<T, HarmonicPotential>) {
          return {{"type", "harmonic"}, {"omega", s.omega}, {"center", s.center}};
        } else {
          return {{"type", "barrier"}, {"height", s.height}, {"width", s.width}, {"center", s.center}};
        }
      },
      p);
}

json schedule_json(const std::optional<LambdaSchedule>& s) {
  if (!s) return nullptr;
  return std::visit(
      [](const auto& f) -> json {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantLambda>) {
          return {{"type", "constant"}, {"value", f.value}};
        } else if constexpr (std::is_same_v<T, ExponentialLambda>) {
          return {{"type", "exponential"}, {"tau", f.tau}};
        } else {
          return {{"type", "linear_ramp"}, {"t_start", f.t_start}, {"t_end", f.t_end}};
        }
      },
      s->form());
}

json check_json(const Check& c) {
  json j{{"metric", c.metric}};
  if (c.target) j["target"] = *c.target;
  if (c.rel_tol) j["rel_tol"] = *c.rel_tol;
  if (c.abs_tol) j["abs_tol"] = *c.abs_tol;
  if (c.min) j["min"] = *c.min;
  if (c.max) j["max"] = *c.max;
  return j;
}

json body_json(const WaveExperiment& w) {
  json j{{"grid", grid_json(w.grid)},
         {"physics", physics_json(w.params)},
         {"initial", initial_json(w.initial)},
         {"potential", potential_json(w.evolution.potential)},
         {"evolution",
          {{"dt", w.evolution.dt},
           {"n_steps", w.evolution.n_steps},
           {"record_every", w.evolution.record_every},
           {"epsilon", w.evolution.epsilon},
           {"caustic_spectral_tail", w.evolution.caustic_spectral_tail},
           {"caustic_node_fraction", w.evolution.caustic_node_fraction}}}};
  json variants = json::array();
  for (const auto& v : w.variants) variants.push_back({{"name", v.name}, {"schedule", schedule_json(v.schedule)}});
  j["variants"] = variants;
  if (w.trajectories) {
    j["trajectories"] = {{"count", w.trajectories->count},
                         {"seed", w.trajectories->seed},
                         {"export_count", w.trajectories->export_count}};
  } else {
    j["trajectories"] = nullptr;
  }
  j["outputs"] = {{"fringe_window", w.fringe_window ? json{w.fringe_window->first, w.fringe_window->second}
                                                   : json(nullptr)},
                  {"snapshot_final", w.snapshot_final}};
  return j;
}

json body_json(const TwoParticleExperiment& tp) {
  json particles = json::array();
  for (std::size_t i = 0; i < 2; ++i) {
    particles.push_back({{"state", recipe_json(tp.states[i])},
                         {"mass", tp.config.masses[i]},
                         {"potential", potential_json(tp.config.potentials[i])},
                         {"schedule", schedule_json(tp.config.schedules[i])}});
  }
  return {{"grid", grid_json(tp.grid)},
          {"hbar", tp.config.hbar},
          {"particles", particles},
          {"evolution",
           {{"dt", tp.config.dt},
            {"n_steps", tp.config.n_steps},
            {"record_every", tp.config.record_every},
            {"epsilon", tp.config.epsilon},
            {"caustic_spectral_tail", tp.config.caustic_spectral_tail}}}};
}

json body_json(const MasterExperiment& m) {
  return {{"grid", grid_json(m.grid)},
          {"physics", physics_json(m.params.constants)},
          {"initial", initial_json(m.initial)},
          {"bath",
           {{"gamma", m.params.gamma},
            {"temperature", m.params.temperature},
            {"include_drift", m.include_drift}}},
          {"evolution", {{"dt", m.dt}, {"n_steps", m.n_steps}, {"record_every", m.record_every}}},
          {"separations", m.separations},
          {"outputs", {{"snapshot_every", m.snapshot_every}}}};
}

json body_json(const CalculatorExperiment& c) {
  return {{"decoherence",
           {{"mass", c.params.mass},
            {"temperature", c.params.temperature},
            {"gamma", c.params.gamma},
            {"separation", c.params.separation}}}};
}

// ---- running -------------------------------------------------------------

SpatialGrid grid_of(const GridSpec& g) { return make_grid(g.x_min, g.x_max, g.n_points); }

WaveState build_pure(const PureRecipe& recipe, const SpatialGrid& grid, const PhysicalParams& params) {
  return std::visit(
      [&](const auto& s) -> WaveState {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GaussianRecipe>) {
          return gaussian_packet(grid, s.x0, s.sigma, s.p0, params);
        } else if constexpr (std::is_same_v<T, GroundStateRecipe>) {
          return harmonic_ground_state(grid, s.omega, s.center, params);
        } else {
          return plane_wave(grid, s.mode);
        }
      },
      recipe);
}

int exit_code_for(const Error& e) {
  return e.kind() == ErrorKind::NumericalBlowup ? kExitBlowup : kExitConfig;
}

struct VariantResult {
  std::string prefix;
  std::map<std::string, double> metrics;
  std::map<std::string, Table> tables;
  std::vector<std::string> warnings;
  std::vector<CheckResult> invariants;
  RunStatus status = RunStatus::Completed;
  std::string message;
};

void add_invariant(VariantResult& out, const std::string& name, double value, double limit) {
  std::ostringstream exp;
  exp << "< " << format_double(limit);
  out.invariants.push_back({"invariant:" + out.prefix + name, value, exp.str(), value < limit});
}

Table state_table(const WaveState& psi) {
  Table t{{"x", "re", "im", "density"}, {}};
  for (std::size_t j = 0; j < psi.size(); ++j) {
    t.add_row({psi.grid.x(j), psi.values[j].real(), psi.values[j].imag(), std::norm(psi.values[j])});
  }
  return t;
}

VariantResult run_variant(const WaveExperiment& w, const ScheduleVariant& variant,
                          const InvariantLimits& limits, const RunOptions& options,
                          const std::string& prefix, const std::string& suffix) {
  VariantResult out;
  out.prefix = prefix;
  auto& m = out.metrics;
  const auto grid = grid_of(w.grid);
  const WaveState psi0 = build_state(w.initial, grid, w.params);
  EvolutionConfig config = w.evolution;
  config.schedule = variant.schedule;

  std::optional<TrajectorySpec> traj = w.trajectories;
  if (options.trajectories) {
    if (!traj) traj = TrajectorySpec{};
    traj->count = *options.trajectories;
  }
  if (traj && options.seed) traj->seed = *options.seed;

  std::optional<TrajectoryTracker> tracker;
  StepObserver observer;
  if (traj) {
    tracker.emplace(sample_initial(psi0, traj->count, traj->seed), psi0, w.params, config.epsilon,
                    config.record_every);
    observer = std::ref(*tracker);
  }

  const auto rec = evolve(psi0, config, w.params, observer);
  out.status = rec.status;
  out.message = rec.message;
  out.warnings = rec.warnings;

  Table series{{"t", "lambda", "norm", "mean_x", "mean_p", "sigma_x", "energy", "continuity_residual",
                "boundary_leakage", "node_fraction"},
               {}};
  double norm_drift = 0.0, max_cont = 0.0, max_leak = 0.0, max_node = 0.0;
  for (const auto& r : rec.rows) {
    series.add_row({r.t, r.lambda, r.norm, r.mean_x, r.mean_p, r.sigma_x, r.energy,
                    r.continuity_residual, r.boundary_leakage, r.node_fraction});
    norm_drift = std::max(norm_drift, std::abs(r.norm - rec.rows.front().norm));
    if (std::isfinite(r.continuity_residual)) max_cont = std::max(max_cont, r.continuity_residual);
    max_leak = std::max(max_leak, r.boundary_leakage);
    max_node = std::max(max_node, r.node_fraction);
  }
  out.tables["series" + suffix] = std::move(series);

  const auto& first = rec.rows.front();
  const auto& last = rec.rows.back();
  const WaveState& fin = rec.final_state;
  m["steps_taken"] = static_cast<double>(rec.steps_taken);
  m["completed"] = rec.status == RunStatus::Completed ? 1.0 : 0.0;
  m["stability_limit"] = EvolutionConfig::stability_limit(grid, w.params);
  m["initial.sigma_x"] = first.sigma_x;
  m["initial.mean_x"] = first.mean_x;
  m["final.t"] = last.t;
  m["final.norm"] = last.norm;
  m["final.mean_x"] = last.mean_x;
  m["final.mean_p"] = last.mean_p;
  m["final.sigma_x"] = last.sigma_x;
  m["final.energy"] = last.energy;
  m["sigma_ratio"] = last.sigma_x / first.sigma_x;
  m["norm_drift"] = norm_drift;
  m["max_continuity_residual"] = max_cont;
  m["max_boundary_leakage"] = max_leak;
  m["max_node_fraction"] = max_node;
  m["density_drift"] = density_linf_difference(fin, psi0);
  m["final.spectral_tail"] = fin.diagnostics.spectral_tail;

  {
    const auto fields = decompose(fin, w.params, config.epsilon);
    const auto v = evaluate(config.potential, grid, w.params);
    double max_r = 0.0;
    for (const double r : fields.R) max_r = std::max(max_r, r);
    const double e = last.energy;
    double dev = 0.0;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (fields.R[j] > 1e-6 * max_r) dev = std::max(dev, std::abs(fields.Q[j] + v[j] - e));
    }
    m["quantum_hj_deviation"] = dev / std::abs(e);
  }

  if (w.fringe_window) {
    const auto vis = fringe_visibility(fin, w.fringe_window->first, w.fringe_window->second);
    const bool reached = rec.status == RunStatus::Completed;
    m["visibility_applicable"] = vis ? 1.0 : 0.0;
    m["visibility_at_stop"] = vis ? *vis : kNaN;
    m["visibility"] = (vis && reached) ? *vis : kNaN;
  }

  add_invariant(out, "norm_drift", norm_drift, limits.norm_drift);
  add_invariant(out, "max_continuity_residual", max_cont, limits.continuity_residual);
  add_invariant(out, "max_boundary_leakage", max_leak, limits.boundary_leakage);

  if (tracker) {
    tracker->finalize(fin);
    const auto& ens = tracker->ensemble();
    m["trajectories.count"] = static_cast<double>(ens.size());
    m["trajectories.seed"] = static_cast<double>(ens.rng_seed);
    m["ks_max"] = tracker->max_ks();
    m["frozen_fraction"] = ens.frozen_fraction();
    m["wraps"] = static_cast<double>(ens.wraps);
    m["ordering_violations"] =
        static_cast<double>(ordering_violations(tracker->initial_positions(), ens.positions));
    Table ks{{"t", "ks"}, {}};
    for (const auto& s : tracker->ks_history()) ks.add_row({s.t, s.ks});
    out.tables["ks" + suffix] = std::move(ks);
    const std::size_t k = std::min(traj->export_count, ens.size());
    if (k > 0) {
      Table paths;
      paths.columns.push_back("t");
      for (std::size_t i = 0; i < k; ++i) paths.columns.push_back("x" + std::to_string(i));
      for (std::size_t r = 0; r < tracker->history().size(); ++r) {
        std::vector<double> row{tracker->history_times()[r]};
        row.insert(row.end(), tracker->history()[r].begin(), tracker->history()[r].begin() + static_cast<std::ptrdiff_t>(k));
        paths.add_row(std::move(row));
      }
      out.tables["trajectories" + suffix] = std::move(paths);
    }
    add_invariant(out, "frozen_fraction", ens.frozen_fraction(), limits.frozen_fraction);
    add_invariant(out, "ks_max", tracker->max_ks(), limits.ks_distance);
  }
  if (w.snapshot_final) out.tables["state_final" + suffix] = state_table(fin);
  return out;
}

void run_wave(const WaveExperiment& w, const ExperimentSpec& spec, const RunOptions& options,
              RunRecord& record) {
  const bool single = w.variants.size() == 1;
  std::vector<std::optional<VariantResult>> results(w.variants.size());
  std::vector<std::string> errors(w.variants.size());
  std::vector<int> error_codes(w.variants.size(), 0);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < w.variants.size(); i = next++) {
      const auto& v = w.variants[i];
      try {
        results[i] = run_variant(w, v, spec.limits, options, single ? "" : v.name + ".",
                                 single ? "" : "_" + v.name);
      } catch (const Error& e) {
        errors[i] = e.what();
        error_codes[i] = exit_code_for(e);
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, w.variants.size());
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < w.variants.size(); ++i) {
    const std::string label = single ? "" : w.variants[i].name + ": ";
    if (!results[i]) {
      record.status = "error";
      record.message += label + errors[i] + "\n";
      record.exit_code = std::max(record.exit_code, error_codes[i]);
      continue;
    }
    auto& r = *results[i];
    for (auto& [k, v] : r.metrics) record.metrics[r.prefix + k] = v;
    for (auto& [k, t] : r.tables) record.tables[k] = std::move(t);
    for (auto& wmsg : r.warnings) record.warnings.push_back(label + wmsg);
    for (auto& c : r.invariants) record.checks.push_back(std::move(c));
    if (r.status == RunStatus::Blowup) {
      record.status = "blowup";
      record.exit_code = std::max<int>(record.exit_code, kExitBlowup);
      record.message += label + r.message + "\n";
    } else if (r.status == RunStatus::Caustic) {
      if (record.status == "completed") record.status = "caustic";
      record.message += label + r.message + "\n";
      record.checks.push_back({"invariant:" + r.prefix + "no_caustic", 0.0, "run reaches its horizon", false});
    }
  }
}

void run_two_particle(const TwoParticleExperiment& tp, const ExperimentSpec& spec, RunRecord& record) {
  const auto grid = grid_of(tp.grid);
  const PhysicalParams p1{tp.config.hbar, tp.config.masses[0], 1.0};
  const PhysicalParams p2{tp.config.hbar, tp.config.masses[1], 1.0};
  auto psi = product_state(build_pure(tp.states[0], grid, p1), build_pure(tp.states[1], grid, p2));
  normalize(psi);
  const auto rec = evolve_two_particle(psi, tp.config);
  Table series{{"t", "lambda1", "lambda2", "lambda_eff", "norm", "mean_x1", "mean_x2", "sigma_x1",
                "sigma_x2", "density_drift"},
               {}};
  double norm_drift = 0.0, max_drift = 0.0;
  for (const auto& r : rec.rows) {
    series.add_row({r.t, r.lambda1, r.lambda2, r.lambda_eff, r.norm, r.mean_x1, r.mean_x2,
                    r.sigma_x1, r.sigma_x2, r.density_drift});
    norm_drift = std::max(norm_drift, std::abs(r.norm - rec.rows.front().norm));
    max_drift = std::max(max_drift, r.density_drift);
  }
  record.tables["series"] = std::move(series);
  auto& m = record.metrics;
  TwoParticlePropagator prop(grid, grid, tp.config);
  const auto c0 = prop.coupling(psi, 0.0);
  m["mean_q1"] = c0.mean_q[0];
  m["mean_q2"] = c0.mean_q[1];
  m["lambda_eff.initial"] = c0.degenerate ? kNaN : c0.effective.value;
  m["lambda_eff.final"] = rec.rows.back().lambda_eff;
  m["final.t"] = rec.rows.back().t;
  m["final.norm"] = rec.rows.back().norm;
  m["norm_drift"] = norm_drift;
  m["density_drift"] = rec.rows.back().density_drift;
  m["max_density_drift"] = max_drift;
  m["steps_taken"] = static_cast<double>(rec.steps_taken);
  std::ostringstream exp;
  exp << "< " << format_double(spec.limits.norm_drift);
  record.checks.push_back({"invariant:norm_drift", norm_drift, exp.str(), norm_drift < spec.limits.norm_drift});
  if (rec.status == RunStatus::Blowup) {
    record.status = "blowup";
    record.exit_code = kExitBlowup;
    record.message = rec.message;
  } else if (rec.status == RunStatus::Caustic) {
    record.status = "caustic";
    record.message = rec.message;
    record.checks.push_back({"invariant:no_caustic", 0.0, "run reaches its horizon", false});
  }
}

void run_master(const MasterExperiment& me, RunRecord& record) {
  const auto grid = grid_of(me.grid);
  auto rho = from_pure(build_state(me.initial, grid, me.params.constants));
  std::vector<DensityMatrixState> history{rho};
  const double tr0 = rho.trace().real();
  double trace_drift = 0.0, herm = 0.0;
  std::size_t snapshots = 0;
  const auto snapshot = [&](const DensityMatrixState& s, std::size_t index) {
    if (me.snapshot_every == 0 || index % me.snapshot_every != 0) return;
    Table t;
    for (std::size_t k = 0; k < s.n(); ++k) t.columns.push_back("c" + std::to_string(k));
    const auto a = s.abs_values();
    for (std::size_t j = 0; j < s.n(); ++j) {
      t.add_row(std::vector<double>(a.begin() + static_cast<std::ptrdiff_t>(j * s.n()),
                                    a.begin() + static_cast<std::ptrdiff_t>((j + 1) * s.n())));
    }
    record.tables["rho_abs_" + std::to_string(snapshots++)] = std::move(t);
  };
  snapshot(rho, 0);
  for (std::size_t s = 0; s < me.n_steps; ++s) {
    rho = master_step(rho, me.params, me.dt, me.include_drift);
    trace_drift = std::max(trace_drift, std::abs(rho.trace().real() - tr0));
    herm = std::max(herm, rho.hermiticity_error());
    if ((s + 1) % me.record_every == 0 || s + 1 == me.n_steps) {
      history.push_back(rho);
      snapshot(rho, history.size() - 1);
    }
  }
  for (const auto& w : rho.warnings) record.warnings.push_back(w);

  const double hw = 0.5 * grid.dx();
  Table series;
  series.columns = {"t", "trace", "hermiticity_error"};
  for (const double sep : me.separations) series.columns.push_back("coherence_" + format_double(sep));
  for (const auto& h : history) {
    std::vector<double> row{h.t, h.trace().real(), h.hermiticity_error()};
    for (const double sep : me.separations) row.push_back(mean_coherence(h, sep, hw));
    series.add_row(std::move(row));
  }
  record.tables["coherence"] = std::move(series);

  auto& m = record.metrics;
  m["trace_drift"] = trace_drift;
  m["hermiticity_error"] = herm;
  m["decoherence_coefficient"] = me.params.decoherence_coefficient();
  m["thermal_wavelength"] = me.params.thermal_wavelength();
  const auto fit = coherence_halftime(history, me.separations, hw);
  std::size_t within = 0;
  Table taus{{"separation", "tau", "tau_expected", "relative_error"}, {}};
  for (const auto& b : fit.bins) {
    const double lt = me.params.thermal_wavelength();
    const double expected = lt * lt / (me.params.gamma * b.separation * b.separation);
    const double rel = std::abs(b.tau - expected) / expected;
    const std::string key = format_double(b.separation);
    m["tau." + key] = b.tau;
    m["tau_expected." + key] = expected;
    if (b.resolved && rel < 0.05) ++within;
    taus.add_row({b.separation, b.tau, expected, b.resolved ? rel : kNaN});
  }
  record.tables["halftimes"] = std::move(taus);
  m["bins_within_5pct"] = static_cast<double>(within);
  m["bins_resolved"] = static_cast<double>(fit.resolved);
  m["exponent"] = fit.exponent;
  m["coefficient"] = fit.coefficient;
  record.checks.push_back({"invariant:hermiticity_error", herm, "< 1e-12", herm < 1e-12});
}

void run_calculator(const CalculatorExperiment& c, RunRecord& record) {
  const auto d = decoherence_time(c.params, PhysicalParams::si_units(c.params.mass));
  record.metrics["thermal_wavelength"] = d.thermal_wavelength;
  record.metrics["tau_r"] = d.tau_r;
  record.metrics["tau_d"] = d.tau_d;
  record.metrics["ratio"] = d.ratio;
}

CheckResult evaluate_check(const Check& c, const std::map<std::string, double>& metrics) {
  CheckResult r;
  r.name = c.metric;
  std::ostringstream exp;
  bool ok = true;
  const auto it = metrics.find(c.metric);
  r.value = it == metrics.end() ? kNaN : it->second;
  if (c.target) {
    double tol = 0.0;
    if (c.rel_tol) tol = std::max(tol, *c.rel_tol * std::abs(*c.target));
    if (c.abs_tol) tol = std::max(tol, *c.abs_tol);
    exp << "|x - " << format_double(*c.target) << "| <= " << format_double(tol);
    ok = ok && std::abs(r.value - *c.target) <= tol;
  }
  if (c.min) {
    exp << (exp.tellp() > 0 ? ", " : "") << ">= " << format_double(*c.min);
    ok = ok && r.value >= *c.min;
  }
  if (c.max) {
    exp << (exp.tellp() > 0 ? ", " : "") << "<= " << format_double(*c.max);
    ok = ok && r.value <= *c.max;
  }
  if (it == metrics.end()) exp << " (metric missing)";
  r.expectation = exp.str();
  r.passed = ok && std::isfinite(r.value);
  return r;
}

// ---- built-ins -----------------------------------------------------------

json gaussian(double x0, double sigma, double p0) {
  return {{"type", "gaussian"}, {"x0", x0}, {"sigma", sigma}, {"p0", p0}};
}

json rel_check(const std::string& metric, double target, double tol) {
  return {{"metric", metric}, {"target", target}, {"rel_tol", tol}};
}

json builtin_table(const std::string& name) {
  const json wide_grid{{"x_min", -20.0}, {"x_max", 20.0}, {"n_points", 1024}};
  // dt sits below the stability limit dx^2 m / (hbar pi) ~ 4.9e-4 of this grid.
  const json free_evolution{{"dt", 2.5e-4}, {"n_steps", 8000}, {"record_every", 50}};
  if (name == "free-dispersion-quantum") {
    return {{"name", name},
            {"description", "Free Gaussian at lambda = 0 spreading to sqrt(2) sigma0 at t = 2 m sigma0^2 / hbar, "
                            "with co-evolved trajectories"},
            {"kind", "wave"},
            {"grid", wide_grid},
            {"initial", gaussian(0.0, 1.0, 1.0)},
            {"potential", {{"type", "free"}}},
            {"schedule", {{"type", "constant"}, {"value", 0.0}}},
            {"evolution", free_evolution},
            {"trajectories", {{"count", 10000}, {"seed", 1}, {"export_count", 200}}},
            {"checks", {rel_check("final.sigma_x", std::sqrt(2.0), 1e-3), rel_check("final.mean_x", 2.0, 1e-3)}}};
  }
  if (name == "free-rigid-classical") {
    return {{"name", name},
            {"description", "Free Gaussian at lambda = 1: rigid translation without spreading"},
            {"kind", "wave"},
            {"grid", wide_grid},
            {"initial", gaussian(0.0, 1.0, 1.0)},
            {"potential", {{"type", "free"}}},
            {"schedule", {{"type", "constant"}, {"value", 1.0}}},
            {"evolution", free_evolution},
            {"checks", {rel_check("sigma_ratio", 1.0, 1e-3), rel_check("final.mean_x", 2.0, 1e-3)}}};
  }
  if (name == "harmonic-stationary") {
    const double period = 2.0 * std::acos(-1.0);
    return {{"name", name},
            {"description", "Harmonic ground state over one period at lambda = 0"},
            {"kind", "wave"},
            {"grid", {{"x_min", -10.0}, {"x_max", 10.0}, {"n_points", 256}}},
            {"initial", {{"type", "ground_state"}, {"omega", 1.0}, {"center", 0.0}}},
            {"potential", {{"type", "harmonic"}, {"omega", 1.0}, {"center", 0.0}}},
            {"schedule", {{"type", "constant"}, {"value", 0.0}}},
            {"evolution", {{"dt", period / 6000.0}, {"n_steps", 6000}, {"record_every", 100}}},
            {"checks",
             {{{"metric", "density_drift"}, {"max", 1e-6}},
              {{"metric", "quantum_hj_deviation"}, {"max", 1e-4}},
              rel_check("final.energy", 0.5, 1e-6)}}};
  }
  if (name == "interference-suppression") {
    return {{"name", name},
            {"description", "Two counter-propagating packets meeting at the origin, with lambda = 0 "
                            "and with lambda ramped to 1 at 60% of the flight time"},
            {"kind", "wave"},
            {"grid", wide_grid},
            {"initial",
             {{"type", "superposition"},
              {"terms",
               {{{"weight", 1.0}, {"state", gaussian(-5.0, 1.0, 2.0)}},
                {{"weight", 1.0}, {"state", gaussian(5.0, 1.0, -2.0)}}}}}},
            {"potential", {{"type", "free"}}},
            {"variants",
             {{{"name", "quantum"}, {"schedule", {{"type", "constant"}, {"value", 0.0}}}},
              {{"name", "ramp"}, {"schedule", {{"type", "linear_ramp"}, {"t_start", 0.0}, {"t_end", 1.5}}}}}},
            {"evolution", {{"dt", 2.5e-4}, {"n_steps", 10000}, {"record_every", 100}}},
            {"outputs", {{"fringe_window", {-3.0, 3.0}}, {"snapshot_final", true}}},
            {"checks",
             {{{"metric", "quantum.visibility"}, {"min", 0.9}},
              {{"metric", "ramp.visibility"}, {"max", 0.2}}}}};
  }
  if (name == "two-particle-product") {
    const double period = 2.0 * std::acos(-1.0);
    const json particle{{"state", {{"type", "ground_state"}, {"omega", 1.0}, {"center", 0.0}}},
                        {"mass", 1.0},
                        {"potential", {{"type", "harmonic"}, {"omega", 1.0}, {"center", 0.0}}},
                        {"schedule", {{"type", "constant"}, {"value", 0.0}}}};
    return {{"name", name},
            {"description", "Separable harmonic ground state of two particles over one period at lambda = 0"},
            {"kind", "two_particle"},
            {"grid", {{"x_min", -6.0}, {"x_max", 6.0}, {"n_points", 128}}},
            {"particles", {particle, particle}},
            {"evolution", {{"dt", period / 2000.0}, {"n_steps", 2000}, {"record_every", 100}}},
            {"checks", {{{"metric", "density_drift"}, {"max", 1e-5}}}}};
  }
  if (name == "decoherence-scaling") {
    json checks = {{{"metric", "bins_within_5pct"}, {"min", 4.0}},
                   {{"metric", "exponent"}, {"target", -2.0}, {"abs_tol", 0.1}}};
    return {{"name", name},
            {"description", "Decoherence-only master equation; 1/e coherence times against separation"},
            {"kind", "master"},
            {"grid", {{"x_min", -8.0}, {"x_max", 8.0}, {"n_points", 128}}},
            {"physics", {{"hbar", 1.0}, {"mass", 1.0}, {"boltzmann", 1.0}}},
            {"initial", {{"type", "plane_wave"}, {"mode", 0}}},
            {"bath", {{"gamma", 1.0}, {"temperature", 0.5}, {"include_drift", false}}},
            {"evolution", {{"dt", 0.002}, {"n_steps", 2500}, {"record_every", 25}}},
            {"separations", {0.5, 1.0, 1.5, 2.0, 3.0}},
            {"outputs", {{"snapshot_every", 25}}},
            {"checks", checks}};
  }
  if (name == "decoherence-si-calculator") {
    return {{"name", name},
            {"description", "1 g at 300 K separated by 1 cm, relaxation time 1e17 s"},
            {"kind", "calculator"},
            {"decoherence", {{"mass", 1e-3}, {"temperature", 300.0}, {"gamma", 1e-17}, {"separation", 1e-2}}},
            {"checks",
             {{{"metric", "ratio"}, {"min", 1e-41}, {"max", 1e-39}},
              {{"metric", "tau_d"}, {"min", 1e-24}, {"max", 1e-22}}}}};
  }
  return nullptr;
}

}  // namespace

std::string ExperimentSpec::kind() const {
  switch (body.index()) {
    case 0: return "wave";
    case 1: return "two_particle";
    case 2: return "master";
    default: return "calculator";
  }
}

ExperimentSpec parse_experiment(const json& doc) {
  Reader r(doc, "");
  ExperimentSpec spec;
  spec.name = r.string("name");
  if (spec.name.empty() || spec.name.find_first_of("/\\") != std::string::npos || spec.name == "." ||
      spec.name == "..") {
    throw SchemaError("name", "must be a non-empty file name");
  }
  spec.description = r.string("description", "");
  const std::string kind = r.string("kind", "wave");
  if (kind == "wave") {
    spec.body = parse_wave(r);
  } else if (kind == "two_particle") {
    spec.body = parse_two_particle(r);
  } else if (kind == "master") {
    spec.body = parse_master(r);
  } else if (kind == "calculator") {
    spec.body = parse_calculator(r);
  } else {
    throw SchemaError("kind", "unknown experiment kind '" + kind + "'");
  }
  if (r.has("checks")) spec.checks = parse_checks(r.raw("checks"), "checks");
  if (r.has("limits")) spec.limits = parse_limits(r.object("limits"));
  r.finish();
  return spec;
}

json to_json(const ExperimentSpec& spec) {
  json j = std::visit([](const auto& b) { return body_json(b); }, spec.body);
  j["name"] = spec.name;
  j["description"] = spec.description;
  j["kind"] = spec.kind();
  json checks = json::array();
  for (const auto& c : spec.checks) checks.push_back(check_json(c));
  j["checks"] = checks;
  j["limits"] = {{"norm_drift", spec.limits.norm_drift},
                 {"continuity_residual", spec.limits.continuity_residual},
                 {"boundary_leakage", spec.limits.boundary_leakage},
                 {"frozen_fraction", spec.limits.frozen_fraction},
                 {"ks_distance", spec.limits.ks_distance}};
  return j;
}

std::vector<std::string> builtin_names() {
  return {"free-dispersion-quantum", "free-rigid-classical", "harmonic-stationary",
          "interference-suppression", "two-particle-product", "decoherence-scaling",
          "decoherence-si-calculator"};
}

bool is_builtin(const std::string& name) {
  const auto names = builtin_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

json builtin_json(const std::string& name) {
  auto j = builtin_table(name);
  if (j.is_null()) throw ConfigError("no built-in experiment named '" + name + "'");
  return j;
}

ExperimentSpec load_experiment(const std::string& name_or_path) {
  if (is_builtin(name_or_path)) return parse_experiment(builtin_json(name_or_path));
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("'" + name_or_path + "' is neither a built-in experiment nor a readable file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("<document>", e.what());
  }
  return parse_experiment(doc);
}

WaveState build_state(const InitialStateSpec& spec, const SpatialGrid& grid, const PhysicalParams& params) {
  if (spec.terms.empty()) throw ConfigError("initial state has no terms");
  WaveState psi = build_pure(spec.terms[0].state, grid, params);
  for (auto& v : psi.values) v *= spec.terms[0].weight;
  for (std::size_t i = 1; i < spec.terms.size(); ++i) {
    const WaveState next = build_pure(spec.terms[i].state, grid, params);
    for (std::size_t j = 0; j < psi.size(); ++j) psi.values[j] += spec.terms[i].weight * next.values[j];
  }
  if (psi.norm() < kDegenerateNorm) throw DegenerateStateError("initial superposition has zero norm");
  normalize(psi);
  return psi;
}

RunRecord run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  RunRecord record;
  record.name = spec.name;
  record.kind = spec.kind();
  record.config = to_json(spec);
  if (options.seed) record.config["run_options"]["seed"] = *options.seed;
  if (options.trajectories) record.config["run_options"]["trajectories"] = *options.trajectories;
  try {
    std::visit(
        [&](const auto& body) {
          using T = std::decay_t<decltype(body)>;
          if constexpr (std::is_same_v<T, WaveExperiment>) {
            run_wave(body, spec, options, record);
          } else if constexpr (std::is_same_v<T, TwoParticleExperiment>) {
            run_two_particle(body, spec, record);
          } else if constexpr (std::is_same_v<T, MasterExperiment>) {
            run_master(body, record);
          } else {
            run_calculator(body, record);
          }
        },
        spec.body);
  } catch (const Error& e) {
    record.status = "error";
    record.message = e.what();
    record.exit_code = exit_code_for(e);
  }
  if (record.status != "error") {
    for (const auto& c : spec.checks) record.checks.push_back(evaluate_check(c, record.metrics));
  }
  while (!record.message.empty() && record.message.back() == '\n') record.message.pop_back();
  if (record.exit_code == 0) {
    const bool failed = std::any_of(record.checks.begin(), record.checks.end(),
                                    [](const CheckResult& c) { return !c.passed; });
    if (failed) record.exit_code = kExitInvariant;
  }
  if (!options.output_dir.empty()) write_record(record, options.output_dir / spec.name);
  return record;
}

ExperimentSpec make_lambda_scan(const ExperimentSpec& spec, const std::vector<double>& values) {
  auto* w = std::get_if<WaveExperiment>(&spec.body);
  if (!w) throw ConfigError("lambda scans apply to single-particle wave experiments only");
  if (values.empty()) throw ConfigError("lambda scan needs at least one value");
  ExperimentSpec out = spec;
  auto& body = std::get<WaveExperiment>(out.body);
  body.variants.clear();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 1.0)) throw ConfigError("lambda values must lie in [0, 1]");
    body.variants.push_back({"lambda" + std::to_string(i), LambdaSchedule::constant(values[i])});
  }
  out.checks.clear();
  out.name = spec.name + "-scan";
  return out;
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("QCLIMIT_OUTPUT_DIR"); env && *env) return env;
  return "qclimit-runs";
}

}  // namespace qcl
