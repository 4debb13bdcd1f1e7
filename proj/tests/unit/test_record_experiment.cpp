#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "qcl/errors.hpp"
#include "qcl/experiment.hpp"
#include "qcl/record.hpp"

using namespace qcl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("qclimit-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

json small_wave() {
  return json::parse(R"({
    "name": "small",
    "grid": {"x_min": -10, "x_max": 10, "n_points": 256},
    "initial": {"type": "gaussian", "x0": 0, "sigma": 1, "p0": 0.5},
    "evolution": {"dt": 0.002, "n_steps": 100, "record_every": 20},
    "trajectories": {"count": 4000, "seed": 4, "export_count": 5}
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string schema_key(const json& doc) {
  try {
    parse_experiment(doc);
  } catch (const SchemaError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("doubles round-trip through their text form bit for bit") {
  std::mt19937_64 gen(123);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  for (int i = 0; i < 5000; ++i) {
    const double v = std::ldexp(mant(gen), expo(gen));
    const double back = parse_double(format_double(v));
    CHECK(std::memcmp(&v, &back, sizeof v) == 0);
  }
  for (const double v : {0.0, -0.0, 5e-324, std::numeric_limits<double>::max(), 0.1, 1.0 / 3.0}) {
    const double back = parse_double(format_double(v));
    CHECK(std::memcmp(&v, &back, sizeof v) == 0);
  }
  CHECK(std::isnan(parse_double(format_double(std::numeric_limits<double>::quiet_NaN()))));
  CHECK(parse_double("-inf") == -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(parse_double("1.0x"), SchemaError);
}

TEST_CASE("csv tables round-trip including non-finite cells") {
  Table t{{"t", "value"}, {}};
  t.add_row({0.0, 0.1});
  t.add_row({1e-300, std::numeric_limits<double>::quiet_NaN()});
  t.add_row({2.5, -std::numeric_limits<double>::infinity()});
  std::stringstream ss;
  write_csv(t, ss);
  CHECK(ss.str().rfind("# qclimit series v1\nt,value\n", 0) == 0);
  CHECK(read_csv(ss) == t);
  CHECK_THROWS_AS(t.add_row({1.0}), ShapeError);
  CHECK(t.column("value") == 1);
  CHECK_THROWS_AS(t.column("nope"), std::out_of_range);
}

TEST_CASE("a written run record reads back field-identical") {
  const auto dir = scratch("roundtrip");
  const auto rec = run_experiment(parse_experiment(small_wave()), {dir, std::nullopt, std::nullopt, 1});
  CHECK(rec.exit_code == 0);
  CHECK(fs::exists(dir / "small" / "summary.json"));
  CHECK(fs::exists(dir / "small" / "series.csv"));
  CHECK(fs::exists(dir / "small" / "trajectories.csv"));
  CHECK(read_record(dir / "small") == rec);
  fs::remove_all(dir);
}

TEST_CASE("master and calculator records round-trip") {
  const auto dir = scratch("roundtrip2");
  auto master = builtin_json("decoherence-scaling");
  master["grid"]["n_points"] = 32;
  master["evolution"]["n_steps"] = 200;
  master["checks"] = json::array();
  const auto a = run_experiment(parse_experiment(master), {dir, std::nullopt, std::nullopt, 1});
  CHECK(read_record(dir / "decoherence-scaling") == a);
  CHECK(a.tables.count("rho_abs_0") == 1);
  const auto b = run_experiment(load_experiment("decoherence-si-calculator"), {dir, std::nullopt, std::nullopt, 1});
  CHECK(read_record(dir / "decoherence-si-calculator") == b);
  CHECK(b.exit_code == 0);
  fs::remove_all(dir);
}

TEST_CASE("identical spec and seed produce identical csv bytes") {
  const auto d1 = scratch("repro1"), d2 = scratch("repro2");
  const auto spec = parse_experiment(small_wave());
  run_experiment(spec, {d1, std::nullopt, std::nullopt, 1});
  run_experiment(spec, {d2, std::nullopt, std::nullopt, 1});
  for (const auto* f : {"series.csv", "trajectories.csv", "ks.csv", "summary.json"}) {
    CHECK(slurp(d1 / "small" / f) == slurp(d2 / "small" / f));
  }
  run_experiment(spec, {d2, 99, std::nullopt, 1});
  CHECK(slurp(d1 / "small" / "trajectories.csv") != slurp(d2 / "small" / "trajectories.csv"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("unknown and malformed keys name their path") {
  auto doc = small_wave();
  doc["evolution"]["time_step"] = 0.1;
  CHECK(schema_key(doc) == "evolution.time_step");
  doc = small_wave();
  doc["colour"] = "red";
  CHECK(schema_key(doc) == "colour");
  doc = small_wave();
  doc["evolution"].erase("dt");
  CHECK(schema_key(doc) == "evolution.dt");
  doc = small_wave();
  doc["grid"]["n_points"] = "many";
  CHECK(schema_key(doc) == "grid.n_points");
  doc = small_wave();
  doc["grid"]["n_points"] = 100;
  CHECK(schema_key(doc) == "grid");
  doc = small_wave();
  doc["initial"]["type"] = "lorentzian";
  CHECK(schema_key(doc) == "initial.type");
  doc = small_wave();
  doc["schedule"] = {{"type", "exponential"}, {"tau", -1.0}};
  CHECK(schema_key(doc) == "schedule");
  doc = small_wave();
  doc["trajectories"]["count"] = -3;
  CHECK(schema_key(doc) == "trajectories.count");
  doc = small_wave();
  doc["checks"] = json::array({{{"metric", "final.sigma_x"}, {"target", 1.0}}});
  CHECK(schema_key(doc) == "checks[0].target");
  doc = small_wave();
  doc["initial"] = json::parse(R"({"type": "superposition", "terms": [
      {"weight": 1, "state": {"type": "gaussian", "x0": 0, "sigma": 1}},
      {"weight": -1, "state": {"type": "gaussian", "x0": 0, "sigma": 1}}]})");
  CHECK(schema_key(doc) == "initial");
  doc = small_wave();
  doc["variants"] = json::array({{{"name", "a"}, {"schedule", nullptr}}});
  doc["schedule"] = nullptr;
  CHECK(schema_key(doc) == "variants");
  doc = small_wave();
  doc["kind"] = "three_body";
  CHECK(schema_key(doc) == "kind");
}

TEST_CASE("resolved configuration re-parses to itself for every built-in") {
  for (const auto& name : builtin_names()) {
    CAPTURE(name);
    const auto spec = load_experiment(name);
    const auto echo = to_json(spec);
    CHECK(to_json(parse_experiment(echo)) == echo);
    CHECK(spec.name == name);
  }
  CHECK(builtin_names().size() == 7);
  CHECK_THROWS_AS(builtin_json("nope"), ConfigError);
  CHECK_THROWS_AS(load_experiment("/nonexistent/spec.json"), ConfigError);
}

TEST_CASE("the echo materializes defaults") {
  const auto echo = to_json(parse_experiment(small_wave()));
  CHECK(echo["evolution"]["epsilon"] == 1e-8);
  CHECK(echo["variants"][0]["schedule"]["type"] == "constant");
  CHECK(echo["physics"]["hbar"] == 1.0);
  CHECK(echo["potential"]["type"] == "free");
  CHECK(echo["limits"]["norm_drift"] == 1e-8);
}

TEST_CASE("experiments load from files") {
  const auto dir = scratch("file");
  fs::create_directories(dir);
  std::ofstream(dir / "spec.json") << small_wave().dump();
  CHECK(load_experiment((dir / "spec.json").string()).name == "small");
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS_AS(load_experiment((dir / "broken.json").string()), SchemaError);
  fs::remove_all(dir);
}

TEST_CASE("failing checks give exit code 4") {
  auto doc = small_wave();
  doc["checks"] = json::array({{{"metric", "final.sigma_x"}, {"target", 5.0}, {"rel_tol", 1e-3}},
                               {{"metric", "no.such.metric"}, {"min", 0.0}}});
  const auto rec = run_experiment(parse_experiment(doc));
  CHECK(rec.exit_code == kExitInvariant);
  REQUIRE(rec.checks.size() >= 2);
  CHECK_FALSE(rec.checks[rec.checks.size() - 2].passed);
  CHECK_FALSE(rec.checks.back().passed);
  CHECK(rec.checks.back().expectation.find("missing") != std::string::npos);
}

TEST_CASE("invariant violations give exit code 4") {
  auto doc = small_wave();
  doc["limits"] = {{"norm_drift", 0.0}};
  CHECK(run_experiment(parse_experiment(doc)).exit_code == kExitInvariant);
}

TEST_CASE("a numerical blowup gives exit code 3") {
  auto doc = small_wave();
  doc.erase("trajectories");
  // The split-step scheme is unitary, so only non-finite input can blow it up:
  // here the harmonic potential overflows to infinity away from its center.
  doc["potential"] = {{"type", "harmonic"}, {"omega", 1e160}};
  const auto rec = run_experiment(parse_experiment(doc));
  CHECK(rec.status == "blowup");
  CHECK(rec.exit_code == kExitBlowup);
}

TEST_CASE("schedule variants run in parallel with the same result as serially") {
  auto doc = small_wave();
  doc.erase("trajectories");
  const auto spec = make_lambda_scan(parse_experiment(doc), {0.0, 0.5, 1.0});
  CHECK(spec.name == "small-scan");
  const auto a = run_experiment(spec, {{}, std::nullopt, std::nullopt, 1});
  const auto b = run_experiment(spec, {{}, std::nullopt, std::nullopt, 3});
  CHECK(a == b);
  CHECK(a.metric("lambda0.sigma_ratio") > a.metric("lambda2.sigma_ratio"));
  CHECK(a.tables.count("series_lambda1") == 1);
  CHECK_THROWS_AS(make_lambda_scan(parse_experiment(doc), {1.5}), ConfigError);
  CHECK_THROWS_AS(make_lambda_scan(load_experiment("decoherence-scaling"), {0.5}), ConfigError);
}

TEST_CASE("trajectory count and seed can be forced at run time") {
  auto doc = small_wave();
  doc.erase("trajectories");
  const auto rec = run_experiment(parse_experiment(doc), {{}, 17, 200, 1});
  CHECK(rec.metric("trajectories.count") == 200);
  CHECK(rec.metric("trajectories.seed") == 17);
  CHECK(rec.config["run_options"]["seed"] == 17);
}

TEST_CASE("output directory honours the environment override") {
  ::setenv("QCLIMIT_OUTPUT_DIR", "/tmp/somewhere", 1);
  CHECK(default_output_dir() == fs::path("/tmp/somewhere"));
  ::unsetenv("QCLIMIT_OUTPUT_DIR");
  CHECK(default_output_dir() == fs::path("qclimit-runs"));
}
