#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qcl {

inline constexpr int kSchemaVersion = 1;

/// Numeric table persisted as CSV with a fixed column order.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
  std::size_t column(std::string_view name) const;  // throws std::out_of_range
  bool operator==(const Table&) const;               // NaN compares equal to NaN
};

struct CheckResult {
  std::string name;
  double value = 0.0;
  std::string expectation;
  bool passed = false;

  bool operator==(const CheckResult&) const;
};

/// Everything a run produces: the fully resolved configuration, status,
/// scalar metrics, check outcomes and tables.
struct RunRecord {
  int schema_version = kSchemaVersion;
  std::string name;
  std::string kind;
  nlohmann::json config;
  std::string status = "completed";
  std::string message;
  int exit_code = 0;
  std::map<std::string, double> metrics;
  std::vector<CheckResult> checks;
  std::vector<std::string> warnings;
  std::map<std::string, Table> tables;

  double metric(const std::string& key) const;  // throws std::out_of_range
  bool operator==(const RunRecord&) const;
};

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

void write_csv(const Table& table, std::ostream& out);
Table read_csv(std::istream& in);

/// summary.json plus one <table>.csv per table.
void write_record(const RunRecord& record, const std::filesystem::path& dir);
RunRecord read_record(const std::filesystem::path& dir);

}  // namespace qcl
