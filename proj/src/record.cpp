#include "qcl/record.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "qcl/errors.hpp"

namespace qcl {

namespace {

constexpr const char* kCsvMarker = "# qclimit series v1";

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

nlohmann::json number_to_json(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double number_from_json(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_double(j.get<std::string>());
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  throw SchemaError("metrics", "expected a number");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void Table::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw ShapeError("Table::add_row: wrong number of cells");
  rows.push_back(std::move(row));
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw std::out_of_range("no column named " + std::string(name));
}

bool Table::operator==(const Table& other) const {
  if (columns != other.columns || rows.size() != other.rows.size()) return false;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != other.rows[r].size()) return false;
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      if (!same(rows[r][c], other.rows[r][c])) return false;
  }
  return true;
}

bool CheckResult::operator==(const CheckResult& o) const {
  return name == o.name && same(value, o.value) && expectation == o.expectation &&
         passed == o.passed;
}

double RunRecord::metric(const std::string& key) const {
  const auto it = metrics.find(key);
  if (it == metrics.end()) throw std::out_of_range("no metric named " + key);
  return it->second;
}

bool RunRecord::operator==(const RunRecord& o) const {
  if (schema_version != o.schema_version || name != o.name || kind != o.kind ||
      config != o.config || status != o.status || message != o.message ||
      exit_code != o.exit_code || checks != o.checks || warnings != o.warnings ||
      tables != o.tables || metrics.size() != o.metrics.size()) {
    return false;
  }
  for (auto a = metrics.begin(), b = o.metrics.begin(); a != metrics.end(); ++a, ++b) {
    if (a->first != b->first || !same(a->second, b->second)) return false;
  }
  return true;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '+')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw SchemaError("csv", "not a number: '" + std::string(text) + "'");
  }
  return v;
}

void write_csv(const Table& table, std::ostream& out) {
  out << kCsvMarker << '\n';
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
}

Table read_csv(std::istream& in) {
  Table table;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto cells = split(line);
    if (!header) {
      table.columns = std::move(cells);
      header = true;
      continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c));
    table.add_row(std::move(row));
  }
  if (!header) throw SchemaError("csv", "missing header row");
  return table;
}

void write_record(const RunRecord& record, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ResourceError("cannot create output directory " + dir.string() + ": " + ec.message());

  nlohmann::json j;
  j["schema_version"] = record.schema_version;
  j["name"] = record.name;
  j["kind"] = record.kind;
  j["status"] = record.status;
  j["message"] = record.message;
  j["exit_code"] = record.exit_code;
  j["config"] = record.config;
  j["metrics"] = nlohmann::json::object();
  for (const auto& [k, v] : record.metrics) j["metrics"][k] = number_to_json(v);
  j["checks"] = nlohmann::json::array();
  for (const auto& c : record.checks) {
    j["checks"].push_back({{"name", c.name},
                           {"value", number_to_json(c.value)},
                           {"expectation", c.expectation},
                           {"passed", c.passed}});
  }
  j["warnings"] = record.warnings;
  j["tables"] = nlohmann::json::array();
  for (const auto& [name, table] : record.tables) {
    j["tables"].push_back(name);
    std::ofstream out(dir / (name + ".csv"));
    if (!out) throw ResourceError("cannot write " + (dir / (name + ".csv")).string());
    write_csv(table, out);
  }
  std::ofstream out(dir / "summary.json");
  if (!out) throw ResourceError("cannot write " + (dir / "summary.json").string());
  out << j.dump(2) << '\n';
}

RunRecord read_record(const std::filesystem::path& dir) {
  std::ifstream in(dir / "summary.json");
  if (!in) throw ResourceError("cannot read " + (dir / "summary.json").string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("summary.json", e.what());
  }
  RunRecord r;
  try {
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kSchemaVersion) {
      throw SchemaError("schema_version", "unsupported version " + std::to_string(r.schema_version));
    }
    r.name = j.at("name").get<std::string>();
    r.kind = j.at("kind").get<std::string>();
    r.status = j.at("status").get<std::string>();
    r.message = j.at("message").get<std::string>();
    r.exit_code = j.at("exit_code").get<int>();
    r.config = j.at("config");
    for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = number_from_json(v);
    for (const auto& c : j.at("checks")) {
      r.checks.push_back({c.at("name").get<std::string>(), number_from_json(c.at("value")),
                          c.at("expectation").get<std::string>(), c.at("passed").get<bool>()});
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& name : j.at("tables")) {
      const auto file = dir / (name.get<std::string>() + ".csv");
      std::ifstream tin(file);
      if (!tin) throw ResourceError("cannot read " + file.string());
      r.tables[name.get<std::string>()] = read_csv(tin);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("summary.json", e.what());
  }
  return r;
}

}  // namespace qcl
