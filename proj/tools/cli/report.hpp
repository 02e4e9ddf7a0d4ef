#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace clusterqed::cli {

inline constexpr int kSchemaVersion = 1;

/// A report cell. Monostate renders as an empty CSV cell and a JSON null.
using Cell = std::variant<std::monostate, bool, std::int64_t, double, std::string>;

struct Check {
  std::string name;
  bool passed = true;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct Report {
  std::string command;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<Check> checks;
  std::optional<std::uint64_t> seed;
  std::string config_hash;

  void add_row(std::vector<Cell> row);
  bool all_passed() const;
};

enum class Format { Csv, Json };

/// "# schema=1", a header line, then one line per row. Doubles use 12
/// significant digits so output is byte-stable across runs.
void write_csv(std::ostream& out, const Report& report);
/// {"rows": [...], "checks": [...], "meta": {"seed", "version", "config_hash", ...}}.
void write_json(std::ostream& out, const Report& report);

std::string format_double(double v);

}  // namespace clusterqed::cli
