#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#ifndef CLUSTERQED_VERSION
#define CLUSTERQED_VERSION "0.0.0"
#endif

namespace clusterqed::cli {

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

nlohmann::ordered_json to_json(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> nlohmann::ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, double>) {
          // Round-trip through the CSV text so both formats carry identical values.
          if (!std::isfinite(v)) return format_double(v);
          return std::stod(format_double(v));
        } else {
          return v;
        }
      },
      cell);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  return fmt::format("{:.12g}", v);
}

void Report::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw std::logic_error(fmt::format("row has {} cells for {} columns", row.size(), columns.size()));
  }
  rows.push_back(std::move(row));
}

bool Report::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

void write_csv(std::ostream& out, const Report& report) {
  out << "# schema=" << kSchemaVersion << '\n';
  for (std::size_t i = 0; i < report.columns.size(); ++i) {
    out << (i ? "," : "") << report.columns[i];
  }
  out << '\n';
  for (const auto& row : report.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
            } else if constexpr (std::is_same_v<T, bool>) {
              out << (v ? "true" : "false");
            } else if constexpr (std::is_same_v<T, double>) {
              out << format_double(v);
            } else if constexpr (std::is_same_v<T, std::string>) {
              out << csv_escape(v);
            } else {
              out << v;
            }
          },
          row[i]);
    }
    out << '\n';
  }
}

void write_json(std::ostream& out, const Report& report) {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[report.columns[i]] = to_json(row[i]);
    rows.push_back(std::move(obj));
  }
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"value", to_json(c.value)},
                      {"threshold", to_json(c.threshold)},
                      {"detail", c.detail}});
  }
  doc["rows"] = std::move(rows);
  doc["checks"] = std::move(checks);
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  meta["seed"] = report.seed ? nlohmann::ordered_json(*report.seed) : nlohmann::ordered_json(nullptr);
  meta["version"] = CLUSTERQED_VERSION;
  meta["config_hash"] = report.config_hash;
  meta["command"] = report.command;
  meta["schema"] = kSchemaVersion;
  meta["columns"] = report.columns;
  doc["meta"] = std::move(meta);
  out << doc.dump(2) << '\n';
}

}  // namespace clusterqed::cli
