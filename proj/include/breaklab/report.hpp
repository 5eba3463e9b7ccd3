#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "breaklab/scenario.hpp"

namespace breaklab::report {

using scenario::Json;
using scenario::Scenario;

enum class Verdict { pass, fail, not_applicable };

const char* verdict_name(Verdict v);

/// Numeric table emitted as <name>.csv. Cells are JSON scalars: numbers,
/// strings, or null (written as an empty field).
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
};

/// RFC 4180: CRLF line ends, fields quoted when they hold a comma, quote,
/// CR or LF. Numbers use the shortest round-trip form with '.' as the
/// decimal separator.
std::string to_csv(const Table& table);

struct Outcome {
  /// Deterministic for identical scenario and seed.
  Json report;
  std::vector<Table> tables;
  /// Extra JSON documents written next to report.json (file name, body).
  std::vector<std::pair<std::string, Json>> documents;
  /// Some check returned fail.
  bool findings_failed = false;
};

/// Command-line seed, else the scenario seed, else BREAKLAB_SEED, else 0.
/// Throws SchemaError when BREAKLAB_SEED is not a non-negative integer.
std::uint64_t resolve_seed(std::optional<std::uint64_t> cli, const Scenario& s);

/// Every check that applies to the scenario kind. Solver failures propagate
/// as ConvergenceError.
Outcome run(const Scenario& s, std::uint64_t seed);
/// Diagram dump plus a derived potential scenario. Needs kind sdot.
Outcome solve_sdot(const Scenario& s, std::uint64_t seed);
/// Helmholtz projection and polar experiment tables. Needs kind field.
Outcome polar(const Scenario& s, std::uint64_t seed);

/// Creates `dir` and writes report.json, the CSV tables and the documents.
void write(const Outcome& o, const std::filesystem::path& dir);

/// Two-space indented JSON with a trailing newline.
std::string dump(const Json& doc);

}  // namespace breaklab::report
