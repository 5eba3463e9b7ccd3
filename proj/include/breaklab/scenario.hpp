#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "breaklab/field.hpp"
#include "breaklab/potential.hpp"
#include "breaklab/transport.hpp"

namespace breaklab::scenario {

using Json = nlohmann::json;

inline constexpr const char* kSchemaId = "breaklab-scenario/1";

/// Scenario rejected by validation; `path` is a JSON pointer to the offending
/// value.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& path, const std::string& message)
      : Error(path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class Kind { potential, sdot, field };

const char* kind_name(Kind k);

struct Tolerances {
  double sdot = 1e-8;
  double helmholtz = 1e-10;
  double pairing = potential::kPairingTol;
  double gpsi = 1e-6;
  double det = 1e-9;
};

struct FieldPayload {
  field::FieldSpec b;
  int grid = 64;
  std::size_t samples = 2048;
  transport::PolarOptions polar;
};

struct Scenario {
  Kind kind = Kind::potential;
  std::string name;
  int dimension = 0;
  geometry::Domain domain;
  std::optional<std::uint64_t> seed;
  /// Empty: the kind's default grid.
  std::vector<double> t_grid;
  /// Times for the expanding check; empty means the default.
  std::vector<double> expanding_times;
  std::size_t expanding_probes = 4096;
  Tolerances tol;

  std::optional<potential::PiecewiseAffinePotential> potential;
  std::optional<transport::DiscreteTarget> target;
  std::optional<FieldPayload> field;

  /// The validated input document.
  Json source;
};

/// Validates the document against the scenario schema and builds every
/// referenced object. Throws SchemaError on any violation, including cell
/// partitions that fail to tile the domain.
Scenario parse(const Json& doc);
/// Reads and parses a file; unreadable files and malformed JSON are
/// SchemaErrors at path "/".
Scenario load(const std::filesystem::path& file);

/// Region object ({"type": ...}) for a convex polytope.
Json region_json(const geometry::ConvexPolytope& p);

/// Potential-payload scenario for phi on its partition.
Json potential_scenario(const std::string& name, const geometry::Domain& domain,
                        const potential::PiecewiseAffinePotential& phi, std::optional<std::uint64_t> seed);

}  // namespace breaklab::scenario
