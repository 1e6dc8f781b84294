#pragma once

// Command-line front end: scenario loading, schema checks, dispatch to the
// modules and artifact writing.

#include <string>
#include <vector>

#include <json.hpp>

namespace qot::cli {

using Json = nlohmann::json;

enum ExitCode : int { kOk = 0, kInternal = 1, kInvalid = 2, kInfeasible = 3 };

struct Violation {
  std::string path;  // JSON pointer into the document
  std::string message;
};

/// Shipped schema by name: "scenario", "payload/<kind>" or "result/<kind>.<command>".
const Json& schema(const std::string& name);
std::vector<std::string> schema_names();

/// Checks doc against the supported JSON Schema subset (type, enum, required,
/// properties, additionalProperties, items, min/maxItems, numeric bounds,
/// oneOf, anyOf and local $ref).
std::vector<Violation> check_schema(const Json& schema_doc, const Json& doc);
std::vector<Violation> schema_violations(const std::string& name, const Json& doc);

/// Domain pre-checks (unitary coins, normalized states, mass balance, ...)
/// run by constructing the domain objects without running anything.
std::vector<Violation> contract_violations(const std::string& kind, const Json& payload);

struct ValidationReport {
  std::string file;
  std::string document;  // "scenario", "payload/<kind>", "result/<name>" or "unknown"
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// kind_hint names the payload kind when the file is a bare payload.
ValidationReport validate_document(const Json& doc, const std::string& kind_hint = "");
ValidationReport validate_file(const std::string& path, const std::string& kind_hint = "");
Json report_to_json(const ValidationReport& report);

/// Full CLI entry point; returns the process exit status.
int run(int argc, char** argv);

}  // namespace qot::cli
