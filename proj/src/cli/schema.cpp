#include <cmath>
#include <map>
#include <sstream>

#include "qot/cli.hpp"
#include "qot/errors.hpp"

namespace qot::cli {
namespace detail {
// Generated at configure time from schemas/.
const std::vector<std::pair<const char*, const char*>>& embedded_schema_sources();
}  // namespace detail

namespace {

const std::map<std::string, Json>& registry() {
  static const std::map<std::string, Json> schemas = [] {
    std::map<std::string, Json> out;
    for (const auto& [name, text] : detail::embedded_schema_sources()) out.emplace(name, Json::parse(text));
    return out;
  }();
  return schemas;
}

std::string type_name(const Json& j) {
  if (j.is_null()) return "null";
  if (j.is_boolean()) return "boolean";
  if (j.is_number_integer() || j.is_number_unsigned()) return "integer";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  return "object";
}

bool has_type(const Json& j, const std::string& t) {
  if (t == "number") return j.is_number();
  if (t == "integer") {
    if (j.is_number_integer() || j.is_number_unsigned()) return true;
    return j.is_number_float() && std::floor(j.get<double>()) == j.get<double>();
  }
  if (t == "null") return j.is_null();
  if (t == "boolean") return j.is_boolean();
  if (t == "string") return j.is_string();
  if (t == "array") return j.is_array();
  if (t == "object") return j.is_object();
  return false;
}

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

class Checker {
 public:
  explicit Checker(const Json& root) : root_(root) {}

  void check(const Json& s, const Json& doc, const std::string& path, std::vector<Violation>& out) const {
    if (s.contains("$ref")) {
      const auto ref = s.at("$ref").get<std::string>();
      if (ref.rfind("#", 0) != 0) throw std::logic_error("only local schema references are supported");
      check(root_.at(Json::json_pointer(ref.substr(1))), doc, path, out);
      return;
    }
    if (s.contains("type")) {
      const Json& t = s.at("type");
      bool ok = false;
      std::string expected;
      if (t.is_string()) {
        ok = has_type(doc, t.get<std::string>());
        expected = t.get<std::string>();
      } else {
        for (const auto& e : t) {
          ok = ok || has_type(doc, e.get<std::string>());
          expected += (expected.empty() ? "" : " or ") + e.get<std::string>();
        }
      }
      if (!ok) {
        out.push_back({path, "expected " + expected + ", got " + type_name(doc)});
        return;
      }
    }
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s.at("enum")) found = found || e == doc;
      if (!found) out.push_back({path, "value " + doc.dump() + " is not one of " + s.at("enum").dump()});
    }
    if (doc.is_number()) check_bounds(s, doc.get<double>(), path, out);
    if (doc.is_array()) check_array(s, doc, path, out);
    if (doc.is_object()) check_object(s, doc, path, out);
    for (const char* key : {"oneOf", "anyOf"}) {
      if (!s.contains(key)) continue;
      std::size_t matches = 0;
      std::vector<Violation> closest;
      for (const auto& branch : s.at(key)) {
        std::vector<Violation> v;
        check(branch, doc, path, v);
        if (v.empty()) {
          ++matches;
        } else if (closest.empty() || v.size() < closest.size()) {
          closest = v;
        }
      }
      const bool one = std::string(key) == "oneOf";
      if (matches == 0) {
        // Report the branch that came closest; its messages are the most useful.
        if (closest.size() == 1 && closest[0].message.rfind("expected", 0) != 0) {
          out.push_back(closest[0]);
        } else {
          out.push_back({path, "value does not match any allowed form"});
        }
      } else if (one && matches > 1) {
        out.push_back({path, "value matches more than one allowed form"});
      }
    }
  }

 private:
  static void check_bounds(const Json& s, double v, const std::string& path, std::vector<Violation>& out) {
    auto fail = [&](const char* what, double bound) {
      std::ostringstream msg;
      msg << "value " << v << " violates " << what << " " << bound;
      out.push_back({path, msg.str()});
    };
    if (s.contains("minimum") && v < s.at("minimum").get<double>()) fail("minimum", s.at("minimum").get<double>());
    if (s.contains("maximum") && v > s.at("maximum").get<double>()) fail("maximum", s.at("maximum").get<double>());
    if (s.contains("exclusiveMinimum") && !(v > s.at("exclusiveMinimum").get<double>())) {
      fail("exclusiveMinimum", s.at("exclusiveMinimum").get<double>());
    }
    if (s.contains("exclusiveMaximum") && !(v < s.at("exclusiveMaximum").get<double>())) {
      fail("exclusiveMaximum", s.at("exclusiveMaximum").get<double>());
    }
  }

  void check_array(const Json& s, const Json& doc, const std::string& path, std::vector<Violation>& out) const {
    if (s.contains("minItems") && doc.size() < s.at("minItems").get<std::size_t>()) {
      out.push_back({path, "array needs at least " + s.at("minItems").dump() + " items"});
    }
    if (s.contains("maxItems") && doc.size() > s.at("maxItems").get<std::size_t>()) {
      out.push_back({path, "array allows at most " + s.at("maxItems").dump() + " items"});
    }
    if (s.contains("items")) {
      for (std::size_t i = 0; i < doc.size(); ++i) check(s.at("items"), doc[i], path + "/" + std::to_string(i), out);
    }
  }

  void check_object(const Json& s, const Json& doc, const std::string& path, std::vector<Violation>& out) const {
    if (s.contains("required")) {
      for (const auto& k : s.at("required")) {
        if (!doc.contains(k.get<std::string>())) out.push_back({path, "missing required field '" + k.get<std::string>() + "'"});
      }
    }
    const Json empty = Json::object();
    const Json& props = s.contains("properties") ? s.at("properties") : empty;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      const std::string child = path + "/" + escape_token(it.key());
      if (props.contains(it.key())) {
        check(props.at(it.key()), it.value(), child, out);
      } else if (s.contains("additionalProperties") && s.at("additionalProperties") == false) {
        out.push_back({child, "unknown field '" + it.key() + "'"});
      }
    }
  }

  const Json& root_;
};

}  // namespace

const Json& schema(const std::string& name) {
  const auto& reg = registry();
  const auto it = reg.find(name);
  if (it == reg.end()) throw ValidationError("no shipped schema named '" + name + "'");
  return it->second;
}

std::vector<std::string> schema_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : registry()) out.push_back(name);
  return out;
}

std::vector<Violation> check_schema(const Json& schema_doc, const Json& doc) {
  std::vector<Violation> out;
  Checker(schema_doc).check(schema_doc, doc, "", out);
  for (auto& v : out) {
    if (v.path.empty()) v.path = "/";
  }
  return out;
}

std::vector<Violation> schema_violations(const std::string& name, const Json& doc) {
  return check_schema(schema(name), doc);
}

}  // namespace qot::cli
