#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "qot/cli.hpp"
#include "qot/errors.hpp"
#include "qot/serialize.hpp"

namespace qot::cli {
namespace {

const std::vector<std::string> kKinds{"transport", "qot", "walk", "qfa", "game"};

bool known_kind(const std::string& k) { return std::find(kKinds.begin(), kKinds.end(), k) != kKinds.end(); }

// Runs one construction step and records its failure under path.
void probe(std::vector<Violation>& out, const std::string& path, const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    out.push_back({path, e.what()});
  }
}

void transport_checks(const Json& p, std::vector<Violation>& out) {
  probe(out, "/", [&] {
    const auto inst = io::transport_instance_from_json(p);
    if (p.contains("plan")) {
      const auto plan = io::transport_plan_from_json(p.at("plan"));
      if (static_cast<std::size_t>(plan.q().rows()) != inst.n_source() ||
          static_cast<std::size_t>(plan.q().cols()) != inst.n_target()) {
        throw DimensionError("plan must be n_source x n_target");
      }
    }
  });
}

void qot_checks(const Json& p, std::vector<Violation>& out) {
  std::optional<functionals::TransportProblem> problem;
  probe(out, "/", [&] { problem.emplace(io::problem_from_json(p)); });
  if (!problem) return;
  const SiteGrid& grid = problem->source().grid();
  if (p.contains("operator")) probe(out, "/operator", [&] { io::operator_from_json(p.at("operator"), grid); });
  if (p.contains("family")) {
    for (std::size_t i = 0; i < p.at("family").size(); ++i) {
      probe(out, "/family/" + std::to_string(i), [&] { io::operator_from_json(p.at("family")[i], grid); });
    }
  }
}

void walk_checks(const Json& p, std::vector<Violation>& out) {
  const int steps = p.value("steps", 0);
  if (p.contains("coin")) {
    const Json& c = p.at("coin");
    if (c.is_array()) {
      if (static_cast<int>(c.size()) != steps) {
        out.push_back({"/coin", "coin list length " + std::to_string(c.size()) + " does not match steps " +
                                    std::to_string(steps)});
      }
      for (std::size_t t = 0; t < c.size(); ++t) {
        probe(out, "/coin/" + std::to_string(t), [&] { io::coin_from_json(c[t], static_cast<int>(t)); });
      }
    } else {
      probe(out, "/coin", [&] { io::coin_from_json(c, 0); });
    }
  }
  if (p.contains("initial")) probe(out, "/initial", [&] { io::walker_state_from_json(p.at("initial")); });
  if (p.contains("target") && !p.at("target").contains("distribution")) {
    probe(out, "/target", [&] { io::walker_state_from_json(p.at("target")); });
  }
}

void qfa_checks(const Json& p, std::vector<Violation>& out) {
  if (p.contains("states")) {
    probe(out, "/", [&] {
      const auto aut = io::automaton_from_json(p);
      const auto word = io::word_from_json(aut, p.value("word", Json::array({aut.alphabet().front()})));
      qfa::build_step_operator(aut, word, p.value("tape_length", std::size_t{1}));
    });
  }
  if (p.contains("family") && p.at("family").is_array()) {
    for (std::size_t i = 0; i < p.at("family").size(); ++i) {
      probe(out, "/family/" + std::to_string(i), [&] {
        const auto aut = io::automaton_from_json(p.at("family")[i]);
        const auto word = io::word_from_json(aut, p.value("word", Json::array({aut.alphabet().front()})));
        qfa::build_step_operator(aut, word, p.value("tape_length", std::size_t{1}));
      });
    }
  }
}

void game_checks(const Json& p, std::vector<Violation>& out) {
  if (p.contains("X") && p.contains("Y") && p.contains("Z")) {
    probe(out, "/", [&] {
      io::payoffs_from_json(p);
      if (p.contains("delta")) io::game_spec_from_json(p);
    });
  }
  if (p.contains("punishment")) {
    probe(out, "/punishment", [&] {
      const Json& q = p.at("punishment");
      game::QuantumStrategy::noisy_cooperate(io::complex_from_json(q.value("a", Json(0.0))),
                                             io::complex_from_json(q.value("b", Json(1.0))));
    });
  }
  if (p.contains("deviation")) {
    probe(out, "/deviation", [&] {
      const Json& q = p.at("deviation");
      game::QuantumStrategy::noisy_cooperate(io::complex_from_json(q.value("a", Json(0.0))),
                                             io::complex_from_json(q.value("b", Json(1.0))));
    });
  }
  if (p.contains("strategies")) {
    for (std::size_t i = 0; i < p.at("strategies").size(); ++i) {
      probe(out, "/strategies/" + std::to_string(i), [&] { io::strategy_from_json(p.at("strategies")[i]); });
    }
  }
}

}  // namespace

std::vector<Violation> contract_violations(const std::string& kind, const Json& payload) {
  std::vector<Violation> out;
  if (kind == "transport") {
    transport_checks(payload, out);
  } else if (kind == "qot") {
    qot_checks(payload, out);
  } else if (kind == "walk") {
    walk_checks(payload, out);
  } else if (kind == "qfa") {
    qfa_checks(payload, out);
  } else if (kind == "game") {
    game_checks(payload, out);
  } else {
    out.push_back({"/kind", "unknown kind '" + kind + "'"});
  }
  return out;
}

ValidationReport validate_document(const Json& doc, const std::string& kind_hint) {
  ValidationReport report;
  if (doc.is_object() && doc.contains("result_kind") && doc.at("result_kind").is_string()) {
    report.document = "result/" + doc.at("result_kind").get<std::string>();
    const auto names = schema_names();
    if (std::find(names.begin(), names.end(), report.document) == names.end()) {
      report.violations.push_back({"/result_kind", "unknown result kind " + doc.at("result_kind").dump()});
      return report;
    }
    report.violations = schema_violations(report.document, doc);
    return report;
  }
  std::string kind = kind_hint;
  const Json* payload = &doc;
  if (doc.is_object() && doc.contains("kind") && doc.contains("payload")) {
    report.document = "scenario";
    report.violations = schema_violations("scenario", doc);
    if (!report.violations.empty()) return report;
    const auto k = doc.at("kind").get<std::string>();
    if (!kind.empty() && kind != k) {
      report.violations.push_back({"/kind", "scenario kind '" + k + "' does not match '" + kind + "'"});
      return report;
    }
    kind = k;
    payload = &doc.at("payload");
  }
  if (kind.empty()) {
    report.document = "unknown";
    report.violations.push_back({"/", "cannot tell the payload kind; wrap it in a scenario or pass --kind"});
    return report;
  }
  if (!known_kind(kind)) {
    report.document = "unknown";
    report.violations.push_back({"/kind", "unknown kind '" + kind + "'"});
    return report;
  }
  if (report.document.empty()) report.document = "payload/" + kind;
  const std::string prefix = report.document == "scenario" ? "/payload" : "";
  auto rebase = [&](const std::string& p) { return p == "/" ? (prefix.empty() ? p : prefix) : prefix + p; };
  for (auto v : schema_violations("payload/" + kind, *payload)) {
    v.path = rebase(v.path);
    report.violations.push_back(v);
  }
  // Contract pre-checks assume a structurally valid payload.
  if (!report.violations.empty()) return report;
  for (auto v : contract_violations(kind, *payload)) {
    v.path = rebase(v.path);
    report.violations.push_back(v);
  }
  return report;
}

ValidationReport validate_file(const std::string& path, const std::string& kind_hint) {
  std::ifstream in(path);
  if (!in) {
    ValidationReport r;
    r.file = path;
    r.document = "unknown";
    r.violations.push_back({"/", "cannot read file"});
    return r;
  }
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    ValidationReport r;
    r.file = path;
    r.document = "unknown";
    r.violations.push_back({"/", std::string("invalid JSON: ") + e.what()});
    return r;
  }
  ValidationReport r = validate_document(doc, kind_hint);
  r.file = path;
  return r;
}

Json report_to_json(const ValidationReport& report) {
  Json v = Json::array();
  for (const auto& e : report.violations) v.push_back({{"path", e.path}, {"message", e.message}});
  return {{"file", report.file}, {"document", report.document}, {"valid", report.ok()}, {"violations", v}};
}

}  // namespace qot::cli
