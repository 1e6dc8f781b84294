#include "qot/serialize.hpp"

#include <sstream>

#include "qot/errors.hpp"

namespace qot::io {
namespace {

using Idx = Eigen::Index;

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::vector<std::string> strings_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) out.push_back(e.get<std::string>());
  return out;
}

std::size_t name_index(const std::vector<std::string>& names, const std::string& name, const char* what) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw ValidationError(std::string("unknown ") + what + " '" + name + "'");
}

SqrtConvention sqrt_convention_from_string(const std::string& s) {
  if (s == "principal_sqrt") return SqrtConvention::principal_sqrt;
  if (s == "abs_sqrt") return SqrtConvention::abs_sqrt;
  throw ValidationError("unknown sqrt_convention '" + s + "'");
}

OpContract contract_from_string(const std::string& s) {
  if (s == "none") return OpContract::none;
  if (s == "row_normalized") return OpContract::row_normalized;
  if (s == "unitary") return OpContract::unitary;
  throw ValidationError("unknown contract '" + s + "'");
}

}  // namespace

Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Complex complex_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ValidationError("expected a complex number: a number or [re, im]");
}

Json vector_to_json(const CVector& v) {
  Json out = Json::array();
  for (Idx i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

CVector cvector_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("expected an array of complex numbers");
  CVector v(static_cast<Idx>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Idx>(i)) = complex_from_json(j[i]);
  return v;
}

std::vector<double> reals_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : j) {
    if (!e.is_number()) throw ValidationError("expected a number");
    out.push_back(e.get<double>());
  }
  return out;
}

RMatrix real_matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw ValidationError("expected a non-empty array of rows");
  const std::size_t cols = j[0].size();
  RMatrix m(static_cast<Idx>(j.size()), static_cast<Idx>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = reals_from_json(j[r]);
    if (row.size() != cols) throw ValidationError("ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Idx>(r), static_cast<Idx>(c)) = row[c];
  }
  return m;
}

CMatrix complex_matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw ValidationError("expected a non-empty array of rows");
  const std::size_t cols = j[0].size();
  CMatrix m(static_cast<Idx>(j.size()), static_cast<Idx>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ValidationError("ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Idx>(r), static_cast<Idx>(c)) = complex_from_json(j[r][c]);
  }
  return m;
}

Json matrix_to_json(const CMatrix& m) {
  Json out = Json::array();
  for (Idx r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Idx c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    out.push_back(row);
  }
  return out;
}

Json matrix_to_json(const RMatrix& m) {
  Json out = Json::array();
  for (Idx r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Idx c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

Json grid_to_json(const SiteGrid& grid) {
  Json out = Json::array();
  for (const auto& l : grid.labels()) {
    if (l.second) {
      out.push_back(Json::array({l.first, *l.second}));
    } else {
      out.push_back(l.first);
    }
  }
  return out;
}

SiteGrid grid_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("grid must be an array of labels");
  std::vector<SiteLabel> labels;
  for (const auto& e : j) {
    if (e.is_number_integer()) {
      labels.push_back({e.get<int>(), std::nullopt});
    } else if (e.is_array() && e.size() == 2) {
      labels.push_back({e[0].get<int>(), e[1].get<int>()});
    } else {
      throw ValidationError("grid labels are integers or [first, second] pairs");
    }
  }
  return SiteGrid(std::move(labels));
}

transport::TransportInstance transport_instance_from_json(const Json& j) {
  std::optional<double> w;
  if (j.contains("penalty_weight") && !j.at("penalty_weight").is_null()) w = j.at("penalty_weight").get<double>();
  return transport::TransportInstance(reals_from_json(field(j, "mu")), reals_from_json(field(j, "nu")),
                                      real_matrix_from_json(field(j, "cost")), w);
}

Json transport_instance_to_json(const transport::TransportInstance& inst) {
  return {{"mu", inst.mu()},
          {"nu", inst.nu()},
          {"cost", matrix_to_json(inst.cost())},
          {"penalty_weight", inst.penalty_weight()}};
}

transport::TransportPlan transport_plan_from_json(const Json& j) {
  const Json& q = j.is_object() ? field(j, "q") : j;
  const bool binary = j.is_object() ? j.value("binary", true) : true;
  return transport::TransportPlan(real_matrix_from_json(q), binary);
}

Json transport_plan_to_json(const transport::TransportPlan& plan) {
  return {{"q", matrix_to_json(plan.q())}, {"binary", plan.binary_mode()}};
}

transport::AnnealSchedule anneal_schedule_from_json(const Json& j) {
  transport::AnnealSchedule s;
  if (j.is_null()) return s;
  s.t_initial = j.value("t_initial", s.t_initial);
  s.t_final = j.value("t_final", s.t_final);
  s.sweeps = j.value("sweeps", s.sweeps);
  s.restarts = j.value("restarts", s.restarts);
  return s;
}

Json anneal_schedule_to_json(const transport::AnnealSchedule& s) {
  return {{"t_initial", s.t_initial}, {"t_final", s.t_final}, {"sweeps", s.sweeps}, {"restarts", s.restarts}};
}

Json state_to_json(const PureState& s) {
  return {{"grid", grid_to_json(s.grid())}, {"amplitudes", vector_to_json(s.amplitudes())}};
}

PureState state_from_json(const Json& j, const std::optional<SiteGrid>& grid) {
  const Json& amps = j.is_object() ? field(j, "amplitudes") : j;
  CVector v = cvector_from_json(amps);
  SiteGrid g = j.is_object() && j.contains("grid") ? grid_from_json(j.at("grid"))
               : grid                              ? *grid
                                                   : SiteGrid::range(static_cast<std::size_t>(v.size()));
  return PureState(std::move(g), std::move(v));
}

Json operator_to_json(const LinearOp& op) {
  return {{"contract", to_string(op.contract())}, {"matrix", matrix_to_json(CMatrix(op.matrix().transpose()))}};
}

LinearOp operator_from_json(const Json& j, const SiteGrid& grid) {
  const Json& rows = j.is_object() ? field(j, "matrix") : j;
  const OpContract contract =
      j.is_object() ? contract_from_string(j.value("contract", std::string("unitary"))) : OpContract::unitary;
  CMatrix by_x = complex_matrix_from_json(rows);
  return LinearOp(grid, CMatrix(by_x.transpose()), contract);
}

CostKernel kernel_from_json(const Json& j, const SiteGrid& grid) {
  const SqrtConvention conv = sqrt_convention_from_string(j.value("sqrt_convention", std::string("principal_sqrt")));
  const bool bounded = j.value("bounded", false);
  if (j.contains("constant")) {
    CMatrix values = CMatrix::Constant(static_cast<Idx>(grid.size()), static_cast<Idx>(grid.size()),
                                       complex_from_json(j.at("constant")));
    return CostKernel(grid, grid, std::move(values), conv, bounded);
  }
  return CostKernel(grid, grid, complex_matrix_from_json(field(j, "values")), conv, bounded);
}

Json kernel_to_json(const CostKernel& k) {
  return {{"values", matrix_to_json(k.values())},
          {"sqrt_convention", to_string(k.convention())},
          {"bounded", k.bounded()}};
}

functionals::TransportProblem problem_from_json(const Json& j) {
  using namespace functionals;
  const Variant v = variant_from_string(field(j, "variant").get<std::string>());
  std::optional<SiteGrid> grid;
  if (j.contains("grid")) grid = grid_from_json(j.at("grid"));
  PureState source = state_from_json(field(j, "source"), grid);
  const SiteGrid& g = source.grid();
  std::optional<PureState> target;
  if (j.contains("target") && !j.at("target").is_null()) target = state_from_json(j.at("target"), g);
  std::optional<std::vector<double>> dist;
  if (j.contains("target_distribution") && !j.at("target_distribution").is_null()) {
    dist = reals_from_json(j.at("target_distribution"));
  }
  std::vector<double> multiplier;
  if (j.contains("multiplier") && !j.at("multiplier").is_null()) multiplier = reals_from_json(j.at("multiplier"));
  return TransportProblem(v, source, kernel_from_json(field(j, "kernel"), g), target, dist, multiplier);
}

walk::Coin coin_from_json(const Json& j, int t) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "hadamard") return walk::Coin::hadamard(t);
    if (name == "identity") return walk::Coin::identity(t);
    throw ValidationError("unknown coin '" + name + "'");
  }
  if (j.is_object() && j.contains("theta")) {
    return walk::Coin::from_angles(j.at("theta").get<double>(), j.value("alpha", 0.0), j.value("beta", 0.0), t);
  }
  return walk::Coin(complex_from_json(field(j, "a")), complex_from_json(field(j, "b")), complex_from_json(field(j, "c")),
                    complex_from_json(field(j, "d")), t);
}

Json coin_to_json(const walk::Coin& c) {
  return {{"t", c.t()},
          {"a", complex_to_json(c.a())},
          {"b", complex_to_json(c.b())},
          {"c", complex_to_json(c.c())},
          {"d", complex_to_json(c.d())}};
}

std::vector<walk::Coin> coins_from_json(const Json& j, int steps) {
  std::vector<walk::Coin> coins;
  if (j.is_array()) {
    if (static_cast<int>(j.size()) != steps) {
      std::ostringstream msg;
      msg << "coin list has " << j.size() << " entries for " << steps << " steps";
      throw ValidationError(msg.str());
    }
    for (int t = 0; t < steps; ++t) coins.push_back(coin_from_json(j[static_cast<std::size_t>(t)], t));
  } else {
    for (int t = 0; t < steps; ++t) coins.push_back(coin_from_json(j, t));
  }
  return coins;
}

walk::WalkerState walker_state_from_json(const Json& j) {
  CVector left = cvector_from_json(field(j, "left"));
  CVector right = cvector_from_json(field(j, "right"));
  if (left.size() != right.size() || left.size() % 2 == 0) {
    throw ValidationError("walker components must have equal odd length 2t+1");
  }
  return walk::WalkerState(static_cast<int>((left.size() - 1) / 2), std::move(left), std::move(right));
}

Json walker_state_to_json(const walk::WalkerState& s) {
  return {{"t", s.t()}, {"left", vector_to_json(s.left())}, {"right", vector_to_json(s.right())}};
}

walk::WalkTarget walk_target_from_json(const Json& j) {
  if (j.is_object() && j.contains("distribution")) return reals_from_json(j.at("distribution"));
  return walker_state_from_json(j);
}

qfa::Automaton automaton_from_json(const Json& j) {
  const auto states = strings_from_json(field(j, "states"));
  const auto alphabet = strings_from_json(field(j, "alphabet"));
  std::vector<qfa::Transition> transitions;
  for (const auto& t : field(j, "transitions")) {
    transitions.push_back({name_index(states, field(t, "q").get<std::string>(), "state"),
                           name_index(alphabet, field(t, "a").get<std::string>(), "letter"),
                           name_index(states, field(t, "q2").get<std::string>(), "state"), field(t, "D").get<int>(),
                           complex_from_json(field(t, "amp"))});
  }
  auto indices = [&](const char* key) {
    std::vector<std::size_t> out;
    if (j.contains(key)) {
      for (const auto& n : strings_from_json(j.at(key))) out.push_back(name_index(states, n, "state"));
    }
    return out;
  };
  std::vector<int> displacements{-1, 0, 1};
  if (j.contains("displacements")) displacements = j.at("displacements").get<std::vector<int>>();
  return qfa::Automaton(states, alphabet, std::move(transitions),
                        name_index(states, field(j, "initial").get<std::string>(), "state"), indices("accept"),
                        indices("reject"), displacements);
}

Json automaton_to_json(const qfa::Automaton& aut) {
  Json tr = Json::array();
  for (const auto& t : aut.transitions()) {
    tr.push_back({{"q", aut.states()[t.from]},
                  {"a", aut.alphabet()[t.letter]},
                  {"q2", aut.states()[t.to]},
                  {"D", t.displacement},
                  {"amp", complex_to_json(t.amplitude)}});
  }
  auto names = [&](const std::vector<std::size_t>& idx) {
    Json out = Json::array();
    for (std::size_t q : idx) out.push_back(aut.states()[q]);
    return out;
  };
  return {{"states", aut.states()},
          {"alphabet", aut.alphabet()},
          {"initial", aut.states()[aut.initial()]},
          {"accept", names(aut.accept())},
          {"reject", names(aut.reject())},
          {"displacements", aut.displacements()},
          {"transitions", tr}};
}

qfa::Word word_from_json(const qfa::Automaton& aut, const Json& j) {
  if (j.is_string()) {
    // A string is read one character per letter.
    std::vector<std::string> letters;
    for (char c : j.get<std::string>()) letters.emplace_back(1, c);
    return qfa::parse_word(aut, letters);
  }
  return qfa::parse_word(aut, strings_from_json(j));
}

game::PayoffTable payoffs_from_json(const Json& j) {
  return game::PayoffTable(field(j, "X").get<double>(), field(j, "Y").get<double>(), field(j, "Z").get<double>());
}

game::RepeatedGameSpec game_spec_from_json(const Json& j) {
  std::optional<std::size_t> horizon;
  if (j.contains("horizon") && !j.at("horizon").is_null()) horizon = j.at("horizon").get<std::size_t>();
  return game::RepeatedGameSpec(payoffs_from_json(j), field(j, "delta").get<double>(), j.value("r", 1.0), horizon);
}

game::QuantumStrategy strategy_from_json(const Json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "S_C") return game::QuantumStrategy::cooperate();
    throw ValidationError("unknown strategy '" + j.get<std::string>() + "'");
  }
  if (j.contains("matrix")) return game::QuantumStrategy(complex_matrix_from_json(j.at("matrix")));
  return game::QuantumStrategy::noisy_cooperate(complex_from_json(field(j, "a")), complex_from_json(field(j, "b")));
}

game::RepeatedOptions repeated_options_from_json(const Json& j) {
  game::RepeatedOptions opts;
  const std::string mon = j.value("monitoring", std::string("public"));
  if (mon == "public") {
    opts.monitoring = game::Monitoring::public_signals;
  } else if (mon == "private") {
    opts.monitoring = game::Monitoring::private_signals;
  } else {
    throw ValidationError("monitoring must be 'public' or 'private'");
  }
  if (j.contains("deviation") && !j.at("deviation").is_null()) {
    const Json& d = j.at("deviation");
    game::DeviationSpec dev;
    dev.agent = d.value("agent", dev.agent);
    dev.round = d.value("round", dev.round);
    if (d.contains("a")) dev.a = complex_from_json(d.at("a"));
    if (d.contains("b")) dev.b = complex_from_json(d.at("b"));
    opts.deviation = dev;
  }
  game::TriggerRule rule;
  if (j.contains("punishment") && !j.at("punishment").is_null()) {
    const Json& p = j.at("punishment");
    if (p.contains("a")) rule.punish_a = complex_from_json(p.at("a"));
    if (p.contains("b")) rule.punish_b = complex_from_json(p.at("b"));
  }
  opts.rules = {rule, rule};
  return opts;
}

}  // namespace qot::io
