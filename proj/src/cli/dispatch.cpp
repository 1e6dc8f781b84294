#include <CLI11.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "qot/cli.hpp"
#include "qot/errors.hpp"
#include "qot/rng.hpp"
#include "qot/serialize.hpp"

namespace qot::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

// Shortest round-trip decimal form; stable across runs.
std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Outcome {
  Json result;
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
  std::optional<std::string> summary;                      // stdout text instead of the JSON
  int status = kOk;
  std::string note;
};

using Handler = std::function<Outcome(const Json& payload, std::uint64_t seed)>;

enum class FlagType { integer, number, string, boolean };

struct FlagSpec {
  std::string flag;
  std::string key;
  FlagType type;
  std::string help;
};

struct Command {
  std::string kind;
  std::string name;
  std::string help;
  std::vector<FlagSpec> flags;
  Handler handler;
  std::vector<std::string> aliases{};
};

Json flag_value(const FlagSpec& f, const std::string& raw) {
  try {
    std::size_t used = 0;
    switch (f.type) {
      case FlagType::integer: {
        const long long v = std::stoll(raw, &used);
        if (used != raw.size()) break;
        return v;
      }
      case FlagType::number: {
        const double v = std::stod(raw, &used);
        if (used != raw.size()) break;
        return v;
      }
      case FlagType::boolean:
        if (raw == "true" || raw == "1") return true;
        if (raw == "false" || raw == "0") return false;
        break;
      case FlagType::string:
        return raw;
    }
  } catch (const std::exception&) {
  }
  throw ValidationError(f.flag + ": cannot parse '" + raw + "'");
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

Json get_or(const Json& j, const char* key, Json fallback) {
  return j.contains(key) && !j.at(key).is_null() ? j.at(key) : fallback;
}

// ---- transport -------------------------------------------------------------

Json terms_json(const transport::EnergyTerms& t) {
  return {{"cost", t.cost}, {"row_penalty", t.row_penalty}, {"col_penalty", t.col_penalty}};
}

Outcome transport_solve(const Json& p, std::uint64_t seed) {
  const auto inst = io::transport_instance_from_json(p);
  const std::string solver = p.value("solver", std::string("exhaustive"));
  Json meta{{"seed", seed},
            {"penalty_weight", inst.penalty_weight()},
            {"penalty_weight_defaulted", inst.penalty_weight_defaulted()}};
  std::optional<transport::TransportPlan> plan;
  if (solver == "exhaustive") {
    auto r = transport::solve_exhaustive(inst, p.value("exhaustive_cap", transport::kDefaultExhaustiveCap));
    plan.emplace(r.plan);
  } else {
    const auto schedule = io::anneal_schedule_from_json(get_or(p, "schedule", Json()));
    auto r = transport::solve_annealing(inst, schedule, seed);
    plan.emplace(r.plan);
    meta["schedule"] = io::anneal_schedule_to_json(schedule);
    meta["best_restart"] = r.best_restart;
  }
  const auto terms = transport::energy_terms(inst, *plan);
  const bool feasible = terms.row_penalty + terms.col_penalty <= 1e-12 * inst.penalty_weight();
  Outcome o;
  o.result = {{"result_kind", "transport.solve"},
              {"solver", solver},
              {"plan", io::transport_plan_to_json(*plan)},
              {"energy", transport::hamiltonian_energy(inst, *plan)},
              {"terms", terms_json(terms)},
              {"feasible", feasible},
              {"metadata", meta}};
  std::ostringstream csv;
  csv << "i,j,q\n";
  for (Eigen::Index i = 0; i < plan->q().rows(); ++i) {
    for (Eigen::Index j = 0; j < plan->q().cols(); ++j) csv << i << ',' << j << ',' << fmt(plan->q()(i, j)) << '\n';
  }
  o.files.push_back({"plan.csv", csv.str()});
  if (!feasible) {
    o.status = kInfeasible;
    o.note = "no binary plan meets the marginals; the result is the penalized minimum";
  }
  return o;
}

Outcome transport_energy(const Json& p, std::uint64_t) {
  const auto inst = io::transport_instance_from_json(p);
  if (!p.contains("plan")) throw ValidationError("energy needs a 'plan'");
  const auto plan = io::transport_plan_from_json(p.at("plan"));
  const auto m = transport::marginals(inst, plan);
  Outcome o;
  o.result = {{"result_kind", "transport.energy"},
              {"energy", transport::hamiltonian_energy(inst, plan)},
              {"terms", terms_json(transport::energy_terms(inst, plan))},
              {"marginals", {{"row_masses", m.row_masses}, {"col_masses", m.col_masses}}}};
  return o;
}

// ---- qot -------------------------------------------------------------------

std::optional<functionals::DynamicalMode> default_mode(functionals::Variant v) {
  using functionals::Variant;
  switch (v) {
    case Variant::baseline:
    case Variant::v1_distribution:
      return functionals::DynamicalMode::quantum;
    case Variant::classical_strict:
    case Variant::v1_classical:
      return functionals::DynamicalMode::classical;
    case Variant::v5_amplitude:
    case Variant::v5_dynamical:
      return functionals::DynamicalMode::amplitude;
    default:
      return std::nullopt;
  }
}

functionals::DynamicalMode mode_from_string(const std::string& s) {
  if (s == "quantum") return functionals::DynamicalMode::quantum;
  if (s == "classical") return functionals::DynamicalMode::classical;
  if (s == "amplitude") return functionals::DynamicalMode::amplitude;
  throw ValidationError("unknown dynamical mode '" + s + "'");
}

Outcome qot_eval(const Json& p, std::uint64_t) {
  using namespace functionals;
  const TransportProblem problem = io::problem_from_json(p);
  const SiteGrid& grid = problem.source().grid();
  std::optional<OpFamily> family;
  if (p.contains("family")) {
    std::vector<LinearOp> steps;
    for (const auto& s : p.at("family")) steps.push_back(io::operator_from_json(s, grid));
    family.emplace(std::move(steps));
  }
  // Static metrics use the given operator, else the composed family, else the identity.
  LinearOp op = LinearOp::identity(grid);
  if (p.contains("operator")) {
    op = io::operator_from_json(p.at("operator"), grid);
  } else if (family) {
    op = family->steps().front();
    for (std::size_t k = 1; k < family->size(); ++k) op = family->steps()[k].compose(op);
  }
  Outcome o;
  Json classical = nullptr;
  if (problem.kernel().is_real(1e-12)) classical = classical_cost(problem, op);
  Json residual = nullptr;
  if (constraint_kind(problem.variant()) != ConstraintKind::none) {
    residual = constraint_residual(problem, op).norm();
  }
  o.result = {{"result_kind", "qot.eval"},
              {"variant", to_string(problem.variant())},
              {"sqrt_convention", to_string(problem.kernel().convention())},
              {"quantum_cost", quantum_cost(problem, op)},
              {"quantum_cost_integral_form", quantum_cost_integral_form(problem, op)},
              {"classical_cost", classical},
              {"cost_term", cost_term(problem, op)},
              {"objective", variant_objective(problem, op)},
              {"residual_norm", residual}};
  if (family) {
    const auto pf = push_forward(*family, problem.source_distribution(), problem.target_distribution());
    Json mismatch = nullptr;
    if (pf.final_mismatch) mismatch = *pf.final_mismatch;
    o.result["push_forward"] = {{"masses", pf.masses}, {"final_mismatch", mismatch}};
    std::optional<DynamicalMode> mode = default_mode(problem.variant());
    if (p.contains("mode")) mode = mode_from_string(p.at("mode").get<std::string>());
    if (mode) {
      DynamicalOptions opts;
      opts.mode = *mode;
      opts.check_boundary = problem.target().has_value();
      const auto dc = dynamical_cost(*family, problem, opts);
      Json boundary = nullptr;
      if (dc.boundary_residual) boundary = *dc.boundary_residual;
      o.result["dynamical"] = {
          {"mode", to_string(*mode)}, {"value", dc.value}, {"per_step", dc.per_step}, {"boundary_residual", boundary}};
      std::ostringstream csv;
      csv << "t,step_cost,cumulative\n";
      double acc = 0.0;
      for (std::size_t t = 0; t < dc.per_step.size(); ++t) {
        acc += dc.per_step[t];
        csv << t + 1 << ',' << fmt(dc.per_step[t]) << ',' << fmt(acc) << '\n';
      }
      o.files.push_back({"cost_trace.csv", csv.str()});
    }
  }
  return o;
}

Outcome qot_optimize(const Json& p, std::uint64_t seed) {
  using namespace functionals;
  const TransportProblem problem = io::problem_from_json(p);
  OptimizeOptions opts;
  opts.seed = seed;
  opts.budget = p.value("budget", opts.budget);
  opts.restarts = p.value("restarts", opts.restarts);
  opts.enforce_constraint = p.value("enforce_constraint", opts.enforce_constraint);
  opts.penalty_stages = p.value("penalty_stages", opts.penalty_stages);
  if (p.contains("sense")) opts.sense = p.at("sense") == "maximize" ? Sense::maximize : Sense::minimize;
  const OptimizeResult r = optimize(problem, opts);
  Outcome o;
  o.result = {{"result_kind", "qot.optimize"},
              {"variant", to_string(problem.variant())},
              {"sense", to_string(r.sense)},
              {"objective", r.objective},
              {"cost", r.cost},
              {"residual_norm", r.residual_norm},
              {"evaluations", r.evaluations},
              {"budget_exhausted", r.budget_exhausted},
              {"operator", io::operator_to_json(r.op)},
              {"seed", seed},
              {"sqrt_convention", to_string(problem.kernel().convention())}};
  std::ostringstream csv;
  csv << "evaluation,merit,objective,residual_norm\n";
  for (const auto& e : r.trace) {
    csv << e.evaluation << ',' << fmt(e.merit) << ',' << fmt(e.objective) << ',' << fmt(e.residual_norm) << '\n';
  }
  o.files.push_back({"trace.csv", csv.str()});
  return o;
}

// ---- walk ------------------------------------------------------------------

std::string trajectory_csv(const walk::Trajectory& tr) {
  std::ostringstream csv;
  csv << "t,x,left_re,left_im,right_re,right_im,probability\n";
  for (const auto& s : tr.states) {
    for (int x = s.min_site(); x <= s.max_site(); ++x) {
      const Complex l = s.left_at(x);
      const Complex r = s.right_at(x);
      csv << s.t() << ',' << x << ',' << fmt(l.real()) << ',' << fmt(l.imag()) << ',' << fmt(r.real()) << ','
          << fmt(r.imag()) << ',' << fmt(s.site_probability(x)) << '\n';
    }
  }
  return csv.str();
}

std::string cost_trace_csv(const std::vector<double>& costs) {
  std::ostringstream csv;
  csv << "t,step_cost,cumulative\n";
  double acc = 0.0;
  for (std::size_t t = 0; t < costs.size(); ++t) {
    acc += costs[t];
    csv << t + 1 << ',' << fmt(costs[t]) << ',' << fmt(acc) << '\n';
  }
  return csv.str();
}

walk::WalkerState walk_initial(const Json& p) {
  return p.contains("initial") ? io::walker_state_from_json(p.at("initial")) : walk::WalkerState::origin_right();
}

walk::WalkCost walk_cost(const Json& p) {
  walk::WalkCost c;
  c.form = walk::cost_form_from_string(p.value("cost_form", std::string("paper_literal")));
  return c;
}

Json distribution_json(const walk::WalkerState& s) {
  std::vector<int> sites;
  for (int x = s.min_site(); x <= s.max_site(); ++x) sites.push_back(x);
  return {{"sites", sites}, {"probabilities", s.distribution()}};
}

Outcome walk_run(const Json& p, std::uint64_t) {
  const int steps = p.at("steps").get<int>();
  const auto coins = io::coins_from_json(get_or(p, "coin", "hadamard"), steps);
  const auto cost = walk_cost(p);
  const auto tr = walk::run(walk_initial(p), coins, cost);
  Outcome o;
  o.result = {{"result_kind", "walk.run"},
              {"steps", steps},
              {"cost_form", walk::to_string(cost.form)},
              {"total_cost", tr.total_cost},
              {"step_costs", tr.step_costs},
              {"final_distribution", distribution_json(tr.states.back())},
              {"norm", tr.states.back().norm_squared()}};
  o.files.push_back({"trajectory.csv", trajectory_csv(tr)});
  o.files.push_back({"cost_trace.csv", cost_trace_csv(tr.step_costs)});
  return o;
}

Outcome walk_optimize(const Json& p, std::uint64_t seed) {
  const int steps = p.at("steps").get<int>();
  if (!p.contains("target")) throw ValidationError("walk optimize needs a 'target'");
  const auto cost = walk_cost(p);
  const auto initial = walk_initial(p);
  walk::CoinOptimizeOptions opts;
  opts.seed = seed;
  opts.budget = p.value("budget", opts.budget);
  opts.restarts = p.value("restarts", opts.restarts);
  if (p.contains("penalty")) opts.penalty = p.at("penalty").get<double>();
  const auto r = walk::optimize_coins(initial, initial.t() + steps, io::walk_target_from_json(p.at("target")), cost, opts);
  Json coins = Json::array();
  for (const auto& c : r.coins) coins.push_back(io::coin_to_json(c));
  const auto tr = walk::run(initial, r.coins, cost);
  Outcome o;
  o.result = {{"result_kind", "walk.optimize"},
              {"steps", steps},
              {"cost_form", walk::to_string(cost.form)},
              {"total_cost", r.total_cost},
              {"mismatch", r.mismatch},
              {"objective", r.objective},
              {"penalty", r.penalty},
              {"angles", r.angles},
              {"coins", coins},
              {"warnings", r.warnings},
              {"evaluations", r.evaluations},
              {"budget_exhausted", r.budget_exhausted},
              {"seed", seed},
              {"final_distribution", distribution_json(tr.states.back())}};
  o.files.push_back({"trajectory.csv", trajectory_csv(tr)});
  o.files.push_back({"cost_trace.csv", cost_trace_csv(tr.step_costs)});
  return o;
}

// ---- qfa -------------------------------------------------------------------

qfa::Word qfa_word(const qfa::Automaton& aut, const Json& p) {
  return io::word_from_json(aut, get_or(p, "word", Json::array({aut.alphabet().front()})));
}

qfa::HaltingCostMode cost_mode(const Json& p) {
  const auto m = p.value("cost_mode", std::string("expected"));
  if (m == "expected") return qfa::HaltingCostMode::expected;
  if (m == "certain_halt") return qfa::HaltingCostMode::certain_halt;
  throw ValidationError("unknown cost_mode '" + m + "'");
}

qfa::Automaton qfa_automaton(const Json& p) {
  if (!p.contains("states")) throw ValidationError("payload needs an automaton ('states', 'alphabet', ...)");
  return io::automaton_from_json(p);
}

Outcome qfa_run(const Json& p, std::uint64_t seed) {
  const auto aut = qfa_automaton(p);
  const auto word = qfa_word(aut, p);
  const std::size_t n = p.value("tape_length", std::size_t{1});
  const std::size_t max_steps = p.value("max_steps", std::size_t{32});
  const std::string mode_name = p.value("mode", std::string("branch_tracking"));
  const auto mode =
      mode_name == "branch_tracking" ? qfa::MeasureMode::branch_tracking : qfa::MeasureMode::trajectory_sampling;
  Outcome o;
  qfa::HaltingRecord rec{};
  if (mode == qfa::MeasureMode::branch_tracking) {
    rec = qfa::run_with_measurement(aut, word, n, max_steps, mode, seed);
  } else {
    const std::size_t count = p.value("trajectories", std::size_t{1});
    std::size_t acc = 0, rej = 0, running = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const auto r = qfa::run_with_measurement(aut, word, n, max_steps, mode, derive_seed(seed, "cli.qfa.trajectory", i));
      if (i == 0) rec = r;
      if (r.outcome == qfa::Outcome::accepted) ++acc;
      if (r.outcome == qfa::Outcome::rejected) ++rej;
      if (r.outcome == qfa::Outcome::running) ++running;
    }
    o.result["trajectories"] = {{"count", count}, {"accepted", acc}, {"rejected", rej}, {"running", running}};
  }
  o.result["result_kind"] = "qfa.run";
  o.result["mode"] = qfa::to_string(mode);
  o.result["outcome"] = qfa::to_string(rec.outcome);
  o.result["steps"] = rec.steps;
  o.result["accept_probability"] = rec.accept_probability;
  o.result["reject_probability"] = rec.reject_probability;
  o.result["running_probability"] = rec.running_probability;
  o.result["seed"] = seed;
  std::ostringstream csv;
  csv << "t,accept,reject,running\n";
  for (std::size_t k = 0; k < rec.per_step.size(); ++k) {
    const auto& b = rec.per_step[k];
    csv << k + 1 << ',' << fmt(b.accept) << ',' << fmt(b.reject) << ',' << fmt(b.running) << '\n';
  }
  o.files.push_back({"branches.csv", csv.str()});
  return o;
}

Outcome qfa_cost(const Json& p, std::uint64_t) {
  const auto aut = qfa_automaton(p);
  const auto mode = cost_mode(p);
  const auto c = qfa::halting_cost(aut, qfa_word(aut, p), p.value("tape_length", std::size_t{1}),
                                   p.value("max_steps", std::size_t{32}), mode);
  Outcome o;
  o.result = {{"result_kind", "qfa.cost"},
              {"cost_mode", qfa::to_string(mode)},
              {"tau", c.value},
              {"steps", c.steps},
              {"halted", c.halted},
              {"basis_size", c.basis_size}};
  return o;
}

Outcome qfa_minimize(const Json& p, std::uint64_t seed) {
  qfa::MinimizeOptions opts;
  opts.seed = seed;
  opts.tape_length = p.value("tape_length", std::size_t{2});
  opts.max_steps = p.value("max_steps", opts.max_steps);
  opts.budget = p.value("budget", opts.budget);
  opts.mode = cost_mode(p);
  const Json fam = get_or(p, "family", "rotation");
  qfa::AutomatonFamily family;
  qfa::Word word;
  if (fam.is_string()) {
    if (fam.get<std::string>() != "rotation") throw ValidationError("unknown built-in family " + fam.dump());
    auto af = qfa::rotation_family();
    word = qfa_word(af.make({0.0}), p);
    family = std::move(af);
  } else {
    std::vector<qfa::Automaton> list;
    for (const auto& a : fam) list.push_back(io::automaton_from_json(a));
    word = qfa_word(list.front(), p);
    family = std::move(list);
  }
  const auto r = qfa::minimize_halting_cost(family, word, opts);
  Outcome o;
  Json index = nullptr;
  if (r.index) index = *r.index;
  o.result = {{"result_kind", "qfa.minimize"},
              {"cost_mode", qfa::to_string(opts.mode)},
              {"tau", r.tau},
              {"index", index},
              {"parameters", r.parameters},
              {"evaluations", r.evaluations},
              {"exhaustive", r.exhaustive},
              {"seed", seed}};
  return o;
}

// ---- game ------------------------------------------------------------------

Json distribution_json(const game::SignalDistribution& d) {
  return Json::array({Json::array({d[0][0], d[0][1]}), Json::array({d[1][0], d[1][1]})});
}

Outcome game_payoff(const Json& p, std::uint64_t) {
  const auto pay = io::payoffs_from_json(p);
  const Json strategies = get_or(p, "strategies", Json::array({"S_C", "S_C"}));
  const auto s1 = io::strategy_from_json(strategies.at(0));
  const auto s2 = io::strategy_from_json(strategies.at(1));
  Outcome o;
  o.result = {{"result_kind", "game.payoff"},
              {"payoff1", game::expected_payoff(0, s1, s2, pay)},
              {"payoff2", game::expected_payoff(1, s1, s2, pay)},
              {"distribution", distribution_json(game::signal_distribution(s1, s2))}};
  return o;
}

Outcome game_threshold(const Json& p, std::uint64_t) {
  if (!p.contains("X") || !p.contains("Y")) throw ValidationError("threshold needs X and Y");
  const double x = p.at("X").get<double>();
  const double y = p.at("Y").get<double>();
  const double r = p.value("r", 1.0);
  // Z does not enter the threshold; any Z > Y gives a valid table.
  const double z = p.value("Z", 2.0 * y);
  if (r == 0.0) throw DegenerateInputError("no punishment (r = 0): the trigger threshold is undefined");
  const double th = game::trigger_threshold(game::PayoffTable(x, y, z), r);
  Outcome o;
  o.result = {{"result_kind", "game.threshold"}, {"threshold", th}, {"X", x}, {"Y", y}, {"r", r}};
  o.summary = fmt(th) + "\n";
  return o;
}

Outcome game_simulate(const Json& p, std::uint64_t seed) {
  const auto spec = io::game_spec_from_json(p);
  const std::size_t horizon = spec.horizon().value_or(1000);
  const auto opts = io::repeated_options_from_json(p);
  const std::string mode = p.value("mode", std::string("expectation"));
  const game::RepeatedGameSpec closed(spec.payoffs(), spec.delta(), spec.r());
  Outcome o;
  o.result = {{"result_kind", "game.simulate"},
              {"mode", mode},
              {"horizon", horizon},
              {"seed", seed},
              {"monitoring", game::to_string(opts.monitoring)},
              {"cooperative_value", game::cooperative_value(closed)},
              {"threshold", spec.r() > 0.0 ? Json(game::trigger_threshold(spec.payoffs(), spec.r())) : Json(nullptr)}};
  std::ostringstream csv;
  if (mode == "expectation") {
    const auto run = game::run_repeated_expectation(spec, horizon, opts);
    o.result["printed"] = run.printed;
    o.result["recursive"] = run.recursive;
    csv << "t,p_cooperating,pay1,pay2\n";
    for (const auto& r : run.rounds) csv << r.t << ',' << fmt(r.p_cooperating) << ',' << fmt(r.pay1) << ',' << fmt(r.pay2) << '\n';
  } else {
    const std::size_t runs = p.value("runs", std::size_t{1});
    std::array<double, 2> printed{0, 0}, recursive{0, 0}, sq{0, 0};
    for (std::size_t i = 0; i < runs; ++i) {
      const auto run = game::run_repeated(spec, horizon, derive_seed(seed, "cli.game.run", i), opts);
      for (int a = 0; a < 2; ++a) {
        printed[a] += run.printed[a];
        recursive[a] += run.recursive[a];
        sq[a] += run.recursive[a] * run.recursive[a];
      }
      if (i == 0) {
        csv << "t,strategy1,strategy2,w1,w2,pay1,pay2,discounted1,discounted2\n";
        for (const auto& r : run.rounds) {
          csv << r.t << ',' << r.strategy1 << ',' << r.strategy2 << ',' << game::to_char(r.w1) << ','
              << game::to_char(r.w2) << ',' << fmt(r.pay1) << ',' << fmt(r.pay2) << ',' << fmt(r.discounted1) << ','
              << fmt(r.discounted2) << '\n';
        }
      }
    }
    const double n = static_cast<double>(runs);
    std::array<double, 2> sd{0, 0};
    for (int a = 0; a < 2; ++a) {
      printed[a] /= n;
      recursive[a] /= n;
      sd[a] = runs > 1 ? std::sqrt(std::max(0.0, (sq[a] - n * recursive[a] * recursive[a]) / (n - 1.0))) : 0.0;
    }
    o.result["runs"] = runs;
    o.result["printed"] = printed;
    o.result["recursive"] = recursive;
    o.result["recursive_stddev"] = sd;
  }
  o.files.push_back({"rounds.csv", csv.str()});
  if (opts.deviation) {
    const auto dev = game::QuantumStrategy::noisy_cooperate(opts.deviation->a, opts.deviation->b);
    for (auto conv : {game::DiscountConvention::recursive, game::DiscountConvention::printed}) {
      const auto v = game::simulate_deviation(spec, dev, conv);
      o.result[conv == game::DiscountConvention::recursive ? "verdict" : "verdict_printed"] = {
          {"gain", v.gain}, {"loss", v.loss}, {"profitable", v.profitable}, {"convention", game::to_string(v.convention)}};
    }
  }
  return o;
}

// ---- command table ---------------------------------------------------------

std::vector<Command> commands() {
  using F = FlagType;
  const FlagSpec budget{"--budget", "budget", F::integer, "evaluation budget"};
  const FlagSpec restarts{"--restarts", "restarts", F::integer, "optimizer restarts"};
  const FlagSpec word{"--word", "word", F::string, "input word, one character per letter"};
  const FlagSpec tape{"--tape-length", "tape_length", F::integer, "periodic tape length"};
  const FlagSpec max_steps{"--max-steps", "max_steps", F::integer, "step cap"};
  const FlagSpec cmode{"--cost-mode", "cost_mode", F::string, "expected | certain_halt"};
  const FlagSpec X{"--X", "X", F::number, "mutual cooperation payoff"};
  const FlagSpec Y{"--Y", "Y", F::number, "temptation bonus"};
  const FlagSpec Z{"--Z", "Z", F::number, "sucker loss"};
  const FlagSpec r{"--r", "r", F::number, "punishment probability"};
  const FlagSpec variant{"--variant", "variant", F::string, "functional variant"};
  const FlagSpec form{"--cost-form", "cost_form", F::string, "paper_literal | signed_kernel | abs_kernel"};
  const FlagSpec steps{"--steps", "steps", F::integer, "number of walk steps"};
  return {
      {"transport", "solve", "minimize the penalized transport energy",
       {{"--solver", "solver", F::string, "exhaustive | annealing"},
        {"--penalty-weight", "penalty_weight", F::number, "marginal penalty weight w"},
        {"--exhaustive-cap", "exhaustive_cap", F::integer, "largest bit count for enumeration"}},
       transport_solve},
      {"transport", "energy", "evaluate the energy of a given plan",
       {{"--penalty-weight", "penalty_weight", F::number, "marginal penalty weight w"}}, transport_energy},
      {"qot", "eval", "evaluate the cost functionals on an operator", {variant,
        {"--mode", "mode", F::string, "dynamical mode: quantum | classical | amplitude"}}, qot_eval},
      {"qot", "optimize", "optimize a unitary for a functional",
       {variant, budget, restarts, {"--sense", "sense", F::string, "minimize | maximize"},
        {"--enforce-constraint", "enforce_constraint", F::boolean, "penalize the constraint residual"}},
       qot_optimize},
      {"walk", "run", "run a coined walk with transport cost",
       {steps, {"--coin", "coin", F::string, "hadamard | identity"}, form}, walk_run},
      {"walk", "optimize", "optimize time-dependent coins",
       {steps, form, budget, restarts, {"--penalty", "penalty", F::number, "terminal mismatch weight"}}, walk_optimize},
      {"qfa", "run", "run a measured automaton",
       {word, tape, max_steps, {"--mode", "mode", F::string, "branch_tracking | trajectory_sampling"},
        {"--trajectories", "trajectories", F::integer, "sampled trajectories"}},
       qfa_run},
      {"qfa", "cost", "halting cost of an automaton", {word, tape, max_steps, cmode}, qfa_cost},
      {"qfa", "minimize", "minimize the halting cost over a family",
       {word, tape, max_steps, cmode, budget, {"--family", "family", F::string, "built-in family: rotation"}},
       qfa_minimize},
      {"game", "payoff", "expected one-shot payoffs", {X, Y, Z}, game_payoff},
      {"game", "threshold", "trigger threshold Y / (rX + Y)", {X, Y, Z, r}, game_threshold, {"trigger-threshold"}},
      {"game", "simulate", "repeated play under trigger strategies",
       {X, Y, Z, r, {"--delta", "delta", F::number, "discount factor"}, {"--horizon", "horizon", F::integer, "rounds"},
        {"--mode", "mode", F::string, "expectation | sample"}, {"--runs", "runs", F::integer, "sampled runs"},
        {"--monitoring", "monitoring", F::string, "public | private"}},
       game_simulate},
  };
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

struct Invocation {
  const Command* command = nullptr;
  std::string in;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::map<std::string, std::pair<CLI::Option*, std::string>> flags;  // key -> option, raw value
};

int execute(const Invocation& inv, const std::vector<std::string>& argv) {
  const Command& cmd = *inv.command;
  Json payload = Json::object();
  std::uint64_t seed = inv.seed;
  std::string out_dir = inv.out;
  if (!inv.in.empty()) {
    Json doc = read_json_file(inv.in);
    if (doc.is_object() && doc.contains("kind") && doc.contains("payload")) {
      const auto v = schema_violations("scenario", doc);
      if (!v.empty()) throw ValidationError("scenario " + v.front().path + ": " + v.front().message);
      if (doc.at("kind") != cmd.kind) {
        throw ValidationError("scenario kind " + doc.at("kind").dump() + " does not match command '" + cmd.kind + "'");
      }
      if (!inv.seed_given && doc.contains("seed")) seed = doc.at("seed").get<std::uint64_t>();
      if (out_dir.empty() && doc.contains("out")) out_dir = doc.at("out").get<std::string>();
      payload = doc.at("payload");
    } else {
      payload = std::move(doc);
    }
  }
  for (const auto& f : cmd.flags) {
    const auto& [opt, raw] = inv.flags.at(f.key);
    if (opt->count() > 0) payload[f.key] = flag_value(f, raw);
  }
  const auto violations = schema_violations("payload/" + cmd.kind, payload);
  if (!violations.empty()) {
    for (const auto& v : violations) std::cerr << "qotk: schema violation at " << v.path << ": " << v.message << '\n';
    return kInvalid;
  }

  const auto started = std::chrono::steady_clock::now();
  Outcome o = cmd.handler(payload, seed);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const std::string result_schema = "result/" + cmd.kind + "." + cmd.name;
  const auto bad = schema_violations(result_schema, o.result);
  if (!bad.empty()) {
    std::cerr << "qotk: internal error: result fails " << result_schema << " at " << bad.front().path << ": "
              << bad.front().message << '\n';
    return kInternal;
  }
  const std::string text = o.result.dump(2) + "\n";
  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_text(dir / "result.json", text);
    for (const auto& [name, contents] : o.files) write_text(dir / name, contents);
    Json meta{{"tool", "qotk"},
              {"version", kVersion},
              {"command", cmd.kind + " " + cmd.name},
              {"argv", argv},
              {"seed", seed},
              {"started_utc", utc_now()},
              {"elapsed_seconds", elapsed},
              {"exit_status", o.status}};
    write_text(dir / "run_meta.json", meta.dump(2) + "\n");
  }
  std::cout << (o.summary ? *o.summary : text);
  if (!o.note.empty()) std::cerr << "qotk: " << o.note << '\n';
  return o.status;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"qotk: quantum optimal transport toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  const auto table = commands();
  std::map<std::string, CLI::App*> kinds;
  std::vector<std::pair<CLI::App*, Invocation>> leaves;
  leaves.reserve(table.size());
  for (const auto& cmd : table) {
    if (!kinds.count(cmd.kind)) {
      kinds[cmd.kind] = app.add_subcommand(cmd.kind, cmd.kind + " commands");
      kinds[cmd.kind]->require_subcommand(1);
    }
    CLI::App* sub = kinds[cmd.kind]->add_subcommand(cmd.name, cmd.help);
    for (const auto& a : cmd.aliases) sub->alias(a);
    leaves.emplace_back(sub, Invocation{});
    Invocation& inv = leaves.back().second;
    inv.command = &cmd;
    sub->add_option("--in", inv.in, "scenario or payload JSON file");
    sub->add_option("--out", inv.out, "output directory for result.json, CSV traces and run_meta.json");
    sub->add_option("--seed", inv.seed, "root seed; module streams derive from it");
    for (const auto& f : cmd.flags) {
      auto& slot = inv.flags[f.key];
      slot.first = sub->add_option(f.flag, slot.second, f.help);
    }
  }

  std::string validate_path;
  std::string validate_kind;
  CLI::App* validate = app.add_subcommand("validate", "check a scenario, payload or result file without running it");
  validate->add_option("file", validate_path, "JSON file")->required();
  validate->add_option("--kind", validate_kind, "payload kind for bare payload files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  const std::vector<std::string> args(argv + 1, argv + argc);
  if (validate->parsed()) {
    const auto report = validate_file(validate_path, validate_kind);
    std::cout << report_to_json(report).dump(2) << '\n';
    return report.ok() ? kOk : kInvalid;
  }
  for (auto& [sub, inv] : leaves) {
    if (!sub->parsed()) continue;
    inv.seed_given = sub->get_option("--seed")->count() > 0;
    try {
      return execute(inv, args);
    } catch (const DegenerateInputError& e) {
      std::cerr << "qotk: degenerate input: " << e.what() << '\n';
      return kInfeasible;
    } catch (const SizeError& e) {
      std::cerr << "qotk: infeasible: " << e.what() << '\n';
      return kInfeasible;
    } catch (const std::domain_error& e) {
      std::cerr << "qotk: degenerate input: " << e.what() << '\n';
      return kInfeasible;
    } catch (const ValidationError& e) {
      std::cerr << "qotk: invalid input: " << e.what() << '\n';
      return kInvalid;
    } catch (const std::invalid_argument& e) {
      std::cerr << "qotk: contract violation: " << e.what() << '\n';
      return kInvalid;
    } catch (const Json::exception& e) {
      std::cerr << "qotk: invalid input: " << e.what() << '\n';
      return kInvalid;
    }
  }
  return kInvalid;
}

}  // namespace qot::cli
