#include "qot/game.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "qot/errors.hpp"
#include "qot/rng.hpp"

namespace qot::game {
namespace {

constexpr const char* kCoop = "S_C";
constexpr const char* kPunish = "S_Cbar";

// Per-agent rule state: trigger rules use "coop"/"punish", automata use their state names.
using AgentState = std::string;

AgentState initial_state(const AgentRule& rule) {
  if (const auto* a = std::get_if<AutomatonRule>(&rule)) return a->automaton.initial();
  return "coop";
}

bool plays_cooperate(const AgentRule& rule, const AgentState& s) {
  if (const auto* a = std::get_if<AutomatonRule>(&rule)) return a->automaton.action(s) == Signal::C;
  return s == "coop";
}

QuantumStrategy punishment(const AgentRule& rule) {
  if (const auto* a = std::get_if<AutomatonRule>(&rule)) return QuantumStrategy::noisy_cooperate(a->punish_a, a->punish_b);
  const auto& t = std::get<TriggerRule>(rule);
  return QuantumStrategy::noisy_cooperate(t.punish_a, t.punish_b);
}

double trigger_r(const AgentRule& rule, const RepeatedGameSpec& spec) {
  const auto& t = std::get<TriggerRule>(rule);
  const double r = t.r.value_or(spec.r());
  if (!(r >= 0.0 && r <= 1.0)) throw ContractError("trigger probability must lie in [0,1]");
  return r;
}

struct RoundPlan {
  QuantumStrategy strategy;
  bool cooperative_label;
};

RoundPlan strategy_for(std::size_t agent, std::size_t t, const AgentRule& rule, const AgentState& s,
                       const RepeatedOptions& options) {
  if (options.deviation && options.deviation->agent == agent && options.deviation->round == t) {
    return {QuantumStrategy::noisy_cooperate(options.deviation->a, options.deviation->b), false};
  }
  if (plays_cooperate(rule, s)) return {QuantumStrategy::cooperate(), true};
  return {punishment(rule), false};
}

int observation(std::size_t agent, Signal w1, Signal w2, Monitoring monitoring) {
  const Signal opponent = agent == 0 ? w2 : w1;
  if (monitoring == Monitoring::private_signals) return opponent == Signal::D ? 1 : 0;
  return (w1 == Signal::D || w2 == Signal::D) ? 1 : 0;
}

void check_options(const RepeatedOptions& options) {
  if (options.deviation && options.deviation->agent > 1) throw ContractError("deviating agent must be 0 or 1");
}

}  // namespace

char to_char(Signal s) { return s == Signal::C ? 'C' : 'D'; }

PayoffTable::PayoffTable(double X, double Y, double Z) : x_(X), y_(Y), z_(Z) {
  if (!(X > 0.0) || !(Y > 0.0) || !(Z > 0.0)) throw ContractError("payoff parameters X, Y, Z must be positive");
  if (!(Y < Z)) throw ContractError("payoff table requires Y < Z");
}

double PayoffTable::payoff(std::size_t agent, Signal w1, Signal w2) const {
  if (agent > 1) throw ContractError("agent must be 0 or 1");
  const Signal mine = agent == 0 ? w1 : w2;
  const Signal theirs = agent == 0 ? w2 : w1;
  if (mine == Signal::C && theirs == Signal::C) return x_;
  if (mine == Signal::C && theirs == Signal::D) return x_ - z_;
  if (mine == Signal::D && theirs == Signal::C) return x_ + y_;
  return x_ - z_ + y_;
}

QuantumStrategy::QuantumStrategy(CMatrix op, Kind kind) : op_(std::move(op)), kind_(kind) {
  if (op_.rows() != 2 || op_.cols() != 2) throw DimensionError("quantum strategy must be 2x2");
  const double n = op_.col(0).squaredNorm();
  if (std::abs(n - 1.0) > kContractTol) {
    std::ostringstream msg;
    msg << "quantum strategy must satisfy ||S|0>||^2 = 1 (got " << n << ")";
    throw ContractError(msg.str());
  }
}

QuantumStrategy QuantumStrategy::cooperate() {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 1.0;
  return QuantumStrategy(std::move(m), Kind::pure_C);
}

QuantumStrategy QuantumStrategy::noisy_cooperate(Complex a, Complex b) {
  if (std::abs(std::norm(a) + std::norm(b) - 1.0) > kContractTol) throw ContractError("noisy strategy needs |a|^2 + |b|^2 = 1");
  if (b == Complex(0.0)) throw ContractError("noisy strategy needs b != 0");
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 0) = b;
  return QuantumStrategy(std::move(m), Kind::noisy_C);
}

std::array<double, 2> QuantumStrategy::signal_probabilities() const {
  const double pc = std::norm(op_(0, 0));
  const double pd = std::norm(op_(1, 0));
  const double total = pc + pd;
  return {pc / total, pd / total};
}

SignalDistribution signal_distribution(const QuantumStrategy& s1, const QuantumStrategy& s2) {
  const auto p1 = s1.signal_probabilities();
  const auto p2 = s2.signal_probabilities();
  SignalDistribution d{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) d[i][j] = p1[i] * p2[j];
  }
  return d;
}

double expected_payoff(std::size_t agent, const QuantumStrategy& s1, const QuantumStrategy& s2, const PayoffTable& payoffs) {
  const SignalDistribution d = signal_distribution(s1, s2);
  double v = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) v += payoffs.payoff(agent, Signal(i), Signal(j)) * d[i][j];
  }
  return v;
}

std::string to_string(DiscountConvention c) { return c == DiscountConvention::recursive ? "recursive" : "printed"; }
std::string to_string(Monitoring m) { return m == Monitoring::public_signals ? "public" : "private"; }

ClassicalAutomaton::ClassicalAutomaton(std::vector<std::string> states,
                                       std::map<std::pair<std::string, int>, std::string> transitions,
                                       std::string initial, std::map<std::string, Signal> output)
    : states_(std::move(states)), transitions_(std::move(transitions)), initial_(std::move(initial)), output_(std::move(output)) {
  auto known = [&](const std::string& s) { return std::find(states_.begin(), states_.end(), s) != states_.end(); };
  if (!known(initial_)) throw ContractError("initial state '" + initial_ + "' is not a state");
  for (const auto& s : states_) {
    for (int input : {0, 1}) {
      const auto it = transitions_.find({s, input});
      if (it == transitions_.end()) {
        std::ostringstream msg;
        msg << "partial transition function: no entry for (" << s << ", " << input << ")";
        throw ContractError(msg.str());
      }
      if (!known(it->second)) throw ContractError("transition to unknown state '" + it->second + "'");
    }
    if (!output_.count(s)) throw ContractError("state '" + s + "' has no action");
  }
}

ClassicalAutomaton ClassicalAutomaton::grim_trigger() {
  return ClassicalAutomaton({"C", "D"}, {{{"C", 0}, "C"}, {{"D", 0}, "D"}, {{"C", 1}, "D"}, {{"D", 1}, "D"}}, "C",
                            {{"C", Signal::C}, {"D", Signal::D}});
}

ClassicalAutomaton ClassicalAutomaton::always_cooperate() {
  return ClassicalAutomaton({"C"}, {{{"C", 0}, "C"}, {{"C", 1}, "C"}}, "C", {{"C", Signal::C}});
}

const std::string& ClassicalAutomaton::next(const std::string& state, int input) const {
  const auto it = transitions_.find({state, input});
  if (it == transitions_.end()) throw ContractError("no transition for state '" + state + "'");
  return it->second;
}

Signal ClassicalAutomaton::action(const std::string& state) const {
  const auto it = output_.find(state);
  if (it == output_.end()) throw ContractError("unknown state '" + state + "'");
  return it->second;
}

std::vector<std::string> ClassicalAutomaton::trace(const std::vector<int>& inputs) const {
  std::vector<std::string> out;
  std::string s = initial_;
  for (int input : inputs) {
    s = next(s, input);
    out.push_back(s);
  }
  return out;
}

RepeatedGameSpec::RepeatedGameSpec(PayoffTable payoffs, double delta, double r, std::optional<std::size_t> horizon)
    : payoffs_(payoffs), delta_(delta), r_(r), horizon_(horizon) {
  if (!(delta > 0.0 && delta < 1.0)) throw ContractError("discount factor must lie in (0,1)");
  if (!(r >= 0.0 && r <= 1.0)) throw ContractError("punishment probability must lie in [0,1]");
}

double cooperative_value(const RepeatedGameSpec& spec) {
  if (spec.horizon()) throw ContractError("cooperative value is the infinite-horizon closed form");
  return spec.payoffs().X() / (1.0 - spec.delta());
}

double trigger_threshold(const PayoffTable& payoffs, double r) {
  if (!(r > 0.0)) throw ContractError("no punishment (r = 0): the trigger threshold is undefined");
  if (r > 1.0) throw ContractError("punishment probability must be <= 1");
  return payoffs.Y() / (r * payoffs.X() + payoffs.Y());
}

DeviationVerdict simulate_deviation(const RepeatedGameSpec& spec, const QuantumStrategy& deviation,
                                    DiscountConvention convention) {
  const double b2 = deviation.signal_probabilities()[1];
  if (!(b2 > 0.0)) throw ContractError("deviation must emit D with positive probability");
  const QuantumStrategy coop = QuantumStrategy::cooperate();
  const PayoffTable& pay = spec.payoffs();
  const double delta = spec.delta();
  double gain = expected_payoff(0, deviation, coop, pay) - expected_payoff(0, coop, coop, pay);
  double loss = delta * spec.r() * b2 * pay.X() / (1.0 - delta);
  if (convention == DiscountConvention::printed) {
    // Both sides carry the (1 - delta) delta weight of the deviation round.
    gain *= (1.0 - delta) * delta;
    loss *= (1.0 - delta) * delta;
  }
  return {gain, loss, gain > loss, convention};
}

RepeatedRun run_repeated(const RepeatedGameSpec& spec, std::size_t horizon, std::uint64_t seed,
                         const RepeatedOptions& options) {
  check_options(options);
  Rng rng(derive_seed(seed, "game.run"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double delta = spec.delta();
  std::array<AgentState, 2> state{initial_state(options.rules[0]), initial_state(options.rules[1])};
  RepeatedRun run;
  double weight_printed = (1.0 - delta);
  double weight_recursive = 1.0;
  for (std::size_t t = 1; t <= horizon; ++t) {
    weight_printed *= delta;
    const RoundPlan p1 = strategy_for(0, t, options.rules[0], state[0], options);
    const RoundPlan p2 = strategy_for(1, t, options.rules[1], state[1], options);
    const Signal w1 = unit(rng) < p1.strategy.signal_probabilities()[1] ? Signal::D : Signal::C;
    const Signal w2 = unit(rng) < p2.strategy.signal_probabilities()[1] ? Signal::D : Signal::C;
    const double pay1 = spec.payoffs().payoff(0, w1, w2);
    const double pay2 = spec.payoffs().payoff(1, w1, w2);
    run.printed[0] += weight_printed * pay1;
    run.printed[1] += weight_printed * pay2;
    run.recursive[0] += weight_recursive * pay1;
    run.recursive[1] += weight_recursive * pay2;
    weight_recursive *= delta;
    run.rounds.push_back({t, p1.cooperative_label ? kCoop : kPunish, p2.cooperative_label ? kCoop : kPunish, w1, w2,
                          pay1, pay2, run.printed[0], run.printed[1]});

    for (std::size_t i = 0; i < 2; ++i) {
      const int seen = observation(i, w1, w2, options.monitoring);
      if (const auto* a = std::get_if<AutomatonRule>(&options.rules[i])) {
        state[i] = a->automaton.next(state[i], seen);
      } else if (state[i] == "coop" && seen == 1) {
        const double r = trigger_r(options.rules[i], spec);
        if (r >= 1.0 || (r > 0.0 && unit(rng) < r)) state[i] = "punish";
      }
    }
  }
  return run;
}

ExpectedRun run_repeated_expectation(const RepeatedGameSpec& spec, std::size_t horizon, const RepeatedOptions& options) {
  check_options(options);
  const double delta = spec.delta();
  std::map<std::pair<AgentState, AgentState>, double> dist{
      {{initial_state(options.rules[0]), initial_state(options.rules[1])}, 1.0}};
  ExpectedRun run;
  double weight_printed = (1.0 - delta);
  double weight_recursive = 1.0;
  for (std::size_t t = 1; t <= horizon; ++t) {
    weight_printed *= delta;
    ExpectedRound round{t, 0.0, 0.0, 0.0};
    std::map<std::pair<AgentState, AgentState>, double> next;
    for (const auto& [joint, p] : dist) {
      if (p == 0.0) continue;
      const RoundPlan p1 = strategy_for(0, t, options.rules[0], joint.first, options);
      const RoundPlan p2 = strategy_for(1, t, options.rules[1], joint.second, options);
      if (plays_cooperate(options.rules[0], joint.first) && plays_cooperate(options.rules[1], joint.second)) {
        round.p_cooperating += p;
      }
      const SignalDistribution sd = signal_distribution(p1.strategy, p2.strategy);
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          const double pw = sd[i][j];
          if (pw == 0.0) continue;
          const Signal w1 = Signal(i);
          const Signal w2 = Signal(j);
          round.pay1 += p * pw * spec.payoffs().payoff(0, w1, w2);
          round.pay2 += p * pw * spec.payoffs().payoff(1, w1, w2);
          // Branch each agent's next state; agents update independently given the signals.
          std::array<std::vector<std::pair<AgentState, double>>, 2> branches;
          const std::array<const AgentState*, 2> cur{&joint.first, &joint.second};
          for (std::size_t a = 0; a < 2; ++a) {
            const int seen = observation(a, w1, w2, options.monitoring);
            if (const auto* ar = std::get_if<AutomatonRule>(&options.rules[a])) {
              branches[a].push_back({ar->automaton.next(*cur[a], seen), 1.0});
            } else if (*cur[a] == "coop" && seen == 1) {
              const double r = trigger_r(options.rules[a], spec);
              branches[a].push_back({"punish", r});
              branches[a].push_back({"coop", 1.0 - r});
            } else {
              branches[a].push_back({*cur[a], 1.0});
            }
          }
          for (const auto& [s1, q1] : branches[0]) {
            for (const auto& [s2, q2] : branches[1]) {
              if (q1 * q2 > 0.0) next[{s1, s2}] += p * pw * q1 * q2;
            }
          }
        }
      }
    }
    dist = std::move(next);
    run.printed[0] += weight_printed * round.pay1;
    run.printed[1] += weight_printed * round.pay2;
    run.recursive[0] += weight_recursive * round.pay1;
    run.recursive[1] += weight_recursive * round.pay2;
    weight_recursive *= delta;
    run.rounds.push_back(round);
  }
  return run;
}

}  // namespace qot::game
