#pragma once

// Repeated two-player quantum prisoners' dilemma without entanglement:
// each agent applies a quantum strategy S to |0> = |C>, both outcomes are
// measured in the {|C>, |D>} basis and paid according to the payoff table.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qot/linalg.hpp"

namespace qot::game {

enum class Signal { C = 0, D = 1 };
char to_char(Signal s);

class PayoffTable {
 public:
  /// Requires X, Y, Z > 0 and Y < Z.
  PayoffTable(double X, double Y, double Z);

  double X() const { return x_; }
  double Y() const { return y_; }
  double Z() const { return z_; }
  /// Payoff of agent (0 or 1) when agent 1 emits w1 and agent 2 emits w2.
  double payoff(std::size_t agent, Signal w1, Signal w2) const;

 private:
  double x_, y_, z_;
};

class QuantumStrategy {
 public:
  enum class Kind { pure_C, noisy_C, custom };

  /// Requires ||S|0>||^2 = 1 within 1e-9.
  explicit QuantumStrategy(CMatrix op, Kind kind = Kind::custom);

  /// S_C = |C><C|.
  static QuantumStrategy cooperate();
  /// a|C><C| + b|D><C| with |a|^2 + |b|^2 = 1 and b != 0.
  static QuantumStrategy noisy_cooperate(Complex a, Complex b);

  const CMatrix& op() const { return op_; }
  Kind kind() const { return kind_; }
  /// (P(C), P(D)) of the measured signal.
  std::array<double, 2> signal_probabilities() const;

 private:
  CMatrix op_;
  Kind kind_;
};

/// P(w1, w2) indexed [w1][w2]; a product distribution.
using SignalDistribution = std::array<std::array<double, 2>, 2>;
SignalDistribution signal_distribution(const QuantumStrategy& s1, const QuantumStrategy& s2);

/// V_i = sum_w payoff_i(w) P(w).
double expected_payoff(std::size_t agent, const QuantumStrategy& s1, const QuantumStrategy& s2,
                       const PayoffTable& payoffs);

enum class DiscountConvention {
  recursive,  // V* = V + delta V*, cooperative value X / (1 - delta)
  printed,    // (1 - delta) sum_{t>=1} delta^t V_t, cooperative value delta X
};
std::string to_string(DiscountConvention c);

struct DeviationSpec {
  std::size_t agent = 0;  // 0 or 1
  std::size_t round = 1;  // 1-based round of the one-shot deviation
  Complex a = 0.0;
  Complex b = 1.0;
};

enum class Monitoring { public_signals, private_signals };
std::string to_string(Monitoring m);

/// Classical finite-state strategy over the signal alphabet {0, 1}
/// (0 = opponent signal C, 1 = D).
class ClassicalAutomaton {
 public:
  /// transitions must be total over states x {0, 1}; output maps each state to an action.
  ClassicalAutomaton(std::vector<std::string> states, std::map<std::pair<std::string, int>, std::string> transitions,
                     std::string initial, std::map<std::string, Signal> output);

  static ClassicalAutomaton grim_trigger();
  static ClassicalAutomaton always_cooperate();

  const std::string& initial() const { return initial_; }
  const std::string& next(const std::string& state, int input) const;
  Signal action(const std::string& state) const;
  /// States visited after each input.
  std::vector<std::string> trace(const std::vector<int>& inputs) const;
  const std::vector<std::string>& states() const { return states_; }

 private:
  std::vector<std::string> states_;
  std::map<std::pair<std::string, int>, std::string> transitions_;
  std::string initial_;
  std::map<std::string, Signal> output_;
};

/// Cooperate with S_C until a D is observed; then, with probability r,
/// switch permanently to the punishment strategy.
struct TriggerRule {
  std::optional<double> r;  // defaults to the game's r
  Complex punish_a = 0.0;
  Complex punish_b = 1.0;
};

/// Automaton rule: action C plays S_C, action D plays the punishment strategy.
struct AutomatonRule {
  ClassicalAutomaton automaton;
  Complex punish_a = 0.0;
  Complex punish_b = 1.0;
};

using AgentRule = std::variant<TriggerRule, AutomatonRule>;

class RepeatedGameSpec {
 public:
  RepeatedGameSpec(PayoffTable payoffs, double delta, double r, std::optional<std::size_t> horizon = std::nullopt);

  const PayoffTable& payoffs() const { return payoffs_; }
  double delta() const { return delta_; }
  double r() const { return r_; }
  /// Empty means the infinite-horizon closed form.
  const std::optional<std::size_t>& horizon() const { return horizon_; }

 private:
  PayoffTable payoffs_;
  double delta_;
  double r_;
  std::optional<std::size_t> horizon_;
};

/// X / (1 - delta).
double cooperative_value(const RepeatedGameSpec& spec);
/// Y / (r X + Y); throws ContractError when r = 0.
double trigger_threshold(const PayoffTable& payoffs, double r);

struct DeviationVerdict {
  double gain;  // one-shot expected payoff increase |b|^2 Y
  double loss;  // expected future loss delta r |b|^2 V*
  bool profitable;
  DiscountConvention convention;
};

/// Deviation is profitable iff gain > loss.
DeviationVerdict simulate_deviation(const RepeatedGameSpec& spec, const QuantumStrategy& deviation,
                                    DiscountConvention convention = DiscountConvention::recursive);

struct RoundLog {
  std::size_t t;
  std::string strategy1, strategy2;  // "S_C" or "S_Cbar"
  Signal w1, w2;
  double pay1, pay2;
  double discounted1, discounted2;  // cumulative, printed convention
};

struct RepeatedRun {
  std::vector<RoundLog> rounds;
  std::array<double, 2> printed{0.0, 0.0};    // (1 - delta) sum delta^t pay_t
  std::array<double, 2> recursive{0.0, 0.0};  // sum delta^(t-1) pay_t
};

struct RepeatedOptions {
  Monitoring monitoring = Monitoring::public_signals;
  std::optional<DeviationSpec> deviation;
  std::array<AgentRule, 2> rules{TriggerRule{}, TriggerRule{}};
};

/// One seeded play-through with sampled signals.
RepeatedRun run_repeated(const RepeatedGameSpec& spec, std::size_t horizon, std::uint64_t seed,
                         const RepeatedOptions& options = {});

struct ExpectedRound {
  std::size_t t;
  double p_cooperating;  // probability both agents are still in their cooperative state
  double pay1, pay2;
};

struct ExpectedRun {
  std::vector<ExpectedRound> rounds;
  std::array<double, 2> printed{0.0, 0.0};
  std::array<double, 2> recursive{0.0, 0.0};
};

/// Exact propagation of the joint rule-state distribution.
ExpectedRun run_repeated_expectation(const RepeatedGameSpec& spec, std::size_t horizon,
                                     const RepeatedOptions& options = {});

}  // namespace qot::game
