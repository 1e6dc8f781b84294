#pragma once

// Two-way quantum finite automaton on a periodic tape, measured after every
// step with the accept / reject / continue projectors, and the halting cost
// that counts zero-overlap measurement terms until the machine halts.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qot/linalg.hpp"
#include "qot/rng.hpp"
#include "qot/state_space.hpp"

namespace qot::qfa {

/// delta(from, letter, to, displacement) = amplitude.
struct Transition {
  std::size_t from;
  std::size_t letter;
  std::size_t to;
  int displacement;
  Complex amplitude;
};

class Automaton {
 public:
  /// displacements is the allowed head-move set E; transitions outside it,
  /// overlapping accept/reject sets and duplicate entries are rejected.
  Automaton(std::vector<std::string> states, std::vector<std::string> alphabet, std::vector<Transition> transitions,
            std::size_t initial, std::vector<std::size_t> accept, std::vector<std::size_t> reject,
            std::vector<int> displacements = {-1, 0, 1});

  const std::vector<std::string>& states() const { return states_; }
  const std::vector<std::string>& alphabet() const { return alphabet_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const std::vector<int>& displacements() const { return displacements_; }
  std::size_t initial() const { return initial_; }
  const std::vector<std::size_t>& accept() const { return accept_; }
  const std::vector<std::size_t>& reject() const { return reject_; }
  bool is_accepting(std::size_t q) const;
  bool is_rejecting(std::size_t q) const;

  std::size_t state_index(const std::string& name) const;
  std::size_t letter_index(const std::string& name) const;

 private:
  std::vector<std::string> states_;
  std::vector<std::string> alphabet_;
  std::vector<Transition> transitions_;
  std::size_t initial_;
  std::vector<std::size_t> accept_;
  std::vector<std::size_t> reject_;
  std::vector<int> displacements_;
};

/// Letter indices; the tape holds the word cyclically, a(x) = word[x mod |word|].
using Word = std::vector<std::size_t>;
Word parse_word(const Automaton& aut, const std::vector<std::string>& letters);

/// Basis |q, x> sits at index q * tape_length + x.
inline std::size_t config_index(std::size_t q, std::size_t x, std::size_t tape_length) {
  return q * tape_length + x;
}
SiteGrid configuration_grid(const Automaton& aut, std::size_t tape_length);

/// U|q,x> = sum delta(q, a(x), q', D) |q', x+D mod N>. Throws ContractError
/// naming the offending configurations when U is not unitary (1e-9).
LinearOp build_step_operator(const Automaton& aut, const Word& word, std::size_t tape_length);

enum class Outcome { accepted, rejected, running };
std::string to_string(Outcome o);

enum class MeasureMode { branch_tracking, trajectory_sampling };
std::string to_string(MeasureMode m);

struct BranchProbabilities {
  double accept;
  double reject;
  double running;
};

struct HaltingRecord {
  Outcome outcome;
  std::size_t steps;
  /// Tracking: cumulative halting mass and surviving mass. Sampling: outcome indicators.
  double accept_probability;
  double reject_probability;
  double running_probability;
  /// Tracking: unconditional mass halting at each step plus the surviving mass.
  /// Sampling: Born probabilities conditioned on the sampled history.
  std::vector<BranchProbabilities> per_step;
};

/// Precomputed operator and projectors for repeated runs on one word.
class MeasuredMachine {
 public:
  MeasuredMachine(const Automaton& aut, const Word& word, std::size_t tape_length);
  MeasuredMachine(const Automaton& aut, LinearOp step_operator, std::size_t tape_length);

  HaltingRecord track(std::size_t max_steps) const;
  HaltingRecord sample(std::size_t max_steps, Rng& rng) const;
  const LinearOp& step_operator() const { return op_; }

 private:
  CVector initial_state() const;

  LinearOp op_;
  std::size_t tape_length_;
  std::size_t initial_;
  std::vector<std::uint8_t> kind_;  // 0 non-halting, 1 accept, 2 reject, per configuration
};

HaltingRecord run_with_measurement(const Automaton& aut, const Word& word, std::size_t tape_length,
                                   std::size_t max_steps, MeasureMode mode, std::uint64_t seed = 0);

enum class HaltingCostMode {
  expected,      // each step's zero-overlap count weighted by the probability the run is still going
  certain_halt,  // unweighted count until the surviving mass vanishes
};
std::string to_string(HaltingCostMode m);

struct HaltingCost {
  double value;
  std::size_t steps;       // last measured step index
  bool halted;             // surviving mass fell below 1e-12 before max_steps
  std::size_t basis_size;  // n = dim(H_acc + H_rej)
};

/// Cost over measurement steps t = 0..tau of the number of halting basis
/// vectors |q,x> (q accepting or rejecting) whose overlap with Psi_t is zero
/// (|z| < 1e-12). Step t > 0 applies step_operators[(t-1) mod size].
HaltingCost halting_cost(const Automaton& aut, std::size_t tape_length, const std::vector<LinearOp>& step_operators,
                         std::size_t max_steps, HaltingCostMode mode = HaltingCostMode::expected);
HaltingCost halting_cost(const Automaton& aut, const Word& word, std::size_t tape_length, std::size_t max_steps,
                         HaltingCostMode mode = HaltingCostMode::expected);

/// Automata generated from a box of angles.
struct AngleFamily {
  std::function<Automaton(const std::vector<double>&)> make;
  std::vector<std::pair<double, double>> bounds;
};
/// Two states {q0, acc}, one letter, rotation by theta with head move +1:
/// q0 -> cos(theta) q0 + sin(theta) acc. Bounds [0, pi/2].
/// Needs tape_length >= 2 to be informative: on a single cell the halting
/// basis is one vector and tau is the same for every theta > 0.
AngleFamily rotation_family();

using AutomatonFamily = std::variant<std::vector<Automaton>, AngleFamily>;

struct MinimizeOptions {
  std::size_t tape_length = 1;
  std::size_t max_steps = 32;
  HaltingCostMode mode = HaltingCostMode::expected;
  std::size_t budget = 4000;
  std::uint64_t seed = 0;
};

struct MinimizeResult {
  std::optional<std::size_t> index;  // list families
  std::vector<double> parameters;    // angle families
  double tau;
  std::size_t evaluations;
  bool exhaustive;
};

/// Lists are searched exhaustively (first minimum wins). Angle families get a
/// seeded uniform sample of half the budget, then compass refinement.
MinimizeResult minimize_halting_cost(const AutomatonFamily& family, const Word& word, const MinimizeOptions& options);

}  // namespace qot::qfa
