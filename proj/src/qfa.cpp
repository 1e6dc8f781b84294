#include "qot/qfa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "qot/errors.hpp"
#include "qot/optimizer.hpp"

namespace qot::qfa {
namespace {

using Idx = Eigen::Index;

constexpr double kZeroOverlap = 1e-12;
constexpr double kHaltedMass = 1e-12;

std::size_t wrap(long long x, std::size_t n) {
  const long long m = static_cast<long long>(n);
  return static_cast<std::size_t>(((x % m) + m) % m);
}

}  // namespace

Automaton::Automaton(std::vector<std::string> states, std::vector<std::string> alphabet,
                     std::vector<Transition> transitions, std::size_t initial, std::vector<std::size_t> accept,
                     std::vector<std::size_t> reject, std::vector<int> displacements)
    : states_(std::move(states)),
      alphabet_(std::move(alphabet)),
      transitions_(std::move(transitions)),
      initial_(initial),
      accept_(std::move(accept)),
      reject_(std::move(reject)),
      displacements_(std::move(displacements)) {
  if (states_.empty()) throw ContractError("automaton needs at least one state");
  if (alphabet_.empty()) throw ContractError("automaton needs a non-empty alphabet");
  if (initial_ >= states_.size()) throw ContractError("initial state out of range");
  const std::set<int> allowed(displacements_.begin(), displacements_.end());
  if (allowed.empty()) throw ContractError("displacement set must be non-empty");
  for (std::size_t q : accept_) {
    if (q >= states_.size()) throw ContractError("accept state out of range");
  }
  for (std::size_t q : reject_) {
    if (q >= states_.size()) throw ContractError("reject state out of range");
    if (std::find(accept_.begin(), accept_.end(), q) != accept_.end()) {
      throw ContractError("state '" + states_[q] + "' is both accepting and rejecting");
    }
  }
  std::set<std::tuple<std::size_t, std::size_t, std::size_t, int>> seen;
  for (const Transition& tr : transitions_) {
    if (tr.from >= states_.size() || tr.to >= states_.size()) throw ContractError("transition state out of range");
    if (tr.letter >= alphabet_.size()) throw ContractError("transition letter out of range");
    if (!allowed.count(tr.displacement)) {
      std::ostringstream msg;
      msg << "displacement " << tr.displacement << " is outside the allowed set";
      throw ContractError(msg.str());
    }
    if (!seen.insert({tr.from, tr.letter, tr.to, tr.displacement}).second) {
      throw ContractError("duplicate transition entry from '" + states_[tr.from] + "'");
    }
  }
}

bool Automaton::is_accepting(std::size_t q) const {
  return std::find(accept_.begin(), accept_.end(), q) != accept_.end();
}

bool Automaton::is_rejecting(std::size_t q) const {
  return std::find(reject_.begin(), reject_.end(), q) != reject_.end();
}

std::size_t Automaton::state_index(const std::string& name) const {
  const auto it = std::find(states_.begin(), states_.end(), name);
  if (it == states_.end()) throw ContractError("unknown state '" + name + "'");
  return static_cast<std::size_t>(it - states_.begin());
}

std::size_t Automaton::letter_index(const std::string& name) const {
  const auto it = std::find(alphabet_.begin(), alphabet_.end(), name);
  if (it == alphabet_.end()) throw ContractError("unknown letter '" + name + "'");
  return static_cast<std::size_t>(it - alphabet_.begin());
}

Word parse_word(const Automaton& aut, const std::vector<std::string>& letters) {
  Word w;
  for (const auto& l : letters) w.push_back(aut.letter_index(l));
  return w;
}

SiteGrid configuration_grid(const Automaton& aut, std::size_t tape_length) {
  std::vector<SiteLabel> labels;
  for (std::size_t q = 0; q < aut.states().size(); ++q) {
    for (std::size_t x = 0; x < tape_length; ++x) labels.push_back({static_cast<int>(q), static_cast<int>(x)});
  }
  return SiteGrid(std::move(labels));
}

LinearOp build_step_operator(const Automaton& aut, const Word& word, std::size_t tape_length) {
  if (tape_length == 0) throw ContractError("tape length must be >= 1");
  if (word.empty()) throw ContractError("input word must be non-empty");
  for (std::size_t a : word) {
    if (a >= aut.alphabet().size()) throw ContractError("word letter out of range");
  }
  const std::size_t nq = aut.states().size();
  const auto dim = static_cast<Idx>(nq * tape_length);
  CMatrix u = CMatrix::Zero(dim, dim);
  for (std::size_t x = 0; x < tape_length; ++x) {
    const std::size_t letter = word[x % word.size()];
    for (const Transition& tr : aut.transitions()) {
      if (tr.letter != letter) continue;
      const std::size_t src = config_index(tr.from, x, tape_length);
      const std::size_t dst = config_index(tr.to, wrap(static_cast<long long>(x) + tr.displacement, tape_length), tape_length);
      u(static_cast<Idx>(dst), static_cast<Idx>(src)) += tr.amplitude;
    }
  }
  const CMatrix defect = u.adjoint() * u - CMatrix::Identity(dim, dim);
  std::vector<std::string> bad;
  for (Idx j = 0; j < dim; ++j) {
    if (defect.col(j).cwiseAbs().maxCoeff() > kContractTol) {
      std::ostringstream name;
      name << "(" << aut.states()[std::size_t(j) / tape_length] << "," << std::size_t(j) % tape_length << ")";
      bad.push_back(name.str());
    }
  }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "induced step operator is not unitary; offending columns:";
    for (const auto& b : bad) msg << " " << b;
    throw ContractError(msg.str());
  }
  return LinearOp(configuration_grid(aut, tape_length), std::move(u), OpContract::unitary);
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::accepted: return "accepted";
    case Outcome::rejected: return "rejected";
    case Outcome::running: return "running";
  }
  return "running";
}

std::string to_string(MeasureMode m) {
  return m == MeasureMode::branch_tracking ? "branch_tracking" : "trajectory_sampling";
}

std::string to_string(HaltingCostMode m) { return m == HaltingCostMode::expected ? "expected" : "certain_halt"; }

MeasuredMachine::MeasuredMachine(const Automaton& aut, const Word& word, std::size_t tape_length)
    : MeasuredMachine(aut, build_step_operator(aut, word, tape_length), tape_length) {}

MeasuredMachine::MeasuredMachine(const Automaton& aut, LinearOp step_operator, std::size_t tape_length)
    : op_(std::move(step_operator)), tape_length_(tape_length), initial_(config_index(aut.initial(), 0, tape_length)) {
  const std::size_t nq = aut.states().size();
  if (op_.domain().size() != nq * tape_length) throw DimensionError("step operator does not match configuration space");
  kind_.resize(nq * tape_length, 0);
  for (std::size_t q = 0; q < nq; ++q) {
    const std::uint8_t k = aut.is_accepting(q) ? 1 : aut.is_rejecting(q) ? 2 : 0;
    for (std::size_t x = 0; x < tape_length; ++x) kind_[config_index(q, x, tape_length)] = k;
  }
}

CVector MeasuredMachine::initial_state() const {
  CVector psi = CVector::Zero(static_cast<Idx>(kind_.size()));
  psi(static_cast<Idx>(initial_)) = 1.0;
  return psi;
}

HaltingRecord MeasuredMachine::track(std::size_t max_steps) const {
  if (max_steps == 0) throw ContractError("max_steps must be >= 1");
  HaltingRecord rec{Outcome::running, 0, 0.0, 0.0, 1.0, {}};
  CVector psi = initial_state();
  for (std::size_t t = 1; t <= max_steps; ++t) {
    psi = op_.matrix() * psi;
    double acc = 0.0;
    double rej = 0.0;
    for (std::size_t i = 0; i < kind_.size(); ++i) {
      if (kind_[i] == 0) continue;
      const double m = std::norm(psi(static_cast<Idx>(i)));
      (kind_[i] == 1 ? acc : rej) += m;
      psi(static_cast<Idx>(i)) = 0.0;
    }
    rec.accept_probability += acc;
    rec.reject_probability += rej;
    rec.running_probability = psi.squaredNorm();
    rec.per_step.push_back({acc, rej, rec.running_probability});
    rec.steps = t;
    if (rec.running_probability <= kHaltedMass) {
      rec.outcome = rec.accept_probability >= rec.reject_probability ? Outcome::accepted : Outcome::rejected;
      break;
    }
  }
  return rec;
}

HaltingRecord MeasuredMachine::sample(std::size_t max_steps, Rng& rng) const {
  if (max_steps == 0) throw ContractError("max_steps must be >= 1");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  HaltingRecord rec{Outcome::running, 0, 0.0, 0.0, 1.0, {}};
  CVector psi = initial_state();
  for (std::size_t t = 1; t <= max_steps; ++t) {
    psi = op_.matrix() * psi;
    double acc = 0.0;
    double rej = 0.0;
    double non = 0.0;
    for (std::size_t i = 0; i < kind_.size(); ++i) {
      const double m = std::norm(psi(static_cast<Idx>(i)));
      (kind_[i] == 0 ? non : kind_[i] == 1 ? acc : rej) += m;
    }
    const double total = acc + rej + non;
    acc /= total;
    rej /= total;
    non /= total;
    rec.per_step.push_back({acc, rej, non});
    rec.steps = t;
    const double u = unit(rng);
    if (u < acc || (non == 0.0 && acc >= rej)) {
      rec.outcome = Outcome::accepted;
      break;
    }
    if (u < acc + rej || non == 0.0) {
      rec.outcome = Outcome::rejected;
      break;
    }
    for (std::size_t i = 0; i < kind_.size(); ++i) {
      if (kind_[i] != 0) psi(static_cast<Idx>(i)) = 0.0;
    }
    psi /= std::sqrt(psi.squaredNorm());
  }
  rec.accept_probability = rec.outcome == Outcome::accepted ? 1.0 : 0.0;
  rec.reject_probability = rec.outcome == Outcome::rejected ? 1.0 : 0.0;
  rec.running_probability = rec.outcome == Outcome::running ? 1.0 : 0.0;
  return rec;
}

HaltingRecord run_with_measurement(const Automaton& aut, const Word& word, std::size_t tape_length,
                                   std::size_t max_steps, MeasureMode mode, std::uint64_t seed) {
  const MeasuredMachine machine(aut, word, tape_length);
  if (mode == MeasureMode::branch_tracking) return machine.track(max_steps);
  Rng rng(derive_seed(seed, "qfa.sample"));
  return machine.sample(max_steps, rng);
}

HaltingCost halting_cost(const Automaton& aut, std::size_t tape_length, const std::vector<LinearOp>& step_operators,
                         std::size_t max_steps, HaltingCostMode mode) {
  if (step_operators.empty()) throw DegenerateInputError("halting cost needs at least one step operator");
  const std::size_t nq = aut.states().size();
  const std::size_t dim = nq * tape_length;
  for (const auto& op : step_operators) {
    if (op.domain().size() != dim || op.codomain().size() != dim) {
      throw DimensionError("step operator does not match configuration space");
    }
  }
  std::vector<std::size_t> halting;
  std::vector<bool> is_halting(dim, false);
  for (std::size_t q = 0; q < nq; ++q) {
    if (!aut.is_accepting(q) && !aut.is_rejecting(q)) continue;
    for (std::size_t x = 0; x < tape_length; ++x) {
      halting.push_back(config_index(q, x, tape_length));
      is_halting[config_index(q, x, tape_length)] = true;
    }
  }

  HaltingCost out{0.0, 0, false, halting.size()};
  CVector psi = CVector::Zero(static_cast<Idx>(dim));
  psi(static_cast<Idx>(config_index(aut.initial(), 0, tape_length))) = 1.0;
  double survival = 1.0;  // probability that measurement t is reached
  for (std::size_t t = 0; t <= max_steps; ++t) {
    if (t > 0) {
      psi = step_operators[(t - 1) % step_operators.size()].matrix() * psi;
      psi /= std::sqrt(psi.squaredNorm());
    }
    std::size_t zeros = 0;
    double halt_mass = 0.0;
    for (std::size_t i : halting) {
      const Complex z = psi(static_cast<Idx>(i));
      if (std::abs(z) < kZeroOverlap) ++zeros;
      halt_mass += std::norm(z);
    }
    out.value += (mode == HaltingCostMode::expected ? survival : 1.0) * double(zeros);
    out.steps = t;
    survival *= std::max(0.0, 1.0 - halt_mass);
    if (survival <= kHaltedMass) {
      out.halted = true;
      break;
    }
    for (std::size_t i : halting) psi(static_cast<Idx>(i)) = 0.0;
    psi /= std::sqrt(psi.squaredNorm());
  }
  return out;
}

HaltingCost halting_cost(const Automaton& aut, const Word& word, std::size_t tape_length, std::size_t max_steps,
                         HaltingCostMode mode) {
  return halting_cost(aut, tape_length, {build_step_operator(aut, word, tape_length)}, max_steps, mode);
}

MinimizeResult minimize_halting_cost(const AutomatonFamily& family, const Word& word, const MinimizeOptions& options) {
  auto tau_of = [&](const Automaton& aut) {
    return halting_cost(aut, word, options.tape_length, options.max_steps, options.mode).value;
  };

  if (const auto* list = std::get_if<std::vector<Automaton>>(&family)) {
    if (list->empty()) throw DegenerateInputError("automaton family is empty");
    MinimizeResult best{std::size_t{0}, {}, std::numeric_limits<double>::infinity(), 0, true};
    for (std::size_t i = 0; i < list->size(); ++i) {
      const double tau = tau_of((*list)[i]);
      ++best.evaluations;
      if (tau < best.tau) {
        best.tau = tau;
        best.index = i;
      }
    }
    return best;
  }

  const auto& angles = std::get<AngleFamily>(family);
  if (angles.bounds.empty()) throw DegenerateInputError("angle family has no parameters");
  if (options.budget < 2) throw ContractError("budget too small");
  auto inside = [&](const opt::Params& p) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] < angles.bounds[i].first || p[i] > angles.bounds[i].second) return false;
    }
    return true;
  };
  auto objective = [&](const opt::Params& p) {
    if (!inside(p)) return std::numeric_limits<double>::infinity();
    return tau_of(angles.make(p));
  };

  opt::Budget budget(options.budget);
  Rng rng(derive_seed(options.seed, "qfa.minimize"));
  const std::size_t samples = options.budget / 2;
  double widest = 0.0;
  for (const auto& [lo, hi] : angles.bounds) widest = std::max(widest, hi - lo);
  for (std::size_t s = 0; s < samples; ++s) {
    opt::Params p;
    for (const auto& [lo, hi] : angles.bounds) p.push_back(std::uniform_real_distribution<double>(lo, hi)(rng));
    budget.evaluate(objective, p);
  }
  const double spacing = widest / std::pow(double(samples), 1.0 / double(angles.bounds.size()));
  opt::minimize_compass(objective, budget.best_point(), budget, spacing, 1e-12);
  return {std::nullopt, budget.best_point(), budget.best_value(), budget.used(), false};
}

}  // namespace qot::qfa

namespace qot::qfa {

AngleFamily rotation_family() {
  AngleFamily family;
  family.make = [](const std::vector<double>& p) {
    const double c = std::cos(p.at(0));
    const double s = std::sin(p.at(0));
    std::vector<Transition> tr{{0, 0, 0, 1, c}, {0, 0, 1, 1, s}, {1, 0, 0, 1, -s}, {1, 0, 1, 1, c}};
    return Automaton({"q0", "acc"}, {"a"}, std::move(tr), 0, {1}, {});
  };
  family.bounds = {{0.0, std::acos(-1.0) / 2.0}};
  return family;
}

}  // namespace qot::qfa
