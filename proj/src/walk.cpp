#include "qot/walk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "qot/errors.hpp"
#include "qot/optimizer.hpp"
#include "qot/parallel.hpp"
#include "qot/rng.hpp"

namespace qot::walk {
namespace {

using Idx = Eigen::Index;

double default_kernel(int source, int destination) {
  return double(destination) * destination - double(source) * source;
}

}  // namespace

Coin::Coin(Complex a, Complex b, Complex c, Complex d, int t) : a_(a), b_(b), c_(c), d_(d), t_(t) {
  const double defect = unitarity_defect(matrix());
  if (!(defect <= kContractTol)) {
    std::ostringstream msg;
    msg << "coin at t=" << t << " is not unitary (defect " << defect << ", |det| "
        << std::abs(a * d - b * c) << ")";
    throw ContractError(msg.str());
  }
}

Coin Coin::hadamard(int t) {
  const double s = 1.0 / std::sqrt(2.0);
  return Coin(s, s, s, -s, t);
}

Coin Coin::identity(int t) { return Coin(1.0, 0.0, 0.0, 1.0, t); }

Coin Coin::from_angles(double theta, double alpha, double beta, int t) {
  const Complex ea = std::polar(1.0, alpha);
  const Complex eb = std::polar(1.0, beta);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return Coin(ea * c, eb * s, -std::conj(eb) * s, std::conj(ea) * c, t);
}

CMatrix Coin::matrix() const {
  CMatrix m(2, 2);
  m << a_, b_, c_, d_;
  return m;
}

WalkerState::WalkerState(int t, CVector left, CVector right, bool check_norm)
    : t_(t), left_(std::move(left)), right_(std::move(right)) {
  if (t_ < 0) throw ContractError("walker time must be >= 0");
  const auto n = static_cast<Idx>(2 * t_ + 1);
  if (left_.size() != n || right_.size() != n) throw DimensionError("walker components must span [-t, t]");
  if (check_norm && std::abs(norm_squared() - 1.0) > kContractTol) {
    std::ostringstream msg;
    msg << "walker state is not normalized (norm^2 = " << norm_squared() << ")";
    throw ContractError(msg.str());
  }
}

WalkerState WalkerState::origin_right() {
  CVector l = CVector::Zero(1);
  CVector r = CVector::Ones(1);
  return WalkerState(0, std::move(l), std::move(r));
}

Complex WalkerState::left_at(int x) const {
  if (x < -t_ || x > t_) return 0.0;
  return left_(x + t_);
}

Complex WalkerState::right_at(int x) const {
  if (x < -t_ || x > t_) return 0.0;
  return right_(x + t_);
}

std::vector<double> WalkerState::distribution() const {
  std::vector<double> p(span());
  for (int x = -t_; x <= t_; ++x) p[static_cast<std::size_t>(x + t_)] = site_probability(x);
  return p;
}

std::string to_string(CostForm f) {
  switch (f) {
    case CostForm::paper_literal: return "paper_literal";
    case CostForm::signed_kernel: return "signed_kernel";
    case CostForm::abs_kernel: return "abs_kernel";
  }
  return "paper_literal";
}

CostForm cost_form_from_string(const std::string& s) {
  if (s == "paper_literal") return CostForm::paper_literal;
  if (s == "signed_kernel") return CostForm::signed_kernel;
  if (s == "abs_kernel") return CostForm::abs_kernel;
  throw ContractError("unknown walk cost form '" + s + "'");
}

double WalkCost::weight_right(int x) const {
  if (form == CostForm::paper_literal) {
    if (kernel_override) throw ContractError("paper_literal cost takes no kernel override");
    return 2.0 * x + 1.0;
  }
  const double c = kernel_override ? kernel_override(x + 1, x) : default_kernel(x + 1, x);
  return form == CostForm::abs_kernel ? std::abs(c) : c;
}

double WalkCost::weight_left(int x) const {
  if (form == CostForm::paper_literal) {
    if (kernel_override) throw ContractError("paper_literal cost takes no kernel override");
    return -2.0 * x + 1.0;
  }
  const double c = kernel_override ? kernel_override(x - 1, x) : default_kernel(x - 1, x);
  return form == CostForm::abs_kernel ? std::abs(c) : c;
}

WalkerState step(const WalkerState& state, const Coin& coin) {
  const int t = state.t() + 1;
  const auto n = static_cast<Idx>(2 * t + 1);
  CVector left = CVector::Zero(n);
  CVector right = CVector::Zero(n);
  for (int x = -t; x <= t; ++x) {
    right(x + t) = coin.a() * state.left_at(x + 1) + coin.b() * state.right_at(x + 1);
    left(x + t) = coin.c() * state.left_at(x - 1) + coin.d() * state.right_at(x - 1);
  }
  return WalkerState(t, std::move(left), std::move(right), false);
}

double step_cost(const WalkerState& state, const Coin& coin, const WalkCost& cost) {
  const WalkerState next = step(state, coin);
  double total = 0.0;
  for (int x = next.min_site(); x <= next.max_site(); ++x) {
    const double wr = cost.weight_right(x);
    const double wl = cost.weight_left(x);
    total += wr * wr * std::norm(next.right_at(x)) + wl * wl * std::norm(next.left_at(x));
  }
  return total;
}

Trajectory run(const WalkerState& initial, const std::vector<Coin>& coins, const WalkCost& cost) {
  Trajectory traj;
  traj.states.reserve(coins.size() + 1);
  traj.states.push_back(initial);
  for (const Coin& coin : coins) {
    const WalkerState& cur = traj.states.back();
    const double c = step_cost(cur, coin, cost);
    traj.step_costs.push_back(c);
    traj.total_cost += c;
    traj.states.push_back(step(cur, coin));
  }
  return traj;
}

double terminal_mismatch(const WalkerState& final_state, const WalkTarget& target) {
  if (const auto* dist = std::get_if<std::vector<double>>(&target)) {
    if (dist->size() != final_state.span()) throw DimensionError("target distribution must cover [-T, T]");
    double s = 0.0;
    for (int x = final_state.min_site(); x <= final_state.max_site(); ++x) {
      const double d = final_state.site_probability(x) - (*dist)[static_cast<std::size_t>(x + final_state.t())];
      s += d * d;
    }
    return s;
  }
  const auto& goal = std::get<WalkerState>(target);
  if (goal.t() != final_state.t()) throw DimensionError("target state must live at the final time");
  const Complex overlap = goal.left().dot(final_state.left()) + goal.right().dot(final_state.right());
  return 1.0 - std::norm(overlap) / (goal.norm_squared() * final_state.norm_squared());
}

std::vector<Coin> coins_from_angles(const std::vector<double>& angles) {
  if (angles.size() % 3 != 0) throw DimensionError("coin angles come in triples");
  std::vector<Coin> coins;
  for (std::size_t i = 0; i < angles.size(); i += 3) {
    coins.push_back(Coin::from_angles(angles[i], angles[i + 1], angles[i + 2], static_cast<int>(i / 3)));
  }
  return coins;
}

CoinOptimizeResult optimize_coins(const WalkerState& initial, int horizon, const WalkTarget& target,
                                  const WalkCost& cost, const CoinOptimizeOptions& options) {
  if (horizon < 1) throw ContractError("horizon must be >= 1");
  if (options.restarts == 0 || options.budget < options.restarts) throw ContractError("budget must cover every restart");
  const int final_t = initial.t() + horizon;

  CoinOptimizeResult result{};

  // Reachable final sites: within distance horizon of the initial support, matching parity.
  std::vector<bool> reachable(static_cast<std::size_t>(2 * final_t + 1), false);
  for (int x0 = initial.min_site(); x0 <= initial.max_site(); ++x0) {
    if (initial.site_probability(x0) == 0.0) continue;
    for (int x = x0 - horizon; x <= x0 + horizon; x += 2) reachable[static_cast<std::size_t>(x + final_t)] = true;
  }
  std::vector<double> target_mass(reachable.size(), 0.0);
  if (const auto* dist = std::get_if<std::vector<double>>(&target)) {
    if (dist->size() != reachable.size()) throw DimensionError("target distribution must cover [-T, T]");
    target_mass = *dist;
  } else {
    const auto& goal = std::get<WalkerState>(target);
    if (goal.t() != final_t) throw DimensionError("target state must live at the final time");
    target_mass = goal.distribution();
  }
  for (std::size_t i = 0; i < reachable.size(); ++i) {
    if (!reachable[i] && target_mass[i] > 0.0) {
      std::ostringstream msg;
      msg << "target puts mass " << target_mass[i] << " on unreachable site x=" << int(i) - final_t;
      result.warnings.push_back(msg.str());
    }
  }

  double max_c = 0.0;
  for (int t = initial.t() + 1; t <= final_t; ++t) {
    for (int x = -t; x <= t; ++x) max_c = std::max({max_c, std::abs(cost.weight_right(x)), std::abs(cost.weight_left(x))});
  }
  const double penalty = options.penalty.value_or(10.0 * std::max(1.0, max_c));
  result.penalty = penalty;

  auto objective = [&](const opt::Params& p) {
    const Trajectory traj = run(initial, coins_from_angles(p), cost);
    return traj.total_cost + penalty * terminal_mismatch(traj.states.back(), target);
  };

  struct Outcome {
    opt::Params best;
    double value;
    std::size_t used;
    bool exhausted;
  };
  const std::size_t n_params = 3 * static_cast<std::size_t>(horizon);
  auto run_restart = [&](std::size_t r) -> Outcome {
    const std::size_t share = options.budget / options.restarts + (r + 1 == options.restarts ? options.budget % options.restarts : 0);
    Rng rng(derive_seed(options.seed, "walk.optimize", r));
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    opt::Params x(n_params);
    for (double& v : x) v = angle(rng);
    opt::Budget budget(share);
    opt::minimize_bfgs(objective, x, budget);
    return {budget.best_point(), budget.best_value(), budget.used(), budget.exhausted()};
  };
  const auto outcomes = parallel_map(options.restarts, run_restart);
  std::size_t pick = 0;
  for (std::size_t r = 1; r < outcomes.size(); ++r) {
    if (outcomes[r].value < outcomes[pick].value) pick = r;
  }
  for (const auto& o : outcomes) {
    result.evaluations += o.used;
    result.budget_exhausted = result.budget_exhausted || o.exhausted;
  }
  if (outcomes[pick].best.empty()) throw DegenerateInputError("coin optimizer produced no finite evaluation");

  result.angles = outcomes[pick].best;
  result.coins = coins_from_angles(result.angles);
  const Trajectory traj = run(initial, result.coins, cost);
  result.total_cost = traj.total_cost;
  result.mismatch = terminal_mismatch(traj.states.back(), target);
  result.objective = result.total_cost + penalty * result.mismatch;
  return result;
}

}  // namespace qot::walk
