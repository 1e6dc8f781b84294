#pragma once

// Discrete-time two-state quantum walk on Z with a transport cost attached
// to every step, plus an optimizer over time-dependent coin families.
//
// Components: |L> = (1,0), |R> = (0,1). One step with coin [[a,b],[c,d]]:
//   psi^R_{t+1}(x) = a psi^L_t(x+1) + b psi^R_t(x+1)
//   psi^L_{t+1}(x) = c psi^L_t(x-1) + d psi^R_t(x-1)

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qot/linalg.hpp"

namespace qot::walk {

class Coin {
 public:
  /// Throws ContractError unless [[a,b],[c,d]] is unitary within 1e-9.
  Coin(Complex a, Complex b, Complex c, Complex d, int t = 0);

  static Coin hadamard(int t = 0);
  static Coin identity(int t = 0);
  /// [[e^{i alpha} cos theta, e^{i beta} sin theta], [-e^{-i beta} sin theta, e^{-i alpha} cos theta]].
  static Coin from_angles(double theta, double alpha, double beta, int t = 0);

  Complex a() const { return a_; }
  Complex b() const { return b_; }
  Complex c() const { return c_; }
  Complex d() const { return d_; }
  int t() const { return t_; }
  CMatrix matrix() const;

 private:
  Complex a_, b_, c_, d_;
  int t_;
};

/// Amplitudes on sites x in [-t, t]; index i holds site x = i - t.
class WalkerState {
 public:
  WalkerState(int t, CVector left, CVector right, bool check_norm = true);

  /// delta(x)|R> at t = 0.
  static WalkerState origin_right();

  int t() const { return t_; }
  int min_site() const { return -t_; }
  int max_site() const { return t_; }
  std::size_t span() const { return static_cast<std::size_t>(2 * t_ + 1); }
  const CVector& left() const { return left_; }
  const CVector& right() const { return right_; }
  /// Zero outside [-t, t].
  Complex left_at(int x) const;
  Complex right_at(int x) const;
  double site_probability(int x) const { return std::norm(left_at(x)) + std::norm(right_at(x)); }
  std::vector<double> distribution() const;
  double norm_squared() const { return left_.squaredNorm() + right_.squaredNorm(); }

 private:
  int t_;
  CVector left_;
  CVector right_;
};

enum class CostForm { paper_literal, signed_kernel, abs_kernel };
std::string to_string(CostForm f);
CostForm cost_form_from_string(const std::string& s);

/// Cost c(source, destination). The default kernel is y^2 - x^2.
using WalkKernel = std::function<double(int source, int destination)>;

struct WalkCost {
  CostForm form = CostForm::paper_literal;
  /// Replaces y^2 - x^2 for the kernel forms; not allowed with paper_literal.
  WalkKernel kernel_override;

  double weight_right(int x) const;  // factor on psi^R_{t+1}(x), source x+1
  double weight_left(int x) const;   // factor on psi^L_{t+1}(x), source x-1
};

WalkerState step(const WalkerState& state, const Coin& coin);

/// ||C U_t psi_t||^2 under the selected cost form.
double step_cost(const WalkerState& state, const Coin& coin, const WalkCost& cost);

struct Trajectory {
  std::vector<WalkerState> states;  // t = 0..n
  std::vector<double> step_costs;   // cost of step t -> t+1
  double total_cost = 0.0;
};

Trajectory run(const WalkerState& initial, const std::vector<Coin>& coins, const WalkCost& cost);

/// Either a site distribution over [-T, T] (length 2T+1) or a full state at t = T.
using WalkTarget = std::variant<std::vector<double>, WalkerState>;

/// Distribution targets: sum_x (p(x) - target(x))^2. State targets: 1 - fidelity.
double terminal_mismatch(const WalkerState& final_state, const WalkTarget& target);

struct CoinOptimizeOptions {
  std::size_t budget = 20000;
  std::size_t restarts = 8;
  std::uint64_t seed = 0;
  /// Weight on the terminal mismatch; default 10 * max(1, max|c|) over reachable moves.
  std::optional<double> penalty;
};

struct CoinOptimizeResult {
  std::vector<Coin> coins;
  std::vector<double> angles;  // (theta, alpha, beta) per step
  double total_cost;
  double mismatch;
  double objective;  // total_cost + penalty * mismatch
  double penalty;
  std::vector<std::string> warnings;
  std::size_t evaluations;
  bool budget_exhausted;
};

CoinOptimizeResult optimize_coins(const WalkerState& initial, int horizon, const WalkTarget& target,
                                  const WalkCost& cost, const CoinOptimizeOptions& options = {});

/// Coins built from packed angles, three per step.
std::vector<Coin> coins_from_angles(const std::vector<double>& angles);

}  // namespace qot::walk
