#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "qot/errors.hpp"
#include "qot/walk.hpp"
#include "support.hpp"

using namespace qot;
using namespace qot::walk;
using qot::testkit::Engine;

namespace {

// Whole-lattice evolution on sites [-T, T]: coin block then shift matrices,
// ordered as (L block, R block). R moves x+1 -> x, L moves x-1 -> x.
struct LatticeOracle {
  int T;
  CVector psi;

  explicit LatticeOracle(int horizon) : T(horizon), psi(CVector::Zero(2 * (2 * horizon + 1))) {
    psi(n() + T) = 1.0;  // delta(x)|R>
  }
  Eigen::Index n() const { return 2 * T + 1; }

  void apply(const Coin& coin) {
    const Eigen::Index m = n();
    const CMatrix id = CMatrix::Identity(m, m);
    CMatrix mix(2 * m, 2 * m);
    mix << coin.c() * id, coin.d() * id, coin.a() * id, coin.b() * id;
    CMatrix shift = CMatrix::Zero(2 * m, 2 * m);
    for (Eigen::Index i = 1; i < m; ++i) shift(i, i - 1) = 1.0;              // L
    for (Eigen::Index i = 0; i + 1 < m; ++i) shift(m + i, m + i + 1) = 1.0;  // R
    psi = shift * mix * psi;
  }
  Complex left(int x) const { return psi(x + T); }
  Complex right(int x) const { return psi(n() + x + T); }
};

Coin random_coin(Engine& rng, int t = 0) {
  std::uniform_real_distribution<double> a(0.0, 2 * std::numbers::pi);
  return Coin::from_angles(a(rng), a(rng), a(rng), t);
}

WalkerState random_state(int t, Engine& rng) {
  const CVector v = qot::testkit::haar_state(2 * (2 * t + 1), rng);
  return WalkerState(t, v.head(2 * t + 1), v.tail(2 * t + 1));
}

}  // namespace

TEST(Coin, UnitarityContract) {
  EXPECT_THROW(Coin(1.0, 1.0, 0.0, 1.0), ContractError);
  EXPECT_NO_THROW(Coin::hadamard());
  Engine rng(1);
  for (int i = 0; i < 20; ++i) {
    const CMatrix m = random_coin(rng).matrix();
    EXPECT_LT((m.adjoint() * m - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(WalkerState, NormAndSpanContracts) {
  EXPECT_THROW(WalkerState(1, CVector::Zero(3), CVector::Zero(3)), ContractError);
  EXPECT_THROW(WalkerState(1, CVector::Zero(2), CVector::Zero(3), false), DimensionError);
  const auto s = WalkerState::origin_right();
  EXPECT_EQ(s.right_at(0), Complex(1.0));
  EXPECT_EQ(s.left_at(5), Complex(0.0));
}

TEST(Step, FirstHadamardStep) {
  const auto s1 = step(WalkerState::origin_right(), Coin::hadamard());
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(s1.right_at(-1) - h), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s1.left_at(1) + h), 0.0, 1e-15);
  EXPECT_EQ(s1.right_at(1), Complex(0.0));
  EXPECT_EQ(s1.left_at(-1), Complex(0.0));
  EXPECT_NEAR(s1.norm_squared(), 1.0, 1e-15);
}

TEST(Step, SecondHadamardStepFrozen) {
  const auto traj = run(WalkerState::origin_right(), {Coin::hadamard(0), Coin::hadamard(1)}, {});
  const auto& s2 = traj.states.back();
  ASSERT_EQ(s2.t(), 2);
  EXPECT_NEAR(std::abs(s2.right_at(-2) - 0.5), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(s2.right_at(0) + 0.5), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(s2.left_at(0) + 0.5), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(s2.left_at(2) + 0.5), 0.0, 1e-12);
  LatticeOracle oracle(2);
  oracle.apply(Coin::hadamard());
  oracle.apply(Coin::hadamard());
  for (int x = -2; x <= 2; ++x) {
    EXPECT_NEAR(std::abs(s2.left_at(x) - oracle.left(x)), 0.0, 1e-12) << x;
    EXPECT_NEAR(std::abs(s2.right_at(x) - oracle.right(x)), 0.0, 1e-12) << x;
  }
}

TEST(Step, RandomCoinsMatchLatticeOracle) {
  Engine rng(4);
  const int T = 12;
  LatticeOracle oracle(T);
  WalkerState s = WalkerState::origin_right();
  for (int t = 0; t < T; ++t) {
    const Coin c = random_coin(rng, t);
    s = step(s, c);
    oracle.apply(c);
  }
  for (int x = -T; x <= T; ++x) {
    EXPECT_NEAR(std::abs(s.left_at(x) - oracle.left(x)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(s.right_at(x) - oracle.right(x)), 0.0, 1e-12);
  }
}

TEST(Step, NormConservedAndParityZeros) {
  Engine rng(5);
  WalkerState s = WalkerState::origin_right();
  for (int t = 1; t <= 50; ++t) {
    s = step(s, random_coin(rng, t - 1));
    EXPECT_NEAR(s.norm_squared(), 1.0, 1e-10);
    for (int x = -t; x <= t; ++x) {
      if ((x + t) % 2 != 0) {
        EXPECT_EQ(s.left_at(x), Complex(0.0));
        EXPECT_EQ(s.right_at(x), Complex(0.0));
      }
    }
  }
}

TEST(Run, IdentityCoinKeepsMassOnOneSite) {
  std::vector<Coin> coins(5, Coin::identity());
  const auto traj = run(WalkerState::origin_right(), coins, {});
  const auto p = traj.states.back().distribution();
  int occupied = 0;
  for (double v : p) {
    if (v > 0.0) {
      ++occupied;
      EXPECT_EQ(v, 1.0);
    }
  }
  EXPECT_EQ(occupied, 1);
}

TEST(Run, ZeroStepsZeroCost) {
  const auto traj = run(WalkerState::origin_right(), {}, {});
  EXPECT_EQ(traj.total_cost, 0.0);
  EXPECT_EQ(traj.states.size(), 1u);
}

TEST(StepCost, HadamardExamples) {
  const auto traj = run(WalkerState::origin_right(), {Coin::hadamard(0), Coin::hadamard(1)}, {});
  ASSERT_EQ(traj.step_costs.size(), 2u);
  EXPECT_NEAR(traj.step_costs[0], 1.0, 1e-14);
  // Sites -2 and 2 carry factor 3 squared, sites 0 carry factor 1, all at weight 1/4.
  EXPECT_NEAR(traj.step_costs[1], 5.0, 1e-13);
  EXPECT_NEAR(traj.total_cost, 6.0, 1e-13);
}

TEST(StepCost, LiteralAndSignedFormsAgree) {
  Engine rng(6);
  const WalkCost literal{walk::CostForm::paper_literal, {}};
  const WalkCost signed_kernel{walk::CostForm::signed_kernel, {}};
  const WalkCost abs_kernel{walk::CostForm::abs_kernel, {}};
  std::uniform_int_distribution<int> tdist(0, 8);
  for (int i = 0; i < 100; ++i) {
    const auto s = random_state(tdist(rng), rng);
    const Coin c = random_coin(rng);
    const double lit = step_cost(s, c, literal);
    EXPECT_NEAR(lit, step_cost(s, c, signed_kernel), 1e-12);
    EXPECT_NEAR(lit, step_cost(s, c, abs_kernel), 1e-12);
  }
}

TEST(StepCost, DegenerateKernels) {
  Engine rng(7);
  const WalkCost ones{walk::CostForm::signed_kernel, [](int, int) { return 1.0; }};
  const WalkCost zeros{walk::CostForm::abs_kernel, [](int, int) { return 0.0; }};
  for (int i = 0; i < 20; ++i) {
    const auto s = random_state(3, rng);
    const Coin c = random_coin(rng);
    EXPECT_NEAR(step_cost(s, c, ones), 1.0, 1e-12);
    EXPECT_EQ(step_cost(s, c, zeros), 0.0);
  }
  const WalkCost bad{walk::CostForm::paper_literal, [](int, int) { return 1.0; }};
  EXPECT_THROW(step_cost(WalkerState::origin_right(), Coin::hadamard(), bad), ContractError);
}

TEST(TerminalMismatch, DistributionAndState) {
  const auto s = step(WalkerState::origin_right(), Coin::hadamard());
  EXPECT_NEAR(terminal_mismatch(s, std::vector<double>{0.5, 0.0, 0.5}), 0.0, 1e-15);
  EXPECT_NEAR(terminal_mismatch(s, std::vector<double>{1.0, 0.0, 0.0}), 0.5, 1e-15);
  EXPECT_NEAR(terminal_mismatch(s, s), 0.0, 1e-15);
  EXPECT_THROW(terminal_mismatch(s, std::vector<double>{1.0}), DimensionError);
}

TEST(OptimizeCoins, ReachesFreeHadamardDistribution) {
  const int T = 3;
  std::vector<Coin> coins;
  for (int t = 0; t < T; ++t) coins.push_back(Coin::hadamard(t));
  const auto target = run(WalkerState::origin_right(), coins, {}).states.back().distribution();
  const WalkCost free{walk::CostForm::signed_kernel, [](int, int) { return 0.0; }};
  CoinOptimizeOptions o;
  o.seed = 2;
  const auto r = optimize_coins(WalkerState::origin_right(), T, target, free, o);
  EXPECT_LT(r.mismatch, 1e-6);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(OptimizeCoins, SingleStepFullTransferToLeft) {
  CVector left = CVector::Zero(3);
  CVector right = CVector::Zero(3);
  right(0) = 1.0;  // site -1, R component
  const WalkerState target(1, left, right);
  CoinOptimizeOptions o;
  o.seed = 5;
  const auto r = optimize_coins(WalkerState::origin_right(), 1, target, {}, o);

  // 1 degree scan over all three angles.
  double scan = std::numeric_limits<double>::infinity();
  const double deg = std::numbers::pi / 180.0;
  for (int i = 0; i < 360; ++i) {
    for (int j = 0; j < 360; j += 15) {
      for (int k = 0; k < 360; k += 15) {
        const std::vector<Coin> c{Coin::from_angles(i * deg, j * deg, k * deg)};
        const auto traj = run(WalkerState::origin_right(), c, {});
        scan = std::min(scan, traj.total_cost + r.penalty * terminal_mismatch(traj.states.back(), target));
      }
    }
  }
  EXPECT_LE(r.objective, scan + 1e-9);
  EXPECT_NEAR(std::abs(r.coins[0].b()), 1.0, 1e-6);
  EXPECT_LT(r.mismatch, 1e-9);
}

TEST(OptimizeCoins, BeatsRandomCoinFamilies) {
  Engine rng(8);
  const int T = 3;
  std::vector<double> target(2 * T + 1, 0.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double total = 0.0;
  for (int x = -T; x <= T; x += 2) total += target[x + T] = u(rng);
  for (double& v : target) v /= total;

  CoinOptimizeOptions o;
  o.seed = 11;
  const auto r = optimize_coins(WalkerState::origin_right(), T, target, {}, o);
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 100000; ++s) {
    std::vector<Coin> coins;
    for (int t = 0; t < T; ++t) coins.push_back(random_coin(rng, t));
    const auto traj = run(WalkerState::origin_right(), coins, {});
    best = std::min(best, traj.total_cost + r.penalty * terminal_mismatch(traj.states.back(), target));
  }
  EXPECT_LE(r.objective, best + 1e-6);
}

TEST(OptimizeCoins, WrongParityTargetWarns) {
  std::vector<double> target{0.0, 1.0, 0.0};  // all mass at x = 0 after one step
  CoinOptimizeOptions o;
  o.budget = 400;
  o.restarts = 2;
  const auto r = optimize_coins(WalkerState::origin_right(), 1, target, {}, o);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(OptimizeCoins, DeterministicPerSeed) {
  const std::vector<double> target{0.25, 0.0, 0.5, 0.0, 0.25};
  CoinOptimizeOptions o;
  o.seed = 42;
  o.budget = 3000;
  const auto a = optimize_coins(WalkerState::origin_right(), 2, target, {}, o);
  const auto b = optimize_coins(WalkerState::origin_right(), 2, target, {}, o);
  EXPECT_EQ(a.angles, b.angles);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_THROW(optimize_coins(WalkerState::origin_right(), 0, target, {}, o), ContractError);
}
