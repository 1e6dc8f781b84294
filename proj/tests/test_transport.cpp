#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "qot/errors.hpp"
#include "qot/transport.hpp"

using namespace qot;
using namespace qot::transport;

namespace {

using Engine = std::mt19937_64;

// Direct formula, written independently of the library's incremental energy.
double oracle_energy(const std::vector<double>& mu, const std::vector<double>& nu, const RMatrix& c, double w,
                     const RMatrix& q) {
  double cost = 0.0;
  double pen = 0.0;
  for (Eigen::Index x = 0; x < q.rows(); ++x) {
    double row = 0.0;
    for (Eigen::Index y = 0; y < q.cols(); ++y) {
      cost += c(x, y) * mu[x] * q(x, y);
      row += mu[x] * q(x, y);
    }
    pen += (row - mu[x]) * (row - mu[x]);
  }
  for (Eigen::Index y = 0; y < q.cols(); ++y) {
    double col = 0.0;
    for (Eigen::Index x = 0; x < q.rows(); ++x) col += mu[x] * q(x, y);
    pen += (col - nu[y]) * (col - nu[y]);
  }
  return cost + w * pen;
}

struct OracleResult {
  RMatrix plan;
  double energy;
  double runner_up;
};

// Enumerates every binary matrix in lexicographic order of its row-major bits.
OracleResult oracle_minimum(const TransportInstance& inst) {
  const auto rows = static_cast<Eigen::Index>(inst.n_source());
  const auto cols = static_cast<Eigen::Index>(inst.n_target());
  const std::size_t n = static_cast<std::size_t>(rows * cols);
  std::vector<int> bits(n, 0);
  OracleResult best{RMatrix(), 1e300, 1e300};
  while (true) {
    RMatrix q(rows, cols);
    for (std::size_t i = 0; i < n; ++i) q(i / cols, i % cols) = bits[i];
    const double e = oracle_energy(inst.mu(), inst.nu(), inst.cost(), inst.penalty_weight(), q);
    if (e < best.energy) {
      best.runner_up = best.energy;
      best.energy = e;
      best.plan = q;
    } else if (e < best.runner_up) {
      best.runner_up = e;
    }
    // Binary increment with the last cell as the least significant digit.
    std::size_t k = n;
    while (k > 0 && bits[k - 1] == 1) bits[--k] = 0;
    if (k == 0) break;
    bits[k - 1] = 1;
  }
  return best;
}

TransportInstance random_instance(std::size_t rows, std::size_t cols, Engine& rng, bool feasible) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, cols - 1);
  std::vector<double> mu(rows), nu(cols, 0.0);
  for (auto& m : mu) m = u(rng);
  if (feasible) {
    for (std::size_t x = 0; x < rows; ++x) nu[pick(rng)] += mu[x];
  } else {
    double total = 0.0;
    for (auto& v : nu) total += (v = u(rng));
    const double s = std::accumulate(mu.begin(), mu.end(), 0.0) / total;
    for (auto& v : nu) v *= s;
  }
  RMatrix c(rows, cols);
  std::uniform_real_distribution<double> cu(0.0, 2.0);
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) = cu(rng);
  }
  return TransportInstance(mu, nu, c);
}

RMatrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  RMatrix m(rows.size(), rows.begin()->size());
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST(TransportInstance, Invariants) {
  EXPECT_THROW(TransportInstance({1.0}, {2.0}, mat({{0}})), ContractError);
  EXPECT_THROW(TransportInstance({-1.0, 2.0}, {1.0}, mat({{0}, {0}})), ContractError);
  EXPECT_THROW(TransportInstance({1.0}, {1.0}, mat({{0, 1}})), DimensionError);
  EXPECT_THROW(TransportInstance({1.0}, {1.0}, mat({{std::nan("")}})), ContractError);
  EXPECT_THROW(TransportInstance({1.0}, {1.0}, mat({{0}}), 0.0), ContractError);
  const TransportInstance inst({0.5, 1.5}, {1.0, 1.0}, mat({{0, 3}, {-2, 0}}));
  EXPECT_TRUE(inst.penalty_weight_defaulted());
  EXPECT_DOUBLE_EQ(inst.penalty_weight(), 1.0 + 3.0 * 1.5);
}

TEST(HamiltonianEnergy, Examples) {
  const TransportInstance one({1.0}, {1.0}, mat({{0}}), 3.0);
  EXPECT_EQ(hamiltonian_energy(one, TransportPlan(mat({{1}}), true)), 0.0);
  EXPECT_EQ(hamiltonian_energy(one, TransportPlan(mat({{0}}), true)), 6.0);
  const TransportInstance two({0.5, 0.5}, {0.5, 0.5}, mat({{0, 1}, {1, 0}}));
  EXPECT_EQ(hamiltonian_energy(two, TransportPlan(mat({{1, 0}, {0, 1}}), true)), 0.0);
  EXPECT_THROW(hamiltonian_energy(two, TransportPlan(mat({{1}}), true)), DimensionError);
}

TEST(TransportPlan, Invariants) {
  EXPECT_THROW(TransportPlan(mat({{0.5}}), true), ContractError);
  EXPECT_THROW(TransportPlan(mat({{1.5}}), false), ContractError);
  EXPECT_NO_THROW(TransportPlan(mat({{0.5}}), false));
  const auto p = TransportPlan::from_bits(2, 3, {0, 1, 0, 1, 0, 0});
  EXPECT_EQ(p.q()(0, 1), 1.0);
  EXPECT_EQ(p.q()(1, 0), 1.0);
  EXPECT_EQ(p.bits(), (std::vector<std::uint8_t>{0, 1, 0, 1, 0, 0}));
}

TEST(Marginals, Examples) {
  const TransportInstance inst({0.25, 0.75}, {0.25, 0.75}, mat({{0, 1}, {1, 0}}));
  const auto id = marginals(inst, TransportPlan(mat({{1, 0}, {0, 1}}), true));
  EXPECT_EQ(id.row_masses, inst.mu());
  EXPECT_EQ(id.col_masses, inst.nu());
  const auto zero = marginals(inst, TransportPlan(mat({{0, 0}, {0, 0}}), true));
  EXPECT_EQ(zero.row_masses, std::vector<double>(2, 0.0));
  EXPECT_EQ(zero.col_masses, std::vector<double>(2, 0.0));
}

TEST(Marginals, MatchDirectSummation) {
  Engine rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = random_instance(3, 3, rng, false);
    RMatrix q(3, 3);
    for (Eigen::Index i = 0; i < 9; ++i) q(i / 3, i % 3) = u(rng);
    const auto m = marginals(inst, TransportPlan(q, false));
    for (int x = 0; x < 3; ++x) {
      EXPECT_NEAR(m.row_masses[x], inst.mu()[x] * (q(x, 0) + q(x, 1) + q(x, 2)), 1e-15);
    }
    for (int y = 0; y < 3; ++y) {
      EXPECT_NEAR(m.col_masses[y], inst.mu()[0] * q(0, y) + inst.mu()[1] * q(1, y) + inst.mu()[2] * q(2, y), 1e-15);
    }
  }
}

TEST(HamiltonianEnergy, DecompositionFromMarginals) {
  Engine rng(22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = random_instance(3, 4, rng, trial % 2 == 0);
    RMatrix q(3, 4);
    for (Eigen::Index i = 0; i < 12; ++i) q(i / 4, i % 4) = u(rng);
    const TransportPlan plan(q, false);
    const auto m = marginals(inst, plan);
    double pen = 0.0;
    for (int x = 0; x < 3; ++x) pen += std::pow(m.row_masses[x] - inst.mu()[x], 2);
    for (int y = 0; y < 4; ++y) pen += std::pow(m.col_masses[y] - inst.nu()[y], 2);
    const auto t = energy_terms(inst, plan);
    EXPECT_NEAR(hamiltonian_energy(inst, plan), t.cost + inst.penalty_weight() * pen, 1e-12);
    EXPECT_NEAR(t.total(), hamiltonian_energy(inst, plan), 1e-12);
    EXPECT_NEAR(hamiltonian_energy(inst, plan), oracle_energy(inst.mu(), inst.nu(), inst.cost(), inst.penalty_weight(), q),
                1e-12);
  }
}

TEST(HamiltonianEnergy, ZeroPenaltyIffMarginalsMatch) {
  Engine rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = random_instance(3, 3, rng, true);
    for (std::uint32_t k = 0; k < 512; k += 7) {
      std::vector<std::uint8_t> bits(9);
      for (int i = 0; i < 9; ++i) bits[i] = (k >> i) & 1u;
      const auto plan = TransportPlan::from_bits(3, 3, bits);
      const auto t = energy_terms(inst, plan);
      const auto m = marginals(inst, plan);
      bool match = true;
      for (int x = 0; x < 3; ++x) match = match && std::abs(m.row_masses[x] - inst.mu()[x]) <= 1e-9;
      for (int y = 0; y < 3; ++y) match = match && std::abs(m.col_masses[y] - inst.nu()[y]) <= 1e-9;
      EXPECT_EQ(t.row_penalty + t.col_penalty <= 1e-12, match);
    }
  }
}

TEST(HamiltonianEnergy, MonotoneInPenaltyWeight) {
  Engine rng(24);
  for (int trial = 0; trial < 30; ++trial) {
    const auto base = random_instance(2, 3, rng, false);
    const auto plan = TransportPlan::from_bits(2, 3, {1, 0, 0, 1, 1, 0});
    double prev = -1e300;
    for (double w : {0.1, 1.0, 2.0, 10.0, 100.0}) {
      const TransportInstance inst(base.mu(), base.nu(), base.cost(), w);
      const double e = hamiltonian_energy(inst, plan);
      EXPECT_GE(e, prev);
      prev = e;
    }
  }
}

TEST(SolveExhaustive, Examples) {
  const TransportInstance inst({1, 1}, {1, 1}, mat({{0, 5}, {5, 0}}), 10.0);
  const auto r = solve_exhaustive(inst);
  EXPECT_EQ(r.energy, 0.0);
  EXPECT_EQ(r.plan.q(), mat({{1, 0}, {0, 1}}));

  // Zero cost only along the permutation 0->2, 1->0, 2->1.
  const TransportInstance perm({1, 1, 1}, {1, 1, 1}, mat({{4, 4, 0}, {0, 4, 4}, {4, 0, 4}}));
  const auto rp = solve_exhaustive(perm);
  EXPECT_EQ(rp.plan.q(), mat({{0, 0, 1}, {1, 0, 0}, {0, 1, 0}}));
  EXPECT_EQ(rp.energy, 0.0);
}

TEST(SolveExhaustive, LexicographicTieBreak) {
  // Identity (1001) and swap (0110) both reach energy 0; 0110 is smaller.
  const TransportInstance inst({1, 1}, {1, 1}, mat({{0, 0}, {0, 0}}));
  EXPECT_EQ(solve_exhaustive(inst).plan.q(), mat({{0, 1}, {1, 0}}));
}

TEST(SolveExhaustive, SizeCap) {
  const TransportInstance inst(std::vector<double>(5, 1.0), std::vector<double>(5, 1.0), RMatrix::Zero(5, 5));
  EXPECT_THROW(solve_exhaustive(inst), SizeError);
  EXPECT_THROW(solve_exhaustive(TransportInstance({1, 1}, {1, 1}, RMatrix::Zero(2, 2)), 3), SizeError);
}

TEST(SolveExhaustive, MatchesEnumerationOracle) {
  Engine rng(25);
  for (std::size_t rows = 1; rows <= 3; ++rows) {
    for (std::size_t cols = 1; cols <= 4; ++cols) {
      for (int trial = 0; trial < 6; ++trial) {
        const auto inst = random_instance(rows, cols, rng, trial % 2 == 0);
        const auto oracle = oracle_minimum(inst);
        const auto r = solve_exhaustive(inst);
        EXPECT_NEAR(r.energy, oracle.energy, 1e-9 * (1.0 + std::abs(oracle.energy)));
        if (oracle.runner_up - oracle.energy > 1e-9) EXPECT_EQ(r.plan.q(), oracle.plan);
      }
    }
  }
}

TEST(SolveAnnealing, DeterministicAndBoundedBelow) {
  Engine rng(26);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = random_instance(3, 3, rng, true);
    const auto a = solve_annealing(inst, {}, 99);
    const auto b = solve_annealing(inst, {}, 99);
    EXPECT_EQ(a.plan, b.plan);
    EXPECT_EQ(a.energy, b.energy);
    EXPECT_EQ(a.best_restart, b.best_restart);
    EXPECT_GE(a.energy, solve_exhaustive(inst).energy - 1e-9);
    EXPECT_NEAR(a.energy, hamiltonian_energy(inst, a.plan), 1e-9);
  }
}

TEST(SolveAnnealing, SingleCellInOneSweep) {
  const TransportInstance inst({1.0}, {1.0}, mat({{2}}));
  AnnealSchedule s;
  s.sweeps = 1;
  s.restarts = 1;
  const auto r = solve_annealing(inst, s, 5);
  EXPECT_EQ(r.plan.q(), mat({{1}}));
  EXPECT_EQ(r.energy, 2.0);
}

TEST(SolveAnnealing, FindsOptimumOnSmallInstances) {
  Engine rng(27);
  int hits = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    const auto inst = random_instance(3, 4, rng, trial % 2 == 0);
    const auto ex = solve_exhaustive(inst);
    const auto an = solve_annealing(inst, {}, static_cast<std::uint64_t>(trial));
    if (an.energy <= ex.energy + 1e-9) ++hits;
  }
  EXPECT_GE(hits, trials - 1);
}

TEST(SolveAnnealing, RejectsBadSchedule) {
  const TransportInstance inst({1.0}, {1.0}, mat({{0}}));
  AnnealSchedule s;
  s.restarts = 0;
  EXPECT_THROW(solve_annealing(inst, s, 0), ContractError);
  s = {};
  s.t_final = 0.0;
  EXPECT_THROW(solve_annealing(inst, s, 0), ContractError);
}
